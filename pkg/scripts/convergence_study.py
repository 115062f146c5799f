"""Numerical convergence of the single-soliton NPSE frequency.

    python scripts/convergence_study.py [--config configs/paper_53_890.json] [--csv out.csv]

Varies the grid resolution (points per healing length) and the phase-step
safety factor around the defaults and reports the frequency ratio to
nu_z/sqrt2 for each setting. Runtime is about one minute per row.
"""
import argparse
from pathlib import Path

import numpy as np

from darksol.config import load_config
from darksol.pipelines import run_single_soliton_frequency

DEFAULT_CONFIG = Path(__file__).resolve().parents[1] / "configs" / "paper_53_890.json"

SETTINGS = [
    (2.0, 0.05),
    (4.0, 0.05),
    (8.0, 0.05),
    (4.0, 0.1),
    (4.0, 0.025),
]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=str(DEFAULT_CONFIG))
    parser.add_argument("--csv", default=None, help="optional CSV output path")
    args = parser.parse_args()
    rows = []
    print("points/xi  phase_safety  n_points  ratio     uncertainty [Hz]")
    for pph, safety in SETTINGS:
        cfg = load_config(args.config, [f"grid.points_per_healing_length={pph}",
                                        f"time.phase_safety={safety}"])
        res = run_single_soliton_frequency(cfg)
        n = res.ground.psi.grid.n_points
        rows.append([pph, safety, n, res.ratio, res.fit.uncertainty])
        print(f"{pph:9.1f}  {safety:12.3f}  {n:8d}  {res.ratio:.5f}  {res.fit.uncertainty:.4f}",
              flush=True)
    if args.csv:
        np.savetxt(args.csv, np.array(rows), delimiter=",", fmt="%.10g", comments="# ",
                   header="points_per_healing_length [1],phase_safety [1],n_points [1],"
                          "ratio [1],uncertainty [Hz]")


if __name__ == "__main__":
    main()
