"""Run the shipped configs and print the headline numbers.

    python scripts/reproduce_numbers.py [--out out] [--skip tf1d ...]

Each pipeline writes its artifacts and manifest under ``<out>/<name>``.
Total runtime on one core is about 10 minutes; the deep TF1D run is the
longest at about 5 minutes.
"""
import argparse
from pathlib import Path
import time

import numpy as np

from darksol.config import load_config
from darksol.pipelines import (
    run_critical_distance,
    run_fig2c,
    run_merge,
    run_single_soliton_frequency,
)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def critical(out):
    d = run_critical_distance(load_config(CONFIGS / "critical_distance.json"), out)
    return [f"critical distance: {d:.2f} um"]


def fig2c(name):
    def run(out):
        res = run_fig2c(load_config(CONFIGS / f"{name}.json"), out)
        s = res.sweep.single
        lines = [f"{name}: single soliton nu_1s = {s.nu_1s_hz:.2f} Hz, "
                 f"ratio to nu_z/sqrt2 = {s.ratio:.4f}, mu = {s.mu_hz:.1f} Hz"]
        lines.append("  A [um]   pair ratio   model/NPSE - 1")
        for row, sr in zip(res.table, res.sweep.rows):
            lines.append(f"  {row[0]:6.2f}   {sr.ratio:10.4f}   {row[4] / row[3] - 1:+.4f}")
        return lines
    return run


def gpe(out):
    res = run_single_soliton_frequency(
        load_config(CONFIGS / "paper_53_890.json", ["model.kind=gpe1d"]), out)
    return [f"1D GPE single soliton ratio (53/890 Hz): {res.ratio:.4f}"]


def tf1d(out):
    res = run_single_soliton_frequency(load_config(CONFIGS / "tf1d_deep.json"), out)
    return [f"deep TF1D single soliton ratio: {res.ratio:.4f}"]


def merge(out):
    s = run_merge(load_config(CONFIGS / "merge_paper.json"), out).summary
    fit = s["fit"]
    nu = "n/a" if fit is None else f"{fit['soliton_frequency']:.2f} Hz"
    return [f"merge: modal soliton count {s['modal_soliton_count']}, "
            f"even fraction {s['even_count_fraction']:.2f}, "
            f"pair centre {s['mean_pair_centre_um']:.3f} um, pair frequency {nu}"]


RUNS = {"critical": critical, "npse_53_890": fig2c("paper_53_890"),
        "npse_58_408": fig2c("paper_58_408"), "gpe": gpe, "tf1d": tf1d, "merge": merge}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="out", help="root output directory")
    parser.add_argument("--skip", nargs="*", default=[], choices=sorted(RUNS))
    args = parser.parse_args()
    np.set_printoptions(precision=4)
    for name, run in RUNS.items():
        if name in args.skip:
            continue
        start = time.perf_counter()
        lines = run(Path(args.out) / name)
        for line in lines:
            print(line)
        print(f"  ({time.perf_counter() - start:.0f} s)", flush=True)


if __name__ == "__main__":
    main()
