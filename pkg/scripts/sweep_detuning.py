#!/usr/bin/env python3
"""Sweep the emitter-pair detuning and plot predicted visibility.

Evaluates both the closed-form visibility and the direct numerical
quadrature of the overlap integral across a detuning range, writes the
curve to CSV, and renders an SVG chart.

    python scripts/sweep_detuning.py --out-dir results/ --max-detuning-uev 10
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

import homsim as hs
from homsim.svgplot import line_chart_svg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--max-detuning-uev", type=float, default=10.0)
    parser.add_argument("--points", type=int, default=101)
    parser.add_argument("--pol-overlap", type=float, default=1.0)
    args = parser.parse_args(argv)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    e1 = hs.EmitterSpec(energy_uev=0.0, t1_fast_ps=720.0, t1_slow_ps=12000.0,
                        slow_fraction=0.02, t2_ps=100.0)
    e2 = hs.EmitterSpec(energy_uev=0.0, t1_fast_ps=600.0, t1_slow_ps=12000.0,
                        slow_fraction=0.012, t2_ps=440.0)

    detunings = np.linspace(0.0, args.max_detuning_uev, args.points)
    closed = np.array([
        hs.visibility_closed_form(e1, e2, delta_uev=d, pol_overlap=args.pol_overlap)
        for d in detunings
    ])
    numeric = np.array([
        hs.visibility_numeric(e1, e2, delta_uev=d, pol_overlap=args.pol_overlap)
        for d in detunings
    ])
    worst = float(np.max(np.abs(closed - numeric)))

    csv_path = out / "detuning_sweep.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["detuning_uev", "v_closed_form", "v_numeric"])
        for d, vc, vn in zip(detunings, closed, numeric):
            writer.writerow(["%.6f" % d, "%.9f" % vc, "%.9f" % vn])

    line_chart_svg(
        out / "detuning_sweep.svg",
        detunings,
        closed,
        x_label="detuning (ueV)",
        y_label="visibility",
        title="Predicted two-emitter visibility vs detuning",
    )

    print("swept %d points over [0, %g] ueV" % (args.points, args.max_detuning_uev))
    print("V(0) = %.6f, V(%g) = %.6f" % (closed[0], args.max_detuning_uev, closed[-1]))
    print("max |closed - numeric| = %.3e" % worst)
    print("wrote %s and %s" % (csv_path, out / "detuning_sweep.svg"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
