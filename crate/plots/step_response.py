#!/usr/bin/env python3
"""Simulated vs template x displacement of trunk and end-effector for step runs.

    python plots/step_response.py out/stand-step-base-inertia-*.csv -o step.png
"""

import argparse
from pathlib import Path

import matplotlib.pyplot as plt

from _common import load_run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("logs", nargs="+", type=Path)
    ap.add_argument("-o", "--output", type=Path, default=Path("step_response.png"))
    args = ap.parse_args()

    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
    for path in args.logs:
        df = load_run(path)
        label = path.stem
        for ax, body in zip(axes, ("xb", "xe")):
            (line,) = ax.plot(df.t, df[f"d{body}_x"], label=f"{label} sim")
            ax.plot(df.t, df[f"dref_{body}_x"], "--", color=line.get_color(), label=f"{label} template")
    axes[0].set_ylabel("trunk x [m]")
    axes[1].set_ylabel("end-effector x [m]")
    axes[1].set_xlabel("t [s]")
    axes[0].legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
