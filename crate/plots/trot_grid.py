#!/usr/bin/env python3
"""Bar chart of template-relative RMS errors over the trot grid summary.

    python plots/trot_grid.py out/summary.csv -o trot_grid.png
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("summary", type=Path)
    ap.add_argument("-o", "--output", type=Path, default=Path("trot_grid.png"))
    args = ap.parse_args()

    df = pd.read_csv(args.summary)
    df = df[df.kind == "trot"]
    if df.empty:
        raise SystemExit(f"{args.summary}: no trot rows")
    gps = sorted(df.gp.astype(int).unique())
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    width = 0.38
    x = np.arange(len(gps))
    for ax, col, title in zip(axes, ("rms_base", "rms_ee"), ("trunk", "end-effector")):
        for k, level in enumerate(("low", "high")):
            rows = df[df.arm_mass == level].set_index("gp").reindex(gps)
            ax.bar(x + (k - 0.5) * width, rows[col] * 1e3, width, label=f"EE mass {level}")
        ax.set_xticks(x, [f"GP{g}" for g in gps])
        ax.set_ylabel("RMS error [mm]")
        ax.set_title(title)
    axes[0].legend()
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
