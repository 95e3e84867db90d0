#!/usr/bin/env python3
"""Chirp run: x/y tracking of trunk and end-effector and the applied force.

    python plots/chirp.py out/stand-chirp-nominal.csv -o chirp.png
"""

import argparse
from pathlib import Path

import matplotlib.pyplot as plt

from _common import load_run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("log", type=Path)
    ap.add_argument("-o", "--output", type=Path, default=Path("chirp.png"))
    args = ap.parse_args()

    df = load_run(args.log)
    fig, axes = plt.subplots(5, 1, sharex=True, figsize=(9, 10))
    panels = [("xb", "x"), ("xb", "y"), ("xe", "x"), ("xe", "y")]
    for ax, (body, axis) in zip(axes, panels):
        ax.plot(df.t, df[f"d{body}_{axis}"], label="sim")
        ax.plot(df.t, df[f"dref_{body}_{axis}"], "--", label="template")
        err = df[f"d{body}_{axis}"] - df[f"dref_{body}_{axis}"]
        ax.plot(df.t, err, ":", label="error")
        name = "trunk" if body == "xb" else "end-effector"
        ax.set_ylabel(f"{name} {axis} [m]")
    axes[0].legend(fontsize="small", ncol=3)
    axes[4].plot(df.t, df.fe_x, label="x")
    axes[4].plot(df.t, df.fe_y, label="y")
    axes[4].set_ylabel("F_e [N]")
    axes[4].set_xlabel("t [s]")
    axes[4].legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
