#!/usr/bin/env python3
"""Vertical ground forces, stance schedule and QP diagnostics of one run.

    python plots/contact_forces.py out/trot-gp1-low.csv -o contacts.png
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

LEGS = ("lf", "rf", "lh", "rh")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("log", type=Path)
    ap.add_argument("-o", "--output", type=Path, default=Path("contact_forces.png"))
    args = ap.parse_args()

    df = pd.read_csv(args.log)
    fig, axes = plt.subplots(4, 1, sharex=True, figsize=(9, 9))
    for leg in LEGS:
        axes[0].plot(df.t, df[f"grf_{leg}_z"], label=leg.upper())
    axes[0].set_ylabel("normal force [N]")
    axes[0].legend(fontsize="small", ncol=4)
    for k, leg in enumerate(LEGS):
        axes[1].fill_between(df.t, k, k + 0.8 * df[f"stance_{leg}"], step="post")
    axes[1].set_yticks([k + 0.4 for k in range(4)], [l.upper() for l in LEGS])
    axes[1].set_ylabel("stance")
    axes[2].plot(df.t, df.qp_iterations)
    axes[2].set_ylabel("QP iterations")
    axes[3].semilogy(df.t, df.qp_residual.clip(lower=1e-16), label="residual")
    axes[3].semilogy(df.t, df.max_violation.clip(lower=1e-16), label="max violation")
    axes[3].set_ylabel("QP accuracy")
    axes[3].set_xlabel("t [s]")
    axes[3].legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
