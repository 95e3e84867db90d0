"""Shared loading helpers for the plot scripts."""

import matplotlib

matplotlib.use("Agg")

import pandas as pd  # noqa: E402


def load_run(path):
    """A per-run log with positions re-expressed relative to the first sample."""
    df = pd.read_csv(path)
    for body in ("xb", "xe"):
        for axis in "xyz":
            col = f"{body}_{axis}"
            ref = f"ref_{body}_{axis}"
            df[f"d{col}"] = df[col] - df[col].iloc[0]
            df[f"dref_{col}"] = df[ref] - df[ref].iloc[0]
    return df
