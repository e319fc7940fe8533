#!/usr/bin/env python3
"""Regenerate the plot-ready datasets for every experiment pipeline.

Runs the CLI with the bundled operating-point configuration into one
directory per experiment:

    ramsey/      angle-resolved fringe traces, squeezing off and on
    tomography/  Bloch-vector decay trajectory
    wigner/      Wigner grid of the squeezed reservoir state
    sweeps/      detuning sweep with raw trace grids, and the gain sweep
    spectrum/    polariton levels and transition elements
    estimate/    inverse pipeline demo on simulated traces
    validate/    acceptance report

Usage: python scripts/run_experiments.py [OUTDIR]
"""

import sys
from pathlib import Path

from sqbloch.cli import main

JOBS = [
    ("ramsey", ["ramsey"]),
    ("tomography", ["trajectory"]),
    ("wigner", ["wigner"]),
    ("sweeps", ["sweep-detuning"]),
    ("sweeps", ["sweep-gain"]),
    ("spectrum", ["polariton"]),
    ("estimate", ["estimate"]),
    ("validate", ["validate"]),
]


def run(out_root: Path) -> int:
    worst = 0
    for subdir, command in JOBS:
        print(f"== {' '.join(command)} -> {out_root / subdir}")
        code = main(command + ["--out", str(out_root / subdir)])
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("experiments")
    sys.exit(run(root))
