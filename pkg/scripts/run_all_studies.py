#!/usr/bin/env python3
"""Run every shipped study config and print one verdict line per study."""

import sys
from pathlib import Path

from degenash.cli import main

STUDIES = [
    "study_convergence.yaml",
    "study_energy.yaml",
    "study_coercivity.yaml",
    "study_inclusion.yaml",
    "study_embedding.yaml",
    "study_muckenhoupt.yaml",
]

if __name__ == "__main__":
    root = Path(__file__).resolve().parent.parent
    worst = 0
    for name in STUDIES:
        code = main(["study", "--config", str(root / "configs" / name)])
        worst = max(worst, code)
    sys.exit(worst)
