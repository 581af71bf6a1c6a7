#!/usr/bin/env python3
"""Run the shipped Stackelberg-Nash benchmark and print the equilibrium summary."""

import sys
from pathlib import Path

from degenash.cli import main

if __name__ == "__main__":
    root = Path(__file__).resolve().parent.parent
    sys.exit(main(["game", "--config", str(root / "configs" / "benchmark_game.yaml")]))
