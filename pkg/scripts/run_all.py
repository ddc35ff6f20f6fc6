#!/usr/bin/env python3
"""Run every shipped experiment config and collect reports under reports/.

Exits nonzero if any suite fails a hard check.
"""

import pathlib
import sys

from gexpect.cli import main as cli_main

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main() -> int:
    out = str(ROOT / "reports")
    worst = 0
    for cfg in sorted((ROOT / "configs").glob("*.yaml")):
        code = cli_main(["--config", str(cfg), "--out", out])
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
