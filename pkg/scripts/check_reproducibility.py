#!/usr/bin/env python3
"""Run one experiment twice with different NODAL_LAB_THREADS and compare deterministic outputs byte by byte.

    python scripts/check_reproducibility.py configs/e3_quick.toml
"""
import filecmp
import os
import sys
import tempfile
from pathlib import Path

from nodal_lab import experiments as ex
from nodal_lab.cli import load_config


def main(argv) -> int:
    cfg = load_config(argv[1] if len(argv) > 1 else None, None if len(argv) > 1 else "E1")
    dirs = []
    root = Path(tempfile.mkdtemp())
    for threads in ("1", str(max(2, os.cpu_count() or 2))):
        os.environ["NODAL_LAB_THREADS"] = threads
        dirs.append(ex.write_report(ex.run(cfg), root / threads))
    names = sorted(p.name for p in dirs[0].iterdir() if p.name != "timing.json")
    _, mismatch, errors = filecmp.cmpfiles(dirs[0], dirs[1], names, shallow=False)
    for n in names:
        print(f"{'DIFF' if n in mismatch + errors else 'same'}  {n}")
    return 1 if mismatch or errors else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
