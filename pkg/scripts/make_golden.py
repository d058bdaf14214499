"""Regenerate the golden decoherence CSVs and their SHA-256 manifest.

Usage: python scripts/make_golden.py [--check]
"""
from __future__ import annotations

import argparse
import hashlib
from pathlib import Path

from susydeco import commands
from susydeco.cli import table_to_csv, write_atomic
from susydeco.config import load_config

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ["quartic_C0p1.toml", "quartic_C0p5.toml", "quartic_C1p0.toml"]
GOLDEN = ROOT / "tests" / "golden"
MANIFEST = GOLDEN / "SHA256SUMS"


def render(config_name: str) -> str:
    sc = commands.resolve(load_config(ROOT / "configs" / config_name))
    table, _ = commands.cmd_decoherence(sc)
    return table_to_csv(table)


def sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--check", action="store_true", help="compare instead of overwrite")
    args = ap.parse_args(argv)
    lines = []
    status = 0
    for name in CONFIGS:
        text = render(name)
        target = GOLDEN / name.replace(".toml", ".csv")
        if args.check:
            same = target.exists() and target.read_text() == text
            print(f"{target.name}: {'identical' if same else 'DIFFERS'}")
            status |= not same
        else:
            write_atomic(target, text)
        lines.append(f"{sha256(text)}  {target.name}\n")
    if not args.check:
        write_atomic(MANIFEST, "".join(lines))
    return status


if __name__ == "__main__":
    raise SystemExit(main())
