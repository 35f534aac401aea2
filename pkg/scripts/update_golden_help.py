"""Regenerate the golden --help files checked by tests/test_cli.py."""

from __future__ import annotations

import argparse
from pathlib import Path

from accelstate.cli import SUBCOMMANDS, build_parser


def help_texts() -> dict[str, str]:
    parser = build_parser()
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    texts = {"accelstate": parser.format_help()}
    for name in SUBCOMMANDS:
        texts[name] = sub.choices[name].format_help()
    return texts


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests" / "golden"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in help_texts().items():
        (out / f"help_{name}.txt").write_text(text)
        print(out / f"help_{name}.txt")


if __name__ == "__main__":
    main()
