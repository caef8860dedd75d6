"""Command-line entry point: querygames verify | bench | play | serve."""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional

from .core import BudgetExceeded, QueryGameError
from .harness import GameSpec, cmd_bench, cmd_play, cmd_serve, cmd_verify


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="querygames",
        description="Solvers and verification for adaptive query games "
                    "(coin weighing, Mastermind, sparse set query).")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_spec_args(p, lists=False):
        p.add_argument("--game", required=True)
        kind = _int_list if lists else int
        p.add_argument("--n", type=kind, default=None)
        p.add_argument("--k", type=kind, default=None)
        p.add_argument("--d", type=kind, default=None)
        p.add_argument("--W", type=kind, default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--no-blanks", action="store_true",
                       help="forbid blank entries in Mastermind queries")

    p_verify = sub.add_parser("verify", help="check decode correctness and ceilings")
    add_spec_args(p_verify)
    p_verify.add_argument("--exhaustive", action="store_true")
    p_verify.add_argument("--trials", type=int, default=100)
    p_verify.add_argument("--budget", type=int, default=1 << 20,
                          help="exhaustive-mode codeword cap")

    p_bench = sub.add_parser("bench", help="measure query counts over a grid")
    add_spec_args(p_bench, lists=True)
    p_bench.add_argument("--trials", type=int, default=1)
    p_bench.add_argument("--out", required=True, help="CSV output path")
    p_bench.add_argument("--no-figures", action="store_true")

    p_play = sub.add_parser("play", help="interactive session over stdio JSON lines")
    add_spec_args(p_play)

    p_serve = sub.add_parser("serve", help="HTTP session server (loopback)")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=None,
                         help="port (falls back to QUERYGAMES_PORT, then 8736)")

    return parser


def spec_from_args(args, n=None, k=None) -> GameSpec:
    return GameSpec(game=args.game,
                    n=n if n is not None else args.n,
                    k=k if k is not None else args.k,
                    d=args.d, W=args.W,
                    allow_blanks=not args.no_blanks, seed=args.seed)


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            spec = spec_from_args(args)
            report = cmd_verify(spec, exhaustive=args.exhaustive,
                                trials=args.trials, budget=args.budget,
                                out=sys.stdout)
            return 0 if report.ok else 1

        if args.command == "bench":
            ns = args.n if args.n is not None else [None]
            ks = args.k if args.k is not None else [None]
            specs = []
            for n in ns:
                for k in ks:
                    spec = GameSpec(game=args.game, n=n, k=k,
                                    d=args.d[0] if args.d else None,
                                    W=args.W[0] if args.W else None,
                                    allow_blanks=not args.no_blanks,
                                    seed=args.seed)
                    spec.validate()
                    specs.append(spec)
            rows = cmd_bench(specs, args.trials, args.out,
                             figures=not args.no_figures)
            print(f"wrote {len(rows)} rows to {args.out}")
            return 0

        if args.command == "play":
            spec = spec_from_args(args)
            return cmd_play(spec, sys.stdin, sys.stdout)

        if args.command == "serve":
            port = args.port
            if port is None:
                port = int(os.environ.get("QUERYGAMES_PORT", "8736"))
            cmd_serve(args.host, port, out=sys.stdout)
            return 0
    except BudgetExceeded as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    except (ValueError, QueryGameError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
