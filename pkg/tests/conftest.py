from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from querygames.core import SyntheticOracle, run_strategy
from querygames.harness import schedule_monitor


def exhaustive_decode(game, builder, monitors=(schedule_monitor,)):
    """Run the solver on every codeword; return (count, max queries used)."""
    count = 0
    max_queries = 0
    for codeword in game.codewords():
        strategy = builder()
        fragment, transcript = run_strategy(strategy, SyntheticOracle(game, codeword),
                                            monitors=monitors)
        assert dict(fragment) == game.codeword_mapping(codeword), \
            f"decode mismatch for {codeword!r}: {fragment!r}"
        if strategy.ceiling is not None:
            assert len(transcript) <= strategy.ceiling
        count += 1
        max_queries = max(max_queries, len(transcript))
    return count, max_queries


def random_decode(game, builder, rng, trials, monitors=(schedule_monitor,)):
    max_queries = 0
    for _ in range(trials):
        codeword = game.random_codeword(rng)
        strategy = builder()
        fragment, transcript = run_strategy(strategy, SyntheticOracle(game, codeword),
                                            monitors=monitors)
        assert dict(fragment) == game.codeword_mapping(codeword)
        if strategy.ceiling is not None:
            assert len(transcript) <= strategy.ceiling
        max_queries = max(max_queries, len(transcript))
    return max_queries
