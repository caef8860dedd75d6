"""Verification runner, benchmark emitter, and interactive session protocol.

Sessions drive a solver one query at a time against a human (or scripted)
Codemaker over line-delimited JSON or HTTP.  Zero-queries are answered
automatically (their answer is forced by the game laws) and recorded in the
transcript, so the other side only ever sees queries that carry information.
"""

from __future__ import annotations

import json
import math
import random
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Callable, Optional, Sequence

from .core import (BudgetExceeded, QueryGameError, Report, Step, Strategy,
                   SyntheticOracle, Transcript, TranscriptEntry, ZERO,
                   check_step, info_lower_bound, run_strategy, step_cap_for)
from .coins import CoinGame, solve_coins, solve_sparse, solve_weighted
from .mastermind import MastermindGame, solve_bp, solve_perm, solve_wp
from .setquery import SetQueryGame, solve_setquery
from .schedules import weight_of_bound

GAMES = ("coins", "coins-sparse", "coins-weighted", "mastermind-perm",
         "mastermind-bp", "mastermind-wp", "setquery")

CONSISTENCY_CAP = 10 ** 6


@dataclass
class GameSpec:
    """Which game to play and with what parameters."""

    game: str
    n: Optional[int] = None
    k: Optional[int] = None
    d: Optional[int] = None
    W: Optional[int] = None
    allow_blanks: bool = True
    seed: int = 0

    def validate(self) -> None:
        if self.game not in GAMES:
            raise ValueError(f"unknown game {self.game!r}; choose from {GAMES}")
        need = {"coins": ("n",), "coins-sparse": ("n", "d"),
                "coins-weighted": ("n", "W"), "mastermind-perm": ("n",),
                "mastermind-bp": ("n", "k"), "mastermind-wp": ("n", "k"),
                "setquery": ("n", "k")}[self.game]
        for attr in need:
            value = getattr(self, attr)
            if value is None or value < 0:
                raise ValueError(f"{self.game} requires --{attr}")
        if self.game == "coins-sparse" and not 1 <= self.d <= self.n:
            raise ValueError("coins-sparse requires 1 <= d <= n")
        if self.game == "setquery" and self.k < self.n:
            raise ValueError("setquery requires k >= n")
        if self.game in ("coins", "mastermind-perm") and self.n < 1:
            raise ValueError("need n >= 1")

    def build_game(self):
        self.validate()
        if self.game == "coins":
            return CoinGame(tuple(range(1, self.n + 1)))
        if self.game == "coins-sparse":
            return CoinGame(tuple(range(1, self.n + 1)), ("sparse", self.d))
        if self.game == "coins-weighted":
            return CoinGame(tuple(range(1, self.n + 1)), ("weighted", self.W))
        if self.game == "mastermind-perm":
            return MastermindGame(self.n, self.n, "bp", "perm")
        if self.game == "mastermind-bp":
            return MastermindGame(self.n, self.k, "bp")
        if self.game == "mastermind-wp":
            return MastermindGame(self.n, self.k, "wp")
        return SetQueryGame(self.k, self.n)

    def build_strategy(self, game=None) -> Strategy:
        game = game if game is not None else self.build_game()
        if self.game == "coins":
            return solve_coins(self.n, game)
        if self.game == "coins-sparse":
            return solve_sparse(self.n, self.d, game)
        if self.game == "coins-weighted":
            return solve_weighted(self.n, self.W, game)
        if self.game == "mastermind-perm":
            return solve_perm(self.n, self.allow_blanks, game)
        if self.game == "mastermind-bp":
            return solve_bp(self.n, self.k, self.allow_blanks, game)
        if self.game == "mastermind-wp":
            return solve_wp(self.n, self.k, game)
        return solve_setquery(self.k, self.n, game)

    def to_dict(self) -> dict:
        out = {"game": self.game, "seed": self.seed, "allow_blanks": self.allow_blanks}
        for attr in ("n", "k", "d", "W"):
            if getattr(self, attr) is not None:
                out[attr] = getattr(self, attr)
        return out

    @staticmethod
    def from_dict(data: dict) -> "GameSpec":
        spec = GameSpec(game=data.get("game", ""),
                        n=data.get("n"), k=data.get("k"), d=data.get("d"),
                        W=data.get("W"),
                        allow_blanks=bool(data.get("allow_blanks", True)),
                        seed=int(data.get("seed", 0)))
        spec.validate()
        return spec


def decode_view(spec: GameSpec, game, fragment: dict) -> list:
    """Render a decoded fragment as the game's natural codeword shape."""
    if spec.game.startswith("coins"):
        return [fragment[c] for c in game.coins]
    if spec.game.startswith("mastermind"):
        return [fragment[p] for p in range(game.n)]
    return sorted(e for e, v in fragment.items() if v == 1)


def schedule_monitor(t: int, step: Step, answer: int) -> None:
    """Answers at schedule slots must respect the slot's ceiling."""
    if step.slot is not None:
        x, y = step.slot
        ceiling = (1 << x) - 1 if y == 0 else 0
        if answer > ceiling:
            raise QueryGameError(f"slot ({x},{y}) answered {answer} > {ceiling}")


class Session:
    """One solver run awaiting answers from an external Codemaker."""

    def __init__(self, spec: GameSpec, session_id: str = ""):
        spec.validate()
        self.spec = spec
        self.id = session_id
        self.game = spec.build_game()
        self.strategy = spec.build_strategy(self.game)
        self.gen = self.strategy.run()
        self.transcript: list[dict] = []
        self.status = "awaiting-answer"
        self.current: Optional[Step] = None
        self.result: Optional[list] = None
        self.error: Optional[str] = None
        self.cap = step_cap_for(self.strategy.ceiling)
        self.candidates: Optional[list] = None
        count = self.game.codeword_count()
        if count <= CONSISTENCY_CAP:
            self.candidates = list(self.game.codewords())
        self.lock = threading.Lock()
        self._advance(None)

    # -- protocol steps -----------------------------------------------------

    def _advance(self, answer: Optional[int]) -> None:
        try:
            while True:
                if answer is None:
                    step = next(self.gen)
                else:
                    step = self.gen.send(answer)
                if len(self.transcript) >= self.cap:
                    raise QueryGameError("step cap exceeded")
                if step.is_zero():
                    self._record(step, 0, auto=True)
                    answer = 0
                    continue
                self.current = step
                return
        except StopIteration as stop:
            self.current = None
            self.status = "decoded"
            self.result = decode_view(self.spec, self.game, dict(stop.value))
        except QueryGameError as exc:
            self.current = None
            self.status = "error"
            self.error = str(exc)

    def _record(self, step: Step, answer: int, raw=None, auto: bool = False) -> None:
        entry = {"t": len(self.transcript) + 1,
                 "query": self.render_query(step),
                 "answer": answer}
        if raw is not None:
            entry["raw"] = raw
        if step.bound is not None:
            entry["bound"] = step.bound
        if auto:
            entry["auto"] = True
        self.transcript.append(entry)

    def render_query(self, step: Step) -> dict:
        if step.is_zero():
            return {"zero": True}
        view = self.game.render_query(step.query)
        if self.spec.game == "mastermind-wp":
            view["feedback"] = step.feedback
        return view

    def query_message(self) -> dict:
        if self.status == "decoded":
            return {"type": "decoded", "codeword": self.result,
                    "queries_used": len(self.transcript)}
        if self.status == "error":
            return {"type": "error", "message": self.error or "internal error"}
        msg = {"type": "query", "t": len(self.transcript) + 1,
               "query": self.render_query(self.current)}
        if self.current.bound is not None:
            msg["bound"] = self.current.bound
        return msg

    def _projected(self, value) -> tuple[int, Any]:
        """Convert a submitted value into what the strategy consumes."""
        step = self.current
        if self.spec.game == "mastermind-wp":
            if (not isinstance(value, (list, tuple)) or len(value) != 2
                    or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)):
                raise ValueError("white-peg answers are [black, white] pairs")
            black, white = value
            if black < 0 or white < 0 or black + white > self.game.n:
                raise ValueError(f"peg counts must satisfy 0 <= black+white <= {self.game.n}")
            return (black if step.feedback == "bp" else black + white), (black, white)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError("answers are integers")
        return value, value

    def _consistent(self, step: Step, raw) -> bool:
        if self.candidates is None:
            return True
        if self.spec.game == "mastermind-wp":
            black, white = raw
            survivors = [cw for cw in self.candidates
                         if self.game.peg_pair(cw, step.query) == (black, white)]
        else:
            survivors = [cw for cw in self.candidates
                         if self.game.evaluate(cw, step.query, step.feedback) == raw]
        if not survivors:
            return False
        self.candidates = survivors
        return True

    def submit(self, value) -> dict:
        with self.lock:
            return self._submit_locked(value)

    def _submit_locked(self, value) -> dict:
        if self.status == "decoded":
            return {"type": "error", "message": "session already decoded"}
        if self.status == "error":
            return {"type": "error", "message": self.error or "session failed"}
        step = self.current
        try:
            projected, raw = self._projected(value)
        except ValueError as exc:
            return {"type": "error", "message": str(exc)}
        if projected < 0 or (step.bound is not None and projected > step.bound):
            hi = step.bound if step.bound is not None else "?"
            return {"type": "error", "message": f"answer out of range 0..{hi}"}
        if not self._consistent(step, raw):
            return {"type": "error",
                    "message": "answer is inconsistent with every remaining codeword"}
        try:
            check_step(step, projected)
        except QueryGameError as exc:
            return {"type": "error", "message": str(exc)}
        self._record(step, projected, raw=raw if raw != projected else None)
        self._advance(projected)
        return self.query_message()

    def transcript_view(self) -> dict:
        return {"session_id": self.id, "spec": self.spec.to_dict(),
                "status": self.status, "transcript": list(self.transcript),
                "codeword": self.result}


# ---------------------------------------------------------------------------
# verify


def cmd_verify(spec: GameSpec, exhaustive: bool = False, trials: int = 100,
               budget: int = 1 << 20, out=None) -> Report:
    """Run the solver against synthetic oracles and check every contract."""
    spec.validate()
    game = spec.build_game()
    params = spec.to_dict()
    report = Report(spec.game, params)
    report.lower_bound = info_lower_bound(game.codeword_count(),
                                          game.max_answer_range())
    if exhaustive:
        count = game.codeword_count()
        if count > budget:
            raise BudgetExceeded(
                f"{count} codewords exceed the cap {budget}; use --trials instead")
        codewords = game.codewords()
    else:
        rng = random.Random(spec.seed)
        codewords = (game.random_codeword(rng) for _ in range(trials))
    for codeword in codewords:
        strategy = spec.build_strategy(game)
        report.ceiling = strategy.ceiling
        oracle = SyntheticOracle(game, codeword)
        try:
            fragment, transcript = run_strategy(strategy, oracle,
                                                monitors=(schedule_monitor,))
        except QueryGameError as exc:
            report.codewords_tested += 1
            report.add_violation(f"{codeword!r}: {type(exc).__name__}: {exc}")
            continue
        report.codewords_tested += 1
        used = len(transcript)
        report.queries_max = max(report.queries_max, used)
        report.queries_total += used
        report.weight_used = max(report.weight_used, transcript_weight(transcript))
        if dict(fragment) != game.codeword_mapping(codeword):
            report.add_violation(f"{codeword!r}: wrong decode {fragment!r}")
        if strategy.ceiling is not None and used > strategy.ceiling:
            report.add_violation(f"{codeword!r}: {used} queries > ceiling")
    if report.codewords_tested and exhaustive \
            and report.queries_max < math.ceil(report.lower_bound - 1e-9):
        report.add_violation(f"worst case {report.queries_max} below the "
                             f"information bound {report.lower_bound:.2f}")
    if out is not None:
        print(report.summary(), file=out)
        for violation in report.violations[:20]:
            print(f"  violation: {violation}", file=out)
    return report


def transcript_weight(transcript: Transcript) -> float:
    return sum(weight_of_bound(e.step.bound) for e in transcript
               if e.step.bound is not None)


# ---------------------------------------------------------------------------
# bench


BENCH_FIELDS = ("game", "n", "k", "seed", "queries", "ceiling", "weight",
                "elapsed_ms")


def bench_rows(specs: Sequence[GameSpec], trials: int = 1) -> list[dict]:
    """One row per (spec, trial); all fields except elapsed_ms are seed-determined."""
    rows = []
    for spec in specs:
        game = spec.build_game()
        for trial in range(trials):
            seed = spec.seed + trial
            rng = random.Random(seed)
            codeword = game.random_codeword(rng)
            strategy = spec.build_strategy(game)
            start = time.perf_counter()
            fragment, transcript = run_strategy(strategy, SyntheticOracle(game, codeword))
            elapsed_ms = (time.perf_counter() - start) * 1000.0
            if dict(fragment) != game.codeword_mapping(codeword):
                raise QueryGameError(f"bench decode failure for {spec.to_dict()}")
            rows.append({
                "game": spec.game, "n": spec.n if spec.n is not None else "",
                "k": spec.k if spec.k is not None else "", "seed": seed,
                "queries": len(transcript),
                "ceiling": strategy.ceiling if strategy.ceiling is not None else "",
                "weight": round(transcript_weight(transcript), 3),
                "elapsed_ms": round(elapsed_ms, 3),
            })
    return rows


def write_bench_csv(rows: Sequence[dict], path: str) -> None:
    import csv
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(BENCH_FIELDS))
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def render_bench_figures(rows: Sequence[dict], out_base: str) -> list[str]:
    """Plot query counts and per-position ratios next to the CSV."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    series: dict[tuple, list[tuple[int, int, Optional[int]]]] = {}
    for row in rows:
        if row["n"] == "":
            continue
        key = (row["game"], row["k"])
        series.setdefault(key, []).append(
            (int(row["n"]), int(row["queries"]),
             int(row["ceiling"]) if row["ceiling"] != "" else None))
    paths = []
    if not series:
        return paths

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (game, k), points in sorted(series.items()):
        points.sort()
        label = game if k == "" else f"{game} k={k}"
        ax.plot([p[0] for p in points], [p[1] for p in points], "o-", label=label)
        if any(p[2] is not None for p in points):
            ax.plot([p[0] for p in points],
                    [p[2] if p[2] is not None else float("nan") for p in points],
                    "--", color=ax.lines[-1].get_color(), alpha=0.5)
    ax.set_xlabel("n")
    ax.set_ylabel("queries (solid) / ceiling (dashed)")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log", base=2)
    ax.legend(fontsize=8)
    ax.set_title("queries used vs declared ceilings")
    fig.tight_layout()
    path = f"{out_base}_queries.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (game, k), points in sorted(series.items()):
        points.sort()
        label = game if k == "" else f"{game} k={k}"
        ax.plot([p[0] for p in points], [p[1] / p[0] for p in points], "o-", label=label)
    ax.set_xlabel("n")
    ax.set_ylabel("queries / n")
    ax.set_xscale("log", base=2)
    ax.legend(fontsize=8)
    ax.set_title("per-position query cost")
    fig.tight_layout()
    path = f"{out_base}_ratio.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths.append(path)
    return paths


def cmd_bench(specs: Sequence[GameSpec], trials: int, out_path: str,
              figures: bool = True) -> list[dict]:
    rows = bench_rows(specs, trials)
    write_bench_csv(rows, out_path)
    if figures:
        base = out_path[:-4] if out_path.endswith(".csv") else out_path
        render_bench_figures(rows, base)
    return rows


# ---------------------------------------------------------------------------
# play (line-delimited JSON over stdio)


def cmd_play(spec: GameSpec, infile, outfile) -> int:
    """One interactive session: emit queries, consume answers, decode."""
    def emit(obj) -> None:
        outfile.write(json.dumps(obj) + "\n")
        outfile.flush()

    try:
        session = Session(spec)
    except (ValueError, QueryGameError) as exc:
        emit({"type": "error", "message": str(exc)})
        return 2
    emit(session.query_message())
    while session.status == "awaiting-answer":
        line = infile.readline()
        if not line:
            return 1
        line = line.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
            value = msg["value"] if isinstance(msg, dict) else msg
        except (json.JSONDecodeError, KeyError, TypeError):
            emit({"type": "error", "message": "malformed answer; send {\"value\": N}"})
            continue
        emit(session.submit(value))
    if session.status != "decoded":
        return 1
    line = infile.readline()
    if line:
        try:
            msg = json.loads(line.strip())
            confirmed = msg.get("correct", msg.get("value"))
        except (json.JSONDecodeError, AttributeError):
            confirmed = None
        if confirmed is False:
            emit({"type": "error",
                  "message": "inconsistent answers were given during the session"})
            return 1
        emit({"type": "done", "ok": True})
    return 0


# ---------------------------------------------------------------------------
# serve (HTTP, loopback by default)


class SessionStore:
    def __init__(self) -> None:
        self.sessions: dict[str, Session] = {}
        self.lock = threading.Lock()
        self.counter = 0

    def create(self, spec: GameSpec) -> Session:
        with self.lock:
            self.counter += 1
            session_id = f"s{self.counter}"
            session = Session(spec, session_id)
            self.sessions[session_id] = session
            return session

    def get(self, session_id: str) -> Optional[Session]:
        with self.lock:
            return self.sessions.get(session_id)

    def delete(self, session_id: str) -> bool:
        with self.lock:
            return self.sessions.pop(session_id, None) is not None


def make_handler(store: SessionStore):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):  # quiet
            pass

        def _send(self, code: int, obj=None) -> None:
            body = b"" if obj is None else json.dumps(obj).encode()
            self.send_response(code)
            self.send_header("Content-Type", "application/json")
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            if body:
                self.wfile.write(body)

        def _body(self):
            length = int(self.headers.get("Content-Length", 0))
            if length == 0:
                return {}
            return json.loads(self.rfile.read(length))

        def do_OPTIONS(self):
            self._send(204)

        def do_POST(self):
            parts = [p for p in self.path.split("/") if p]
            try:
                body = self._body()
            except json.JSONDecodeError:
                self._send(400, {"type": "error", "message": "invalid JSON body"})
                return
            if parts == ["sessions"]:
                try:
                    spec = GameSpec.from_dict(body)
                    session = store.create(spec)
                except (ValueError, QueryGameError) as exc:
                    self._send(400, {"type": "error", "message": str(exc)})
                    return
                msg = session.query_message()
                msg["session_id"] = session.id
                self._send(201, msg)
                return
            if len(parts) == 3 and parts[0] == "sessions" and parts[2] == "answer":
                session = store.get(parts[1])
                if session is None:
                    self._send(404, {"type": "error", "message": "no such session"})
                    return
                if "value" not in body:
                    self._send(400, {"type": "error", "message": "missing \"value\""})
                    return
                reply = session.submit(body["value"])
                reply["session_id"] = session.id
                self._send(400 if reply.get("type") == "error" else 200, reply)
                return
            self._send(404, {"type": "error", "message": "unknown endpoint"})

        def do_GET(self):
            parts = [p for p in self.path.split("/") if p]
            if len(parts) == 2 and parts[0] == "sessions":
                session = store.get(parts[1])
                if session is None:
                    self._send(404, {"type": "error", "message": "no such session"})
                    return
                self._send(200, session.transcript_view())
                return
            self._send(404, {"type": "error", "message": "unknown endpoint"})

        def do_DELETE(self):
            parts = [p for p in self.path.split("/") if p]
            if len(parts) == 2 and parts[0] == "sessions":
                if store.delete(parts[1]):
                    self._send(204)
                else:
                    self._send(404, {"type": "error", "message": "no such session"})
                return
            self._send(404, {"type": "error", "message": "unknown endpoint"})

    return Handler


def make_server(host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    store = SessionStore()
    server = ThreadingHTTPServer((host, port), make_handler(store))
    server.store = store  # type: ignore[attr-defined]
    return server


def cmd_serve(host: str, port: int, out=None) -> None:
    server = make_server(host, port)
    if out is not None:
        print(f"listening on http://{server.server_address[0]}:"
              f"{server.server_address[1]}", file=out)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
