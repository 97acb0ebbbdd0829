"""External solver process boundary.

Queries are SMT-LIB2 scripts over the solver's standard streams.  The solver
executable comes from `--solver`, the SMT_SOLVER environment variable, or
falls back to the bundled solver run as a subprocess.  One process serves a
whole verification run: queries are framed with an echo marker and separated
by reset; a per-query timeout kills and respawns the process, and that query
reports unknown.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import sys
import threading
from dataclasses import dataclass, field

from solverify.engine.queries import SmtQuery
from solverify.smt.terms import read_sexprs

MARKER = "<<query-done>>"


class SolverCrashed(Exception):
    pass


@dataclass
class CheckResult:
    status: str  # sat | unsat | unknown
    values: dict[str, object] = field(default_factory=dict)

    def value(self, symbol: str, default=None):
        return self.values.get(symbol, default)


def solver_argv(solver_path: str | None = None) -> list[str]:
    if solver_path:
        return shlex.split(solver_path)
    env = os.environ.get("SMT_SOLVER")
    if env:
        return shlex.split(env)
    return [sys.executable, "-m", "solverify.smt.cli"]


class SolverSession:
    """A long-lived solver process fed query after query."""

    def __init__(self, argv: list[str]):
        self.argv = argv
        self.proc: subprocess.Popen | None = None

    def _ensure(self):
        if self.proc is None or self.proc.poll() is not None:
            try:
                self.proc = subprocess.Popen(
                    self.argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                    stderr=subprocess.DEVNULL, text=True, bufsize=1)
            except OSError as exc:
                raise SolverCrashed(f"cannot run {self.argv[0]}: {exc}") from None

    def close(self):
        if self.proc is not None and self.proc.poll() is None:
            try:
                self.proc.stdin.write("(exit)\n")
                self.proc.stdin.flush()
            except OSError:
                pass
            try:
                self.proc.wait(timeout=2)
            except subprocess.TimeoutExpired:
                self.proc.kill()
        self.proc = None

    def _kill(self):
        if self.proc is not None:
            self.proc.kill()
            self.proc = None

    def ask(self, script_text: str, timeout: float) -> str:
        """Send one query (without exit) and read its output block."""
        self._ensure()
        body = script_text.replace("(exit)", "")
        payload = f"{body}\n(echo \"{MARKER}\")\n(reset)\n"
        lines: list[str] = []
        timed_out = [False]

        def watchdog():
            timed_out[0] = True
            self._kill()

        timer = threading.Timer(timeout, watchdog)
        timer.start()
        try:
            self.proc.stdin.write(payload)
            self.proc.stdin.flush()
            while True:
                line = self.proc.stdout.readline()
                if not line:
                    if timed_out[0]:
                        return ""
                    raise SolverCrashed("solver closed its output stream")
                if line.strip() == MARKER:
                    break
                lines.append(line.rstrip("\n"))
        except (OSError, ValueError):
            if timed_out[0]:
                return ""
            raise SolverCrashed("solver pipe failed") from None
        finally:
            timer.cancel()
        return "\n".join(lines)


_sessions: dict[tuple[str, ...], SolverSession] = {}


def _session_for(argv: list[str]) -> SolverSession:
    key = tuple(argv)
    if key not in _sessions:
        _sessions[key] = SolverSession(argv)
    return _sessions[key]


def close_sessions():
    for session in _sessions.values():
        session.close()
    _sessions.clear()


def check_smt(query: SmtQuery, timeout: float = 600.0,
              solver_path: str | None = None) -> CheckResult:
    """Run the query through the solver process; timeouts map to unknown."""
    session = _session_for(solver_argv(solver_path))
    out = session.ask(query.text, timeout).strip()
    if not out:
        return CheckResult(status="unknown")  # timeout
    lines = out.splitlines()
    status = lines[0].strip()
    if status.startswith("(error"):
        raise SolverCrashed(out[:400])
    if status not in ("sat", "unsat", "unknown"):
        raise SolverCrashed(f"unexpected solver output: {out[:200]}")
    values: dict[str, object] = {}
    if status == "sat" and len(lines) > 1:
        values = _parse_values("\n".join(lines[1:]))
    return CheckResult(status=status, values=values)


def _parse_values(text: str) -> dict[str, object]:
    """Parse a get-value response; uninterpreted-sort values normalize to
    integers by first appearance."""
    try:
        sexprs = read_sexprs(text)
    except Exception:
        return {}
    values: dict[str, object] = {}
    ref_codes: dict[str, int] = {}

    def decode(v):
        if isinstance(v, list):
            if len(v) == 2 and v[0] == "-":
                return -int(v[1])
            if v and v[0] == "as":  # (as @Ref!val!0 Ref)
                return decode(v[1])
            return None
        if v == "true":
            return True
        if v == "false":
            return False
        if v.lstrip("-").isdigit():
            return int(v)
        # solver-specific fresh value names for uninterpreted sorts
        if v not in ref_codes:
            ref_codes[v] = 1_000_000 + len(ref_codes)
        return ref_codes[v]

    for group in sexprs:
        if not isinstance(group, list):
            continue
        for pair in group:
            if isinstance(pair, list) and len(pair) == 2 and isinstance(pair[0], str):
                values[pair[0]] = decode(pair[1])
    return values
