"""SMT-LIB2 solver process: reads commands from stdin and answers check-sat,
get-value, get-model, and echo on stdout.  Runs one-shot or as a persistent
session (state clears on `reset`).  `python -m solverify.smt.cli` is the
default solver executable when no external one is configured."""

from __future__ import annotations

import sys

from solverify.smt.solver import Solved, solve
from solverify.smt.terms import (
    ScriptParser, is_array_sort, read_sexprs, sexpr, sort_to_sexpr,
)


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v) if v >= 0 else f"(- {-v})"
    return str(v)


class Session:
    def __init__(self, out):
        self.out = out
        self.parser = ScriptParser()
        self.solved: Solved | None = None
        self.poisoned = False  # a bad command taints the query until reset

    def emit(self, text: str):
        self.out.write(text + "\n")
        self.out.flush()

    def handle(self, sx) -> bool:
        """Process one command; False stops the session."""
        head = sx[0] if isinstance(sx, list) and sx else None
        if head == "exit":
            return False
        if head == "reset":
            self.parser = ScriptParser()
            self.solved = None
            self.poisoned = False
            return True
        if head == "echo":
            self.emit(str(sx[1]).strip('"'))
            return True
        if self.poisoned:
            self.emit('(error "earlier command failed; reset required")')
            return True
        if head == "check-sat":
            try:
                self.solved = solve(self.parser.script)
            except Exception as exc:
                self.solved = None
                self.poisoned = True
                self.emit(f'(error "{exc}")')
                return True
            self.emit(self.solved.answer)
            return True
        if head == "get-value":
            if self.solved is None or self.solved.answer != "sat":
                self.emit('(error "model is not available")')
                return True
            try:
                terms = [self.parser.to_term(a) for a in sx[1]]
            except Exception as exc:
                self.emit(f'(error "{exc}")')
                return True
            pairs = " ".join(
                f"({sexpr(t)} {format_value(self.solved.value_of(t))})"
                for t in terms)
            self.emit(f"({pairs})")
            return True
        if head == "get-model":
            if self.solved is None or self.solved.answer != "sat":
                self.emit('(error "model is not available")')
                return True
            decls = []
            for name in sorted(self.parser.script.decls):
                args, sort = self.parser.script.decls[name]
                if args or is_array_sort(sort):
                    continue
                value = self.solved.value_of(self.parser.bank.sym(name, sort))
                decls.append(f"  (define-fun {name} () {sort_to_sexpr(sort)} "
                             f"{format_value(value)})")
            self.emit("(\n" + "\n".join(decls) + "\n)")
            return True
        try:
            self.parser.feed(sx)
        except Exception as exc:
            self.poisoned = True
            self.emit(f'(error "{exc}")')
        return True


def _iter_commands(stream):
    """Yield balanced s-expressions from a character stream."""
    buf = []
    depth = 0
    in_comment = False
    in_string = False
    while True:
        ch = stream.read(1)
        if not ch:
            return
        if in_comment:
            if ch == "\n":
                in_comment = False
            continue
        if ch == ";" and not in_string:
            in_comment = True
            continue
        if ch == '"':
            in_string = not in_string
        buf.append(ch)
        if in_string:
            continue
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0:
                text = "".join(buf).strip()
                buf = []
                if text:
                    yield text


def main() -> int:
    session = Session(sys.stdout)
    for text in _iter_commands(sys.stdin):
        try:
            sx = read_sexprs(text)[0]
        except Exception as exc:
            session.emit(f'(error "{exc}")')
            continue
        if not session.handle(sx):
            break
    return 0


def run(text: str) -> str:
    """One-shot convenience for tests: feed a script, capture the output."""
    import io
    out = io.StringIO()
    session = Session(out)
    for command_text in _iter_commands(io.StringIO(text)):
        try:
            sx = read_sexprs(command_text)[0]
        except Exception as exc:
            session.emit(f'(error "{exc}")')
            continue
        if not session.handle(sx):
            break
    return out.getvalue().strip()


if __name__ == "__main__":
    sys.exit(main())
