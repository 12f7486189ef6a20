"""Locate ``for`` statements in C/C++ text and render directive variants.

The scanner is a small mode-tracking lexer (code, line comment, block
comment, string, char, preprocessor line) plus a brace matcher. It does not
parse C; the compiler probe decides what is really parallelizable.
"""

from __future__ import annotations

import bisect
import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

DIRECTIVE = "#pragma acc kernels"


class ScanError(ValueError):
    """Base class for source files the scanner cannot handle."""

    def __init__(self, message: str, path: str = "<string>", line: int | None = None):
        self.path = path
        self.line = line
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {message}")


class UnbalancedBraces(ScanError):
    pass


class UnterminatedLiteral(ScanError):
    pass


class GenomeLengthMismatch(ValueError):
    pass


@dataclass(frozen=True)
class SourceUnit:
    path: str
    text: str
    _line_starts: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        starts = [0] + [m.end() for m in re.finditer("\n", self.text)]
        object.__setattr__(self, "_line_starts", tuple(starts))

    @classmethod
    def from_file(cls, path: str | Path) -> "SourceUnit":
        path = Path(path)
        # newline="" keeps CRLF intact so rendering stays byte-faithful
        with open(path, encoding="utf-8", errors="surrogateescape", newline="") as fh:
            return cls(str(path), fh.read())

    def line_col_of(self, offset: int) -> tuple[int, int]:
        """1-based line and 0-based column of a character offset."""
        if not 0 <= offset <= len(self.text):
            raise IndexError(offset)
        i = bisect.bisect_right(self._line_starts, offset) - 1
        return i + 1, offset - self._line_starts[i]

    def offset_of(self, line: int, col: int) -> int:
        return self._line_starts[line - 1] + col

    def line_start(self, offset: int) -> int:
        return self._line_starts[bisect.bisect_right(self._line_starts, offset) - 1]

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8", "surrogateescape")).hexdigest()


@dataclass(frozen=True)
class LoopSite:
    id: int
    header_start: int
    body_span: tuple[int, int]
    depth: int
    indent: str
    line: int


@dataclass(frozen=True)
class CandidateSet:
    unit: SourceUnit
    all_loops: tuple[LoopSite, ...]
    candidates: tuple[int, ...]

    def __post_init__(self):
        ids = {lp.id for lp in self.all_loops}
        if not set(self.candidates) <= ids:
            raise ValueError("candidates must be loop ids of this unit")
        if list(self.candidates) != sorted(set(self.candidates)):
            raise ValueError("candidates must be unique and in document order")

    @property
    def gene_length(self) -> int:
        return len(self.candidates)

    def loop_for_gene(self, k: int) -> LoopSite:
        return self.all_loops[self.candidates[k]]


_IDENT = re.compile(r"[^\W\d]\w*")


def _is_ident_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


class _Lexer:
    """Yields significant code characters, skipping comments/literals/pp lines."""

    def __init__(self, text: str, path: str):
        self.text = text
        self.path = path

    def _line(self, i: int) -> int:
        return self.text.count("\n", 0, i) + 1

    def tokens(self):
        """Yield (kind, start, end) for identifiers and single punctuation chars.

        kind is "id" or the punctuation character itself. Literals yield
        ("lit", start, end) so statement boundaries still see them.
        """
        t = self.text
        n = len(t)
        i = 0
        at_line_start = True  # only whitespace seen since last newline
        while i < n:
            c = t[i]
            if c == "\n":
                at_line_start = True
                i += 1
                continue
            if c in " \t\r\f\v":
                i += 1
                continue
            if c == "#" and at_line_start:
                # preprocessor directive, honours backslash continuations
                while i < n and t[i] != "\n":
                    if t[i] == "\\" and i + 1 < n and t[i + 1] == "\n":
                        i += 2
                        continue
                    if t.startswith("/*", i):
                        end = t.find("*/", i + 2)
                        if end < 0:
                            raise UnterminatedLiteral("unterminated block comment", self.path, self._line(i))
                        i = end + 2
                        continue
                    if t.startswith("//", i):
                        while i < n and t[i] != "\n":
                            i += 1
                        break
                    i += 1
                continue
            at_line_start = False
            if t.startswith("//", i):
                while i < n and t[i] != "\n":
                    if t[i] == "\\" and i + 1 < n and t[i + 1] == "\n":
                        i += 1
                    i += 1
                continue
            if t.startswith("/*", i):
                end = t.find("*/", i + 2)
                if end < 0:
                    raise UnterminatedLiteral("unterminated block comment", self.path, self._line(i))
                i = end + 2
                continue
            if c == '"' or c == "'":
                start = i
                # raw string literal R"delim( ... )delim"
                if c == '"' and i > 0 and t[i - 1] == "R" and (i < 2 or not _is_ident_char(t[i - 2]) or t[i - 2] in "uUL8"):
                    paren = t.find("(", i)
                    if paren < 0:
                        raise UnterminatedLiteral("bad raw string", self.path, self._line(i))
                    close = ")" + t[i + 1:paren] + '"'
                    end = t.find(close, paren)
                    if end < 0:
                        raise UnterminatedLiteral("unterminated raw string", self.path, self._line(i))
                    i = end + len(close)
                    yield "lit", start, i
                    continue
                i += 1
                while True:
                    if i >= n or t[i] == "\n":
                        kind = "string" if c == '"' else "character"
                        raise UnterminatedLiteral(f"unterminated {kind} literal", self.path, self._line(start))
                    if t[i] == "\\":
                        i += 2
                        continue
                    if t[i] == c:
                        i += 1
                        break
                    i += 1
                yield "lit", start, i
                continue
            if c.isalpha() or c == "_":
                m = _IDENT.match(t, i)
                yield "id", i, m.end()
                i = m.end()
                continue
            if c.isdigit():
                # pp-number, also swallows digit separators like 1'000
                j = i + 1
                while j < n and (_is_ident_char(t[j]) or t[j] == "." or (t[j] in "+-" and t[j - 1] in "eEpP")
                                 or (t[j] == "'" and j + 1 < n and _is_ident_char(t[j + 1]))):
                    j += 1
                yield "lit", i, j
                i = j
                continue
            yield c, i, i + 1
            i += 1


def scan_loops(unit: SourceUnit) -> list[LoopSite]:
    """Return every ``for`` statement of ``unit`` in document order.

    Body spans cover the brace-delimited block, or for a single-statement
    body the text up to and including its terminating ``;`` (nested
    control statements are followed through).
    """
    toks = list(_Lexer(unit.text, unit.path).tokens())
    text = unit.text
    n = len(toks)

    # brace matching over the token stream
    match: dict[int, int] = {}
    paren_match: dict[int, int] = {}
    stack: list[int] = []
    pstack: list[int] = []
    for k, (kind, start, _) in enumerate(toks):
        if kind == "{":
            stack.append(k)
        elif kind == "}":
            if not stack:
                raise UnbalancedBraces("unexpected '}'", unit.path, unit.line_col_of(start)[0])
            match[stack.pop()] = k
        elif kind == "(":
            pstack.append(k)
        elif kind == ")":
            if pstack:
                paren_match[pstack.pop()] = k
    if stack:
        raise UnbalancedBraces("unclosed '{'", unit.path, unit.line_col_of(toks[stack[-1]][1])[0])

    def tok_text(k: int) -> str:
        return text[toks[k][1]:toks[k][2]]

    def statement_end(k: int) -> int:
        """Index of the last token of the statement starting at token k."""
        if k >= n:
            raise ScanError("statement runs past end of file", unit.path)
        kind = toks[k][0]
        if kind == "{":
            return match[k]
        if kind == "id":
            word = tok_text(k)
            if word in ("for", "while", "switch") or (word == "if"):
                if k + 1 < n and toks[k + 1][0] == "(" and (k + 1) in paren_match:
                    end = statement_end(paren_match[k + 1] + 1)
                    if word == "if" and end + 1 < n and toks[end + 1][0] == "id" and tok_text(end + 1) == "else":
                        end = statement_end(end + 2)
                    return end
            if word == "else":
                return statement_end(k + 1)
            if word == "do":
                body_end = statement_end(k + 1)
                j = body_end + 1
                while j < n and toks[j][0] != ";":
                    j += 1
                return j
        depth = 0
        j = k
        while j < n:
            kd = toks[j][0]
            if kd in ("(", "[", "{"):
                depth += 1
            elif kd in (")", "]", "}"):
                depth -= 1
                if depth < 0:
                    return j - 1
            if kd == ";" and depth == 0:
                return j
            j += 1
        raise ScanError("statement without terminating ';'", unit.path, unit.line_col_of(toks[k][1])[0])

    raw: list[tuple[int, int, int]] = []  # header_start, body_start, body_end (exclusive)
    for k, (kind, start, end) in enumerate(toks):
        if kind != "id" or text[start:end] != "for":
            continue
        if k + 1 >= n or toks[k + 1][0] != "(" or (k + 1) not in paren_match:
            continue
        body_tok = paren_match[k + 1] + 1
        if body_tok >= n:
            raise ScanError("for statement without body", unit.path, unit.line_col_of(start)[0])
        last = statement_end(body_tok)
        raw.append((start, toks[body_tok][1], toks[last][2]))

    sites: list[LoopSite] = []
    open_spans: list[tuple[int, int]] = []
    for idx, (hs, bs, be) in enumerate(raw):
        while open_spans and hs >= open_spans[-1][1]:
            open_spans.pop()
        depth = len(open_spans)
        ls = unit.line_start(hs)
        prefix = text[ls:hs]
        indent = prefix[: len(prefix) - len(prefix.lstrip(" \t"))]
        sites.append(LoopSite(idx, hs, (bs, be), depth, indent, unit.line_col_of(hs)[0]))
        open_spans.append((bs, be))
    return sites


def _insertion_points(cs: CandidateSet, genome: Sequence[int]) -> list[tuple[int, str]]:
    bits = tuple(genome)
    if len(bits) != cs.gene_length:
        raise GenomeLengthMismatch(f"genome has {len(bits)} bits, candidate set has {cs.gene_length}")
    points = []
    for k, bit in enumerate(bits):
        if bit:
            site = cs.loop_for_gene(k)
            points.append((cs.unit.line_start(site.header_start), site.indent))
    return points


def _newline_style(text: str) -> str:
    return "\r\n" if "\r\n" in text else "\n"


def render_variant(cs: CandidateSet, genome: Sequence[int]) -> str:
    """Insert the directive above every loop whose gene is 1."""
    points = _insertion_points(cs, genome)
    text = cs.unit.text
    nl = _newline_style(text)
    out = []
    prev = 0
    for offset, indent in sorted(points):
        out.append(text[prev:offset])
        out.append(f"{indent}{DIRECTIVE}{nl}")
        prev = offset
    out.append(text[prev:])
    return "".join(out)


def render_single(unit: SourceUnit, loops: Sequence[LoopSite], loop_id: int) -> str:
    """Variant with the directive on exactly one scanned loop (used by the probe)."""
    cs = CandidateSet(unit, tuple(loops), (loop_id,))
    return render_variant(cs, (1,))


def strip_directives(text: str) -> str:
    """Remove lines consisting solely of indentation plus the bare directive."""
    lines = text.splitlines(keepends=True)
    return "".join(ln for ln in lines if ln.rstrip("\r\n").lstrip(" \t") != DIRECTIVE)
