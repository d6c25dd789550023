"""Surface syntax: tokenizer, term parser, tactic parser.

Parsing produces surface nodes; elaboration into kernel terms lives in
elab.py so tactic arguments can be elaborated against the goal's local
context at execution time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import ParseError

# ---------------------------------------------------------------------------
# Tokens
# ---------------------------------------------------------------------------

# Multi-char symbols first so the scanner matches longest-first.
_SYMBOLS = [
    ":=", "=>", "->", "<->", "<-", "<=", "\\/", "/\\", "|-",
    "(", ")", "[", "]", ",", ":", ";", "_", "@", "=", "<", "+", "*", "|",
    "∀", "∃", "λ", "↦", "→", "←", "∨", "∧", "¬", "↔", "≤", "⊢",
]

_KEYWORDS = {
    "theorem", "example", "by", "sorry", "fun", "forall", "exists", "let",
    "with", "calc", "Prop", "Type",
}


@dataclass(frozen=True)
class Tok:
    kind: str  # "ident" | "num" | "sym" | "kw" | "comment" | "eof"
    text: str
    start: int  # char offset
    end: int


def _ident_start(ch: str) -> bool:
    return ch.isalpha() or ch == "_"


def _ident_cont(ch: str) -> bool:
    return ch.isalnum() or ch in "_'."


def tokenize(src: str, keep_comments: bool = False) -> list[Tok]:
    toks: list[Tok] = []
    i, n = 0, len(src)
    while i < n:
        ch = src[i]
        if ch in " \t\r\n":
            i += 1
            continue
        if src.startswith("--", i):
            j = src.find("\n", i)
            j = n if j < 0 else j
            if keep_comments:
                toks.append(Tok("comment", src[i:j], i, j))
            i = j
            continue
        if src.startswith("/-", i):
            j = src.find("-/", i + 2)
            if j < 0:
                raise ParseError("unterminated block comment", pos=i)
            if keep_comments:
                toks.append(Tok("comment", src[i:j + 2], i, j + 2))
            i = j + 2
            continue
        if ch.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(Tok("num", src[i:j], i, j))
            i = j
            continue
        if _ident_start(ch) and ch != "_":
            j = i
            while j < n and _ident_cont(src[j]):
                j += 1
            # A trailing dot belongs to the next token, not the name.
            while j > i and src[j - 1] == ".":
                j -= 1
            text = src[i:j]
            toks.append(Tok("kw" if text in _KEYWORDS else "ident", text, i, j))
            i = j
            continue
        if ch == "_" and i + 1 < n and _ident_cont(src[i + 1]):
            j = i
            while j < n and _ident_cont(src[j]):
                j += 1
            toks.append(Tok("ident", src[i:j], i, j))
            i = j
            continue
        for sym in _SYMBOLS:
            if src.startswith(sym, i):
                toks.append(Tok("sym", sym, i, i + len(sym)))
                i += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", pos=i)
    toks.append(Tok("eof", "", n, n))
    return toks


# ASCII aliases normalize to one canonical spelling.
_SYM_ALIAS = {
    "->": "→", "<->": "↔", "<-": "←", "<=": "≤", "\\/": "∨", "/\\": "∧",
    "=>": "↦", "|-": "⊢",
}


def _canon(tok: Tok) -> str:
    if tok.kind == "sym":
        return _SYM_ALIAS.get(tok.text, tok.text)
    return tok.text


# ---------------------------------------------------------------------------
# Surface terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SNode:
    pass


@dataclass(frozen=True)
class SIdent(SNode):
    name: str
    explicit: bool = False  # @name suppresses implicit insertion


@dataclass(frozen=True)
class SNum(SNode):
    n: int


@dataclass(frozen=True)
class SHole(SNode):
    pass


@dataclass(frozen=True)
class SSorry(SNode):
    pass


@dataclass(frozen=True)
class SApp(SNode):
    fn: SNode
    arg: SNode


@dataclass(frozen=True)
class SBin(SNode):
    op: str  # iff | imp | or | and | eq | le | lt | add | mul
    lhs: SNode
    rhs: SNode


@dataclass(frozen=True)
class SNot(SNode):
    arg: SNode


# One binder group: names sharing one stated (or omitted) type.
@dataclass(frozen=True)
class SGroup:
    names: tuple[str, ...]
    ty: Optional[SNode]


@dataclass(frozen=True)
class SFun(SNode):
    groups: tuple[SGroup, ...]
    body: SNode


@dataclass(frozen=True)
class SForall(SNode):
    groups: tuple[SGroup, ...]
    body: SNode


@dataclass(frozen=True)
class SExists(SNode):
    groups: tuple[SGroup, ...]
    body: SNode


@dataclass(frozen=True)
class SLet(SNode):
    name: str
    ty: Optional[SNode]
    value: SNode
    body: SNode


class _P:
    """Token cursor shared by the term and tactic parsers."""

    def __init__(self, toks: list[Tok]):
        self.toks = [t for t in toks if t.kind != "comment"]
        self.i = 0

    def peek(self, ahead: int = 0) -> Tok:
        j = min(self.i + ahead, len(self.toks) - 1)
        return self.toks[j]

    def next(self) -> Tok:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at_sym(self, *syms: str) -> bool:
        t = self.peek()
        return t.kind == "sym" and _canon(t) in syms

    def at_kw(self, *kws: str) -> bool:
        t = self.peek()
        return t.kind == "kw" and t.text in kws

    def accept_sym(self, *syms: str) -> Optional[str]:
        if self.at_sym(*syms):
            return _canon(self.next())
        return None

    def expect_sym(self, sym: str) -> Tok:
        t = self.peek()
        if t.kind == "sym" and _canon(t) == sym:
            return self.next()
        raise ParseError(f"expected {sym!r}, found {t.text or 'end of input'!r}", pos=t.start)

    def expect_ident(self, what: str = "identifier") -> Tok:
        t = self.peek()
        if t.kind == "ident":
            return self.next()
        raise ParseError(f"expected {what}, found {t.text or 'end of input'!r}", pos=t.start)

    def expect_eof(self) -> None:
        t = self.peek()
        if t.kind != "eof":
            raise ParseError(f"unexpected trailing input: {t.text!r}", pos=t.start)


# Binary operators by precedence. Implication and the logical connectives
# associate to the right, arithmetic to the left, comparisons not at all.
_BINOPS = {
    "↔": ("iff", 20, "right"),
    "→": ("imp", 25, "right"),
    "∨": ("or", 30, "right"),
    "∧": ("and", 35, "right"),
    "=": ("eq", 50, "none"),
    "≤": ("le", 50, "none"),
    "<": ("lt", 50, "none"),
    "+": ("add", 65, "left"),
    "*": ("mul", 70, "left"),
}

_NOT_PREC = 40


def _parse_binder_groups(p: _P, terminator: str) -> tuple[SGroup, ...]:
    """Parse binder groups up to (and excluding) the terminator symbol.

    Accepts either a run of parenthesized groups `(a b : T) (c : U)` or a
    single bare run `a b : T` / `a b` with no parentheses.
    """
    groups: list[SGroup] = []
    if p.at_sym("("):
        while p.at_sym("("):
            p.next()
            names = [p.expect_ident("binder name").text]
            while p.peek().kind == "ident":
                names.append(p.next().text)
            ty = None
            if p.accept_sym(":"):
                ty = _parse_term(p, 0)
            p.expect_sym(")")
            groups.append(SGroup(tuple(names), ty))
    else:
        names = [p.expect_ident("binder name").text]
        while p.peek().kind == "ident":
            names.append(p.next().text)
        ty = None
        if p.accept_sym(":"):
            ty = _parse_term(p, 0)
        groups.append(SGroup(tuple(names), ty))
    if not groups:
        t = p.peek()
        raise ParseError("expected at least one binder", pos=t.start)
    p.expect_sym(terminator)
    return tuple(groups)


def _parse_atom(p: _P) -> SNode:
    t = p.peek()
    if t.kind == "sym":
        c = _canon(t)
        if c == "(":
            p.next()
            inner = _parse_term(p, 0)
            p.expect_sym(")")
            return inner
        if c == "_":
            p.next()
            return SHole()
        if c == "@":
            p.next()
            name = p.expect_ident("name after @").text
            return SIdent(name, explicit=True)
    if t.kind == "num":
        p.next()
        return SNum(int(t.text))
    if t.kind == "ident":
        p.next()
        return SIdent(t.text)
    if t.kind == "kw" and t.text in ("Prop", "Type"):
        p.next()
        return SIdent(t.text)
    if t.kind == "kw" and t.text == "sorry":
        p.next()
        return SSorry()
    raise ParseError(f"expected a term, found {t.text or 'end of input'!r}", pos=t.start)


def _at_atom_start(p: _P) -> bool:
    t = p.peek()
    if t.kind in ("num", "ident"):
        return True
    if t.kind == "kw" and t.text in ("Prop", "Type", "sorry"):
        return True
    return t.kind == "sym" and _canon(t) in ("(", "_", "@")


def _parse_app(p: _P) -> SNode:
    t = _parse_atom(p)
    while _at_atom_start(p):
        t = SApp(t, _parse_atom(p))
    return t


def _parse_term(p: _P, min_prec: int) -> SNode:
    t = p.peek()
    # Binders extend as far right as possible, from any precedence context.
    if p.at_sym("∀") or p.at_kw("forall"):
        p.next()
        groups = _parse_binder_groups(p, ",")
        return SForall(groups, _parse_term(p, 0))
    if p.at_sym("∃") or p.at_kw("exists"):
        p.next()
        groups = _parse_binder_groups(p, ",")
        return SExists(groups, _parse_term(p, 0))
    if p.at_sym("λ") or p.at_kw("fun"):
        p.next()
        groups = _parse_binder_groups(p, "↦")
        return SFun(groups, _parse_term(p, 0))
    if p.at_kw("let"):
        p.next()
        name = p.expect_ident("let binder name").text
        ty = None
        if p.accept_sym(":"):
            ty = _parse_term(p, 0)
        p.expect_sym(":=")
        value = _parse_term(p, 0)
        p.expect_sym(";")
        body = _parse_term(p, 0)
        return SLet(name, ty, value, body)
    if p.at_sym("¬"):
        if _NOT_PREC < min_prec:
            raise ParseError("misplaced ¬", pos=t.start)
        p.next()
        return SNot(_parse_term(p, _NOT_PREC))
    lhs = _parse_app(p)
    while True:
        t = p.peek()
        if t.kind != "sym":
            break
        c = _canon(t)
        if c not in _BINOPS:
            break
        op, prec, assoc = _BINOPS[c]
        if prec < min_prec:
            break
        p.next()
        if assoc == "right":
            rhs = _parse_term(p, prec)
        elif assoc == "left":
            rhs = _parse_term(p, prec + 1)
        else:
            rhs = _parse_term(p, prec + 1)
            nxt = p.peek()
            if nxt.kind == "sym" and _canon(nxt) in _BINOPS \
                    and _BINOPS[_canon(nxt)][1] == prec:
                raise ParseError(f"comparison {c!r} does not chain", pos=nxt.start)
        lhs = SBin(op, lhs, rhs)
    return lhs


def parse_term(src: str) -> SNode:
    p = _P(tokenize(src))
    t = _parse_term(p, 0)
    p.expect_eof()
    return t


# ---------------------------------------------------------------------------
# Surface tactics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TacticNode:
    pass


@dataclass(frozen=True)
class TIntro(TacticNode):
    names: tuple[str, ...]


@dataclass(frozen=True)
class TExact(TacticNode):
    term: SNode


@dataclass(frozen=True)
class TApply(TacticNode):
    term: SNode


@dataclass(frozen=True)
class TCases(TacticNode):
    hyp: str
    names: Optional[tuple[str, ...]] = None


@dataclass(frozen=True)
class TExists(TacticNode):
    witness: SNode


@dataclass(frozen=True)
class THave(TacticNode):
    name: str
    ty: SNode
    proof: Optional[SNode]


@dataclass(frozen=True)
class TLetTac(TacticNode):
    name: str
    ty: SNode
    value: SNode


@dataclass(frozen=True)
class TRfl(TacticNode):
    pass


@dataclass(frozen=True)
class TDecide(TacticNode):
    pass


@dataclass(frozen=True)
class TAssumption(TacticNode):
    pass


@dataclass(frozen=True)
class TRw(TacticNode):
    items: tuple[tuple[bool, str], ...]  # (reversed?, lemma or hypothesis)


@dataclass(frozen=True)
class TInduction(TacticNode):
    var: str
    # Branch bodies are wired up by the block parser; a bare `induction x`
    # in a single tactic string runs with default branch goal names.
    with_block: bool = False


@dataclass(frozen=True)
class TCalc(TacticNode):
    lhs: Optional[SNode]  # None for the `_` continuation form
    op: str  # "eq" | "le"
    rhs: SNode
    just: SNode


@dataclass(frozen=True)
class TConvEnter(TacticNode):
    side: str  # "lhs" | "rhs"


@dataclass(frozen=True)
class TConvRw(TacticNode):
    items: tuple[tuple[bool, str], ...]


@dataclass(frozen=True)
class TConvDone(TacticNode):
    pass


@dataclass(frozen=True)
class TExprTac(TacticNode):
    term: SNode


@dataclass(frozen=True)
class THammer(TacticNode):
    budget: Optional[int] = None


@dataclass(frozen=True)
class TSimp(TacticNode):
    lemmas: Optional[tuple[str, ...]] = None


@dataclass(frozen=True)
class TSorryTac(TacticNode):
    pass


def _parse_rw_items(p: _P) -> tuple[tuple[bool, str], ...]:
    p.expect_sym("[")
    items: list[tuple[bool, str]] = []
    while True:
        rev = p.accept_sym("←") is not None
        name = p.expect_ident("lemma name").text
        items.append((rev, name))
        if not p.accept_sym(","):
            break
    p.expect_sym("]")
    return tuple(items)


def _parse_calc_step(p: _P) -> TCalc:
    stmt = _parse_term(p, 0)
    if not isinstance(stmt, SBin) or stmt.op not in ("eq", "le"):
        t = p.peek()
        raise ParseError("calc step must relate two terms with = or ≤", pos=t.start)
    p.expect_sym(":=")
    just = _parse_term(p, 0)
    lhs = None if isinstance(stmt.lhs, SHole) else stmt.lhs
    return TCalc(lhs, stmt.op, stmt.rhs, just)


def parse_tactic(src: str) -> TacticNode:
    p = _P(tokenize(src))
    node = _parse_tactic(p)
    p.expect_eof()
    return node


def _parse_tactic(p: _P) -> TacticNode:
    t = p.peek()
    # A calc continuation line starts with the `_` placeholder.
    if t.kind == "sym" and _canon(t) == "_":
        return _parse_calc_step(p)
    if t.kind == "kw" and t.text == "calc":
        p.next()
        return _parse_calc_step(p)
    if t.kind == "kw" and t.text == "sorry":
        p.next()
        return TSorryTac()
    if t.kind == "kw" and t.text == "exists":
        p.next()
        return TExists(_parse_term(p, 0))
    if t.kind == "kw" and t.text == "let":
        p.next()
        name = p.expect_ident("binder name").text
        p.expect_sym(":")
        ty = _parse_term(p, 0)
        p.expect_sym(":=")
        value = _parse_term(p, 0)
        return TLetTac(name, ty, value)
    if t.kind != "ident":
        raise ParseError(f"expected a tactic, found {t.text or 'end of input'!r}", pos=t.start)
    word = p.next().text
    match word:
        case "intro" | "intros":
            names = []
            while p.peek().kind == "ident":
                names.append(p.next().text)
            if word == "intro" and not names:
                raise ParseError("intro expects at least one name", pos=t.start)
            return TIntro(tuple(names))
        case "exact":
            return TExact(_parse_term(p, 0))
        case "apply":
            return TApply(_parse_term(p, 0))
        case "expr":
            return TExprTac(_parse_term(p, 0))
        case "cases":
            hyp = p.expect_ident("hypothesis name").text
            names = None
            if p.at_kw("with"):
                p.next()
                got = []
                while p.peek().kind == "ident":
                    got.append(p.next().text)
                names = tuple(got)
            return TCases(hyp, names)
        case "have":
            name = p.expect_ident("hypothesis name").text
            p.expect_sym(":")
            ty = _parse_term(p, 0)
            proof = None
            if p.accept_sym(":="):
                proof = _parse_term(p, 0)
            return THave(name, ty, proof)
        case "rfl":
            return TRfl()
        case "decide":
            return TDecide()
        case "assumption":
            return TAssumption()
        case "rw":
            return TRw(_parse_rw_items(p))
        case "induction":
            var = p.expect_ident("variable name").text
            with_block = False
            if p.at_kw("with"):
                p.next()
                with_block = True
            return TInduction(var, with_block)
        case "conv":
            nxt = p.peek()
            if nxt.kind == "ident" and nxt.text in ("lhs", "rhs"):
                p.next()
                return TConvEnter(nxt.text)
            if nxt.kind == "ident" and nxt.text == "rw":
                p.next()
                return TConvRw(_parse_rw_items(p))
            if nxt.kind == "ident" and nxt.text == "done":
                p.next()
                return TConvDone()
            raise ParseError("conv expects lhs, rhs, rw [...] or done", pos=nxt.start)
        case "hammer":
            budget = None
            if p.peek().kind == "num":
                budget = int(p.next().text)
            return THammer(budget)
        case "simp":
            lemmas = None
            if p.at_sym("["):
                p.next()
                got = []
                if not p.at_sym("]"):
                    got.append(p.expect_ident("lemma name").text)
                    while p.accept_sym(","):
                        got.append(p.expect_ident("lemma name").text)
                p.expect_sym("]")
                lemmas = tuple(got)
            return TSimp(lemmas)
        case _:
            raise ParseError(f"unknown tactic: {word}", pos=t.start)
