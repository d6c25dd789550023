"""Term syntax for the two-level dependent type theory.

Bound variables are positional (de Bruijn indices inside binder bodies);
variables of a goal's local context are `FVar`s with session-unique ids.
All nodes are immutable and hashable so terms can key memo tables and be
shared freely across branched proof states.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Iterator, Optional

sys.setrecursionlimit(20_000)

PROP = "prop"
TYPE = "type"

# Trusted head for arithmetic-decision certificates.  Never lives in an
# environment: the type checker validates `App(Const(DECIDE_CERT), p)` by
# re-running the evaluator on p.
DECIDE_CERT = "Decide.cert"


@dataclass(frozen=True)
class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Sort(Term):
    level: str  # PROP or TYPE
    __slots__ = ("level",)


@dataclass(frozen=True)
class Const(Term):
    name: str
    __slots__ = ("name",)


@dataclass(frozen=True)
class BVar(Term):
    idx: int
    __slots__ = ("idx",)


@dataclass(frozen=True)
class FVar(Term):
    id: int
    __slots__ = ("id",)


@dataclass(frozen=True)
class MVar(Term):
    id: int
    __slots__ = ("id",)


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term
    __slots__ = ("fn", "arg")


@dataclass(frozen=True)
class Lam(Term):
    name: str
    ty: Term
    body: Term
    # Local variable this binder closes over, when the body was built in an
    # extended goal context (intro/have/cases).  Excluded from equality: two
    # terms that differ only in bookkeeping are the same term.
    binds: Optional[int] = field(default=None, compare=False)


@dataclass(frozen=True)
class Pi(Term):
    name: str
    ty: Term
    body: Term
    binds: Optional[int] = field(default=None, compare=False)


@dataclass(frozen=True)
class Let(Term):
    name: str
    ty: Term
    value: Term
    body: Term
    binds: Optional[int] = field(default=None, compare=False)


@dataclass(frozen=True)
class NatLit(Term):
    n: int
    __slots__ = ("n",)


# Shared leaves.
SORT_PROP = Sort(PROP)
SORT_TYPE = Sort(TYPE)


def app(fn: Term, *args: Term) -> Term:
    """Left-nested application spine."""
    t = fn
    for a in args:
        t = App(t, a)
    return t


def app_spine(t: Term) -> tuple[Term, list[Term]]:
    """Split t into its head and argument list."""
    args: list[Term] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fn
    args.reverse()
    return t, args


def lift(t: Term, by: int, from_idx: int = 0) -> Term:
    """Shift loose bound variables >= from_idx up by `by`."""
    if by == 0:
        return t
    match t:
        case BVar(idx):
            return BVar(idx + by) if idx >= from_idx else t
        case App(fn, arg):
            return App(lift(fn, by, from_idx), lift(arg, by, from_idx))
        case Lam(name, ty, body):
            return Lam(name, lift(ty, by, from_idx), lift(body, by, from_idx + 1), binds=t.binds)
        case Pi(name, ty, body):
            return Pi(name, lift(ty, by, from_idx), lift(body, by, from_idx + 1), binds=t.binds)
        case Let(name, ty, value, body):
            return Let(name, lift(ty, by, from_idx), lift(value, by, from_idx),
                       lift(body, by, from_idx + 1), binds=t.binds)
        case _:
            return t


def instantiate(body: Term, repl: Term, depth: int = 0) -> Term:
    """Substitute the bound variable at `depth` in body with repl."""
    match body:
        case BVar(idx):
            if idx == depth:
                return lift(repl, depth)
            if idx > depth:
                return BVar(idx - 1)
            return body
        case App(fn, arg):
            return App(instantiate(fn, repl, depth), instantiate(arg, repl, depth))
        case Lam(name, ty, b):
            return Lam(name, instantiate(ty, repl, depth), instantiate(b, repl, depth + 1),
                       binds=body.binds)
        case Pi(name, ty, b):
            return Pi(name, instantiate(ty, repl, depth), instantiate(b, repl, depth + 1),
                      binds=body.binds)
        case Let(name, ty, value, b):
            return Let(name, instantiate(ty, repl, depth), instantiate(value, repl, depth),
                       instantiate(b, repl, depth + 1), binds=body.binds)
        case _:
            return body


def abstract_fvar(t: Term, fvar_id: int, depth: int = 0) -> Term:
    """Turn occurrences of FVar(fvar_id) into the bound variable at `depth`."""
    match t:
        case FVar(id=i):
            return BVar(depth) if i == fvar_id else t
        case App(fn, arg):
            return App(abstract_fvar(fn, fvar_id, depth), abstract_fvar(arg, fvar_id, depth))
        case Lam(name, ty, body):
            return Lam(name, abstract_fvar(ty, fvar_id, depth),
                       abstract_fvar(body, fvar_id, depth + 1), binds=t.binds)
        case Pi(name, ty, body):
            return Pi(name, abstract_fvar(ty, fvar_id, depth),
                      abstract_fvar(body, fvar_id, depth + 1), binds=t.binds)
        case Let(name, ty, value, body):
            return Let(name, abstract_fvar(ty, fvar_id, depth), abstract_fvar(value, fvar_id, depth),
                       abstract_fvar(body, fvar_id, depth + 1), binds=t.binds)
        case _:
            return t


def subst_fvar(t: Term, fvar_id: int, repl: Term) -> Term:
    """Replace FVar(fvar_id) by repl (repl must not contain loose BVars)."""
    match t:
        case FVar(id=i):
            return repl if i == fvar_id else t
        case App(fn, arg):
            return App(subst_fvar(fn, fvar_id, repl), subst_fvar(arg, fvar_id, repl))
        case Lam(name, ty, body):
            return Lam(name, subst_fvar(ty, fvar_id, repl), subst_fvar(body, fvar_id, repl),
                       binds=t.binds)
        case Pi(name, ty, body):
            return Pi(name, subst_fvar(ty, fvar_id, repl), subst_fvar(body, fvar_id, repl),
                      binds=t.binds)
        case Let(name, ty, value, body):
            return Let(name, subst_fvar(ty, fvar_id, repl), subst_fvar(value, fvar_id, repl),
                       subst_fvar(body, fvar_id, repl), binds=t.binds)
        case _:
            return t


def subterms(t: Term) -> Iterator[Term]:
    yield t
    match t:
        case App(fn, arg):
            yield from subterms(fn)
            yield from subterms(arg)
        case Lam(_, ty, body) | Pi(_, ty, body):
            yield from subterms(ty)
            yield from subterms(body)
        case Let(_, ty, value, body):
            yield from subterms(ty)
            yield from subterms(value)
            yield from subterms(body)
        case _:
            pass


def fvars_of(t: Term) -> set[int]:
    return {s.id for s in subterms(t) if isinstance(s, FVar)}


def mvars_of(t: Term) -> set[int]:
    return {s.id for s in subterms(t) if isinstance(s, MVar)}


def has_loose_bvars(t: Term, depth: int = 0) -> bool:
    match t:
        case BVar(idx):
            return idx >= depth
        case App(fn, arg):
            return has_loose_bvars(fn, depth) or has_loose_bvars(arg, depth)
        case Lam(_, ty, body) | Pi(_, ty, body):
            return has_loose_bvars(ty, depth) or has_loose_bvars(body, depth + 1)
        case Let(_, ty, value, body):
            return (has_loose_bvars(ty, depth) or has_loose_bvars(value, depth)
                    or has_loose_bvars(body, depth + 1))
        case _:
            return False


def term_size(t: Term) -> int:
    n = 0
    for _ in subterms(t):
        n += 1
    return n


@dataclass(frozen=True)
class CtxEntry:
    """One local hypothesis: `name : type` or a definition `name : type := value`."""
    fvar_id: int
    name: str
    ty: Term
    value: Optional[Term] = None
    # Hypotheses introduced by one binder group share a group id; the goal
    # printer collapses adjacent same-type entries of a group onto one line.
    group: int = -1


class LocalContext:
    """Ordered, immutable telescope of hypotheses."""

    __slots__ = ("entries", "_by_id")

    def __init__(self, entries: tuple[CtxEntry, ...] = ()):
        self.entries = entries
        self._by_id = {e.fvar_id: e for e in entries}

    def extend(self, entry: CtxEntry) -> "LocalContext":
        return LocalContext(self.entries + (entry,))

    def lookup(self, fvar_id: int) -> Optional[CtxEntry]:
        return self._by_id.get(fvar_id)

    def lookup_name(self, name: str) -> Optional[CtxEntry]:
        # Innermost binding wins.
        for e in reversed(self.entries):
            if e.name == name:
                return e
        return None

    def remove(self, fvar_id: int) -> "LocalContext":
        return LocalContext(tuple(e for e in self.entries if e.fvar_id != fvar_id))

    def names(self) -> set[str]:
        return {e.name for e in self.entries}

    def fvar_ids(self) -> set[int]:
        return set(self._by_id)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __repr__(self):
        return "LocalContext(" + ", ".join(f"{e.name}:{e.fvar_id}" for e in self.entries) + ")"


EMPTY_CTX = LocalContext()
