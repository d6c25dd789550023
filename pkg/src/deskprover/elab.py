"""Elaboration of surface terms into kernel terms.

Elaboration runs against a goal's local context and metavariable store:
implicit arguments and placeholders become fresh metavariables, numerals
become literals, and notation desugars to the corresponding constants.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import ElabError, UnifyFailure, UnknownName
from .kernel import (DECIDE_CERT, N_ADD, N_AND, N_EQ, N_EXISTS, N_IFF, N_LE,
                     N_LT, N_MUL, N_NOT, N_OR, NAT, Environment, fresh_fvar_id,
                     fresh_group_id, infer, unify, whnf)
from .metastate import MetaStore
from .surface import (SApp, SBin, SExists, SForall, SFun, SGroup, SHole,
                      SIdent, SLet, SNode, SNot, SNum, SSorry)
from .terms import (SORT_PROP, SORT_TYPE, App, Const, CtxEntry, FVar, Lam,
                    Let, LocalContext, MVar, NatLit, Pi, Sort, Term,
                    abstract_fvar, app, instantiate, subst_fvar)

_BIN_NAT = {"add": N_ADD, "mul": N_MUL, "le": N_LE, "lt": N_LT}
_BIN_PROP = {"or": N_OR, "and": N_AND, "iff": N_IFF}


class Elaborator:
    def __init__(self, env: Environment, store: MetaStore):
        self.env = env
        self.store = store
        self.holes: list[int] = []  # placeholder mvars in occurrence order
        self.created: list[int] = []  # every mvar minted during elaboration

    # -- helpers -----------------------------------------------------------

    def _pp(self, t: Term, ctx: LocalContext) -> str:
        from .printer import pretty
        return pretty(t, ctx, store=self.store)

    def _unify(self, ctx: LocalContext, got: Term, expected: Term) -> None:
        try:
            self.store = unify(self.env, ctx, got, expected, self.store)
        except UnifyFailure as e:
            raise ElabError(
                f"type mismatch: expected {self._pp(expected, ctx)}, "
                f"got {self._pp(got, ctx)} ({e.message})") from e

    def _ensure(self, ctx: LocalContext, term: Term, ty: Optional[Term],
                expected: Optional[Term]) -> None:
        if expected is None:
            return
        if ty is None:
            raise ElabError("Type cannot appear in this position")
        self._unify(ctx, ty, expected)

    def _fresh_hole(self, ctx: LocalContext, target: Term, origin: str) -> Term:
        m, self.store = self.store.fresh(ctx, target, origin)
        self.created.append(m)
        if origin in ("hole", "sorry"):
            self.holes.append(m)
        return MVar(m)

    def _elab_type(self, ctx: LocalContext, snode: SNode) -> Term:
        t, ty = self.elab(ctx, snode, None)
        if isinstance(t, Sort):
            return t
        if ty is not None and isinstance(whnf(self.env, ctx, ty, self.store), Sort):
            return t
        raise ElabError(f"expected a type or proposition, got {self._pp(t, ctx)}")

    def _open_groups(self, ctx: LocalContext, groups: tuple[SGroup, ...],
                     expected: Optional[Term],
                     ) -> tuple[LocalContext, list[tuple[str, Term, int]], Optional[Term]]:
        """Open binder groups over fresh local variables.

        Returns the extended context, the opened binders in order, and the
        expected type with the matching leading binders stripped.
        """
        opened: list[tuple[str, Term, int]] = []
        for g in groups:
            gid = fresh_group_id()
            for name in g.names:
                ty: Optional[Term] = None
                if g.ty is not None:
                    ty = self._elab_type(ctx, g.ty)
                else:
                    if expected is not None:
                        w = whnf(self.env, ctx, expected, self.store)
                        if isinstance(w, Pi):
                            ty = w.ty
                    if ty is None:
                        ty = self._fresh_hole(ctx, SORT_TYPE, "domain")
                f = fresh_fvar_id()
                ctx = ctx.extend(CtxEntry(f, name, ty, None, gid))
                opened.append((name, ty, f))
                if expected is not None:
                    w = whnf(self.env, ctx, expected, self.store)
                    expected = instantiate(w.body, FVar(f)) if isinstance(w, Pi) else None
        return ctx, opened, expected

    # -- main entry --------------------------------------------------------

    def elab(self, ctx: LocalContext, snode: SNode,
             expected: Optional[Term]) -> tuple[Term, Optional[Term]]:
        match snode:
            case SNum(n):
                self._ensure(ctx, NatLit(n), NAT, expected)
                return NatLit(n), NAT
            case SHole():
                if expected is None:
                    raise ElabError("cannot infer a type for the placeholder _")
                return self._fresh_hole(ctx, expected, "hole"), expected
            case SSorry():
                if expected is None:
                    raise ElabError("cannot infer a type for sorry here")
                return self._fresh_hole(ctx, expected, "sorry"), expected
            case SIdent():
                term, ty = self._elab_ident(ctx, snode)
                self._ensure(ctx, term, ty, expected)
                return term, ty
            case SApp():
                return self._elab_app(ctx, snode, expected)
            case SBin():
                return self._elab_bin(ctx, snode, expected)
            case SNot(arg):
                a, _ = self.elab(ctx, arg, SORT_PROP)
                term = App(Const(N_NOT), a)
                self._ensure(ctx, term, SORT_PROP, expected)
                return term, SORT_PROP
            case SFun(groups, body):
                ctx2, opened, expected2 = self._open_groups(ctx, groups, expected)
                b, bty = self.elab(ctx2, body, expected2)
                if bty is None:
                    raise ElabError("a function body cannot be Type")
                term: Term = b
                ty: Term = bty
                for name, dom, f in reversed(opened):
                    term = Lam(name, dom, abstract_fvar(term, f), binds=f)
                    ty = Pi(name, dom, abstract_fvar(ty, f), binds=f)
                self._ensure(ctx, term, ty, expected)
                return term, ty
            case SForall(groups, body):
                ctx2, opened, _ = self._open_groups(ctx, groups, None)
                b, bty = self.elab(ctx2, body, None)
                sort = self._sort_of(ctx2, b, bty)
                term = b
                for name, dom, f in reversed(opened):
                    term = Pi(name, dom, abstract_fvar(term, f), binds=f)
                self._ensure(ctx, term, sort, expected)
                return term, sort
            case SExists(groups, body):
                ctx2, opened, _ = self._open_groups(ctx, groups, None)
                b, bty = self.elab(ctx2, body, None)
                if bty is None or not self._is_prop(ctx2, b, bty):
                    raise ElabError("the body of ∃ must be a proposition")
                term = b
                for name, dom, f in reversed(opened):
                    term = app(Const(N_EXISTS), dom,
                               Lam(name, dom, abstract_fvar(term, f), binds=f))
                self._ensure(ctx, term, SORT_PROP, expected)
                return term, SORT_PROP
            case SLet(name, sty, sval, sbody):
                if sty is not None:
                    ty = self._elab_type(ctx, sty)
                else:
                    ty = self._fresh_hole(ctx, SORT_TYPE, "domain")
                v, _ = self.elab(ctx, sval, ty)
                f = fresh_fvar_id()
                ctx2 = ctx.extend(CtxEntry(f, name, ty, v, fresh_group_id()))
                b, bty = self.elab(ctx2, sbody, None)
                if bty is None:
                    raise ElabError("a let body cannot be Type")
                term = Let(name, ty, v, abstract_fvar(b, f), binds=f)
                ty_out = subst_fvar(bty, f, v)
                self._ensure(ctx, term, ty_out, expected)
                return term, ty_out
        raise ElabError(f"cannot elaborate {snode!r}")

    # -- case workers ------------------------------------------------------

    def _is_prop(self, ctx: LocalContext, t: Term, ty: Term) -> bool:
        return whnf(self.env, ctx, ty, self.store) == SORT_PROP

    def _sort_of(self, ctx: LocalContext, t: Term, ty: Optional[Term]) -> Term:
        """The sort of a term used as a binder body (itself a type)."""
        if ty is None:
            raise ElabError("Type cannot be quantified over")
        w = whnf(self.env, ctx, ty, self.store)
        if not isinstance(w, Sort):
            raise ElabError(f"expected a type or proposition, got {self._pp(t, ctx)}")
        return SORT_PROP if w == SORT_PROP else SORT_TYPE

    def _elab_ident(self, ctx: LocalContext, s: SIdent) -> tuple[Term, Optional[Term]]:
        if s.name == "Prop":
            return SORT_PROP, SORT_TYPE
        if s.name == "Type":
            return SORT_TYPE, None
        entry = ctx.lookup_name(s.name)
        if entry is not None:
            return FVar(entry.fvar_id), entry.ty
        decl = self.env.get(s.name)
        if decl is None:
            raise UnknownName(f"unknown identifier {s.name}")
        term: Term = Const(s.name)
        ty = decl.type
        if not s.explicit:
            for _ in range(decl.implicit):
                w = whnf(self.env, ctx, ty, self.store)
                if not isinstance(w, Pi):
                    break
                m = self._fresh_hole(ctx, w.ty, "implicit")
                term = App(term, m)
                ty = instantiate(w.body, m)
        return term, ty

    def _elab_app(self, ctx: LocalContext, s: SApp,
                  expected: Optional[Term]) -> tuple[Term, Optional[Term]]:
        spine: list[SNode] = []
        head: SNode = s
        while isinstance(head, SApp):
            spine.append(head.arg)
            head = head.fn
        spine.reverse()
        # Certificates for decidable propositions are checked, not stored.
        if isinstance(head, SIdent) and head.name == DECIDE_CERT:
            if len(spine) != 1:
                raise ElabError(f"{DECIDE_CERT} expects exactly one argument")
            p, _ = self.elab(ctx, spine[0], SORT_PROP)
            term = App(Const(DECIDE_CERT), p)
            self._ensure(ctx, term, p, expected)
            return term, p
        term, ty = self.elab(ctx, head, None)
        for arg_node in spine:
            if ty is None:
                raise ElabError("Type cannot be applied")
            w = whnf(self.env, ctx, ty, self.store)
            if not isinstance(w, Pi):
                raise ElabError(
                    f"term of type {self._pp(ty, ctx)} is applied to an argument")
            a, _ = self.elab(ctx, arg_node, w.ty)
            term = App(term, a)
            ty = instantiate(w.body, a)
        self._ensure(ctx, term, ty, expected)
        return term, ty

    def _elab_bin(self, ctx: LocalContext, s: SBin,
                  expected: Optional[Term]) -> tuple[Term, Optional[Term]]:
        if s.op in _BIN_NAT:
            l, _ = self.elab(ctx, s.lhs, NAT)
            r, _ = self.elab(ctx, s.rhs, NAT)
            term = app(Const(_BIN_NAT[s.op]), l, r)
            ty = NAT if s.op in ("add", "mul") else SORT_PROP
            self._ensure(ctx, term, ty, expected)
            return term, ty
        if s.op in _BIN_PROP:
            l, _ = self.elab(ctx, s.lhs, SORT_PROP)
            r, _ = self.elab(ctx, s.rhs, SORT_PROP)
            term = app(Const(_BIN_PROP[s.op]), l, r)
            self._ensure(ctx, term, SORT_PROP, expected)
            return term, SORT_PROP
        if s.op == "eq":
            # Elaborate the non-placeholder side first so a bare _ gets a type.
            if isinstance(s.lhs, SHole) and not isinstance(s.rhs, SHole):
                r, rty = self.elab(ctx, s.rhs, None)
                if rty is None:
                    raise ElabError("cannot equate Type")
                l, _ = self.elab(ctx, s.lhs, rty)
                alpha = rty
            else:
                l, lty = self.elab(ctx, s.lhs, None)
                if lty is None:
                    raise ElabError("cannot equate Type")
                r, _ = self.elab(ctx, s.rhs, lty)
                alpha = lty
            term = app(Const(N_EQ), alpha, l, r)
            self._ensure(ctx, term, SORT_PROP, expected)
            return term, SORT_PROP
        if s.op == "imp":
            l, lty = self.elab(ctx, s.lhs, None)
            r, rty = self.elab(ctx, s.rhs, None)
            if not isinstance(l, Sort):
                if lty is None or not isinstance(whnf(self.env, ctx, lty, self.store), Sort):
                    raise ElabError("the domain of → must be a type or proposition")
            if rty is None:
                raise ElabError("the codomain of → cannot be Type")
            if not isinstance(r, Sort) and not isinstance(whnf(self.env, ctx, rty, self.store), Sort):
                raise ElabError("the codomain of → must be a type or proposition")
            sort = SORT_PROP if self._is_prop(ctx, r, rty) else SORT_TYPE
            term = Pi("a", l, r)
            self._ensure(ctx, term, sort, expected)
            return term, sort
        raise ElabError(f"unknown operator {s.op}")


@dataclass(frozen=True)
class ElabResult:
    term: Term
    type: Optional[Term]
    store: MetaStore
    holes: tuple[int, ...]  # _ and sorry placeholders, in occurrence order
    created: tuple[int, ...]  # all mvars minted, including implicits


def elaborate(env: Environment, store: MetaStore, ctx: LocalContext,
              snode: SNode, expected: Optional[Term] = None) -> ElabResult:
    e = Elaborator(env, store)
    term, ty = e.elab(ctx, snode, expected)
    return ElabResult(term, ty, e.store, tuple(e.holes), tuple(e.created))
