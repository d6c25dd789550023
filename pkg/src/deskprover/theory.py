"""The fixed object theory: propositional connectives, equality, Nat with
its order, and the handful of rewrite lemmas the simplifier orients.

Primitive formers and eliminators enter unchecked (their reduction behavior
is native to the kernel); everything with a proof term goes through the
checked add path, so building the environment doubles as a kernel self-test.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Callable

from .kernel import (N_ADD, N_AND, N_EQ, N_EXISTS, N_FALSE, N_IFF, N_LE,
                     N_LT, N_MUL, N_NAT, N_NOT, N_OR, N_REC, N_SUCC, N_TRUE,
                     N_ZERO, NAT, Declaration, Environment, fresh_fvar_id)
from .terms import (SORT_PROP, SORT_TYPE, App, Const, FVar, Lam, NatLit, Pi,
                    Term, abstract_fvar, app)

PROP = SORT_PROP
TYPE = SORT_TYPE


def _pi(name: str, ty: Term, mk_body: Callable[[Term], Term]) -> Term:
    f = fresh_fvar_id()
    return Pi(name, ty, abstract_fvar(mk_body(FVar(f)), f))


def _lam(name: str, ty: Term, mk_body: Callable[[Term], Term]) -> Term:
    f = fresh_fvar_id()
    return Lam(name, ty, abstract_fvar(mk_body(FVar(f)), f))


def _arrow(a: Term, b: Term) -> Term:
    # Non-dependent Pi; b never mentions the binder here.
    return Pi("a", a, b)


def _eq(a: Term, b: Term) -> Term:
    return app(Const(N_EQ), NAT, a, b)


def _add(a: Term, b: Term) -> Term:
    return app(Const(N_ADD), a, b)


def _mul(a: Term, b: Term) -> Term:
    return app(Const(N_MUL), a, b)


def _succ(a: Term) -> Term:
    return App(Const(N_SUCC), a)


def _le(a: Term, b: Term) -> Term:
    return app(Const(N_LE), a, b)


def _congr_succ(a: Term, b: Term, h: Term) -> Term:
    # Eq.congrArg at f := Nat.succ.
    return app(Const("Eq.congrArg"), NAT, NAT, a, b, Const(N_SUCC), h)


def _builtins() -> list[Declaration]:
    tt = Const(N_TRUE)
    and_c, or_c = Const(N_AND), Const(N_OR)
    ex = Const(N_EXISTS)
    eq = Const(N_EQ)

    def and_(a, b):
        return app(and_c, a, b)

    def or_(a, b):
        return app(or_c, a, b)

    prop2 = _arrow(PROP, _arrow(PROP, PROP))
    nat2_prop = _arrow(NAT, _arrow(NAT, PROP))

    return [
        Declaration(N_NAT, TYPE, kind="builtin"),
        Declaration(N_ZERO, NAT, kind="builtin"),
        Declaration(N_SUCC, _arrow(NAT, NAT), kind="builtin"),
        Declaration(N_ADD, _arrow(NAT, _arrow(NAT, NAT)), kind="builtin"),
        Declaration(N_MUL, _arrow(NAT, _arrow(NAT, NAT)), kind="builtin"),
        Declaration(N_LE, nat2_prop, kind="builtin"),
        Declaration(N_LT, nat2_prop,
                    value=_lam("a", NAT, lambda a: _lam("b", NAT, lambda b: _le(_succ(a), b))),
                    kind="definition"),
        Declaration(N_TRUE, PROP, kind="builtin"),
        Declaration("True.intro", tt, kind="builtin"),
        Declaration(N_FALSE, PROP, kind="builtin"),
        Declaration(N_AND, prop2, kind="builtin"),
        Declaration(N_OR, prop2, kind="builtin"),
        Declaration(N_NOT, _arrow(PROP, PROP),
                    value=_lam("p", PROP, lambda p: _arrow(p, Const(N_FALSE))),
                    kind="definition"),
        Declaration(N_IFF, prop2,
                    value=_lam("p", PROP, lambda p: _lam("q", PROP, lambda q: app(
                        and_c, _arrow(p, q), _arrow(q, p)))),
                    kind="definition"),
        Declaration(N_EXISTS,
                    _pi("α", TYPE, lambda a: _arrow(_arrow(a, PROP), PROP)),
                    kind="builtin"),
        Declaration("And.intro",
                    _pi("a", PROP, lambda a: _pi("b", PROP, lambda b:
                        _arrow(a, _arrow(b, and_(a, b))))),
                    kind="builtin", implicit=2),
        Declaration("And.left",
                    _pi("a", PROP, lambda a: _pi("b", PROP, lambda b:
                        _arrow(and_(a, b), a))),
                    kind="builtin", implicit=2),
        Declaration("And.right",
                    _pi("a", PROP, lambda a: _pi("b", PROP, lambda b:
                        _arrow(and_(a, b), b))),
                    kind="builtin", implicit=2),
        Declaration("Or.inl",
                    _pi("a", PROP, lambda a: _pi("b", PROP, lambda b:
                        _arrow(a, or_(a, b)))),
                    kind="builtin", implicit=2),
        Declaration("Or.inr",
                    _pi("a", PROP, lambda a: _pi("b", PROP, lambda b:
                        _arrow(b, or_(a, b)))),
                    kind="builtin", implicit=2),
        Declaration("Or.cases",
                    _pi("a", PROP, lambda a: _pi("b", PROP, lambda b: _pi("c", PROP, lambda c:
                        _arrow(or_(a, b), _arrow(_arrow(a, c), _arrow(_arrow(b, c), c)))))),
                    kind="builtin", implicit=3),
        Declaration("Exists.intro",
                    _pi("α", TYPE, lambda al: _pi("p", _arrow(al, PROP), lambda p:
                        _pi("w", al, lambda w: _arrow(App(p, w), app(ex, al, p))))),
                    kind="builtin", implicit=2),
        Declaration("Exists.cases",
                    _pi("α", TYPE, lambda al: _pi("p", _arrow(al, PROP), lambda p:
                        _pi("c", PROP, lambda c: _arrow(
                            app(ex, al, p),
                            _arrow(_pi("x", al, lambda x: _arrow(App(p, x), c)), c))))),
                    kind="builtin", implicit=3),
        Declaration(N_EQ,
                    _pi("α", TYPE, lambda al: _arrow(al, _arrow(al, PROP))),
                    kind="builtin", implicit=1),
        Declaration("Eq.refl",
                    _pi("α", TYPE, lambda al: _pi("a", al, lambda a:
                        app(eq, al, a, a))),
                    kind="builtin", implicit=1),
        Declaration("Eq.symm",
                    _pi("α", TYPE, lambda al: _pi("a", al, lambda a: _pi("b", al, lambda b:
                        _arrow(app(eq, al, a, b), app(eq, al, b, a))))),
                    kind="builtin", implicit=3),
        Declaration("Eq.trans",
                    _pi("α", TYPE, lambda al: _pi("a", al, lambda a: _pi("b", al, lambda b:
                        _pi("c", al, lambda c: _arrow(app(eq, al, a, b), _arrow(
                            app(eq, al, b, c), app(eq, al, a, c))))))),
                    kind="builtin", implicit=4),
        Declaration("Eq.subst",
                    _pi("α", TYPE, lambda al: _pi("motive", _arrow(al, PROP), lambda m:
                        _pi("a", al, lambda a: _pi("b", al, lambda b:
                            _arrow(app(eq, al, a, b), _arrow(App(m, a), App(m, b))))))),
                    kind="builtin", implicit=4),
        Declaration("Eq.congrArg",
                    _pi("α", TYPE, lambda al: _pi("β", TYPE, lambda be:
                        _pi("a", al, lambda a: _pi("b", al, lambda b:
                            _pi("f", _arrow(al, be), lambda f: _arrow(
                                app(eq, al, a, b), app(eq, be, App(f, a), App(f, b)))))))),
                    kind="builtin", implicit=4),
        Declaration(N_REC,
                    _pi("motive", _arrow(NAT, PROP), lambda m:
                        _arrow(App(m, NatLit(0)),
                               _arrow(_pi("n", NAT, lambda n: _arrow(App(m, n), App(m, _succ(n)))),
                                      _pi("t", NAT, lambda t: App(m, t))))),
                    kind="builtin", implicit=1),
        Declaration("Nat.le_refl", _pi("n", NAT, lambda n: _le(n, n)), kind="builtin"),
        Declaration("Nat.le_trans",
                    _pi("a", NAT, lambda a: _pi("b", NAT, lambda b: _pi("c", NAT, lambda c:
                        _arrow(_le(a, b), _arrow(_le(b, c), _le(a, c)))))),
                    kind="builtin"),
        Declaration("Nat.le_succ", _pi("n", NAT, lambda n: _le(n, _succ(n))), kind="builtin"),
        Declaration("Nat.zero_le", _pi("n", NAT, lambda n: _le(NatLit(0), n)), kind="builtin"),
        Declaration("Nat.succ_le_succ",
                    _pi("a", NAT, lambda a: _pi("b", NAT, lambda b:
                        _arrow(_le(a, b), _le(_succ(a), _succ(b))))),
                    kind="builtin"),
    ]


def _rewrite_lemmas() -> list[Declaration]:
    rec = Const(N_REC)

    def rec_over(scrut: Term, motive: Term, base: Term, step: Term) -> Term:
        return app(rec, motive, base, step, scrut)

    def refl(a: Term) -> Term:
        return app(Const("Eq.refl"), NAT, a)

    add_zero = Declaration(
        "add_zero",
        _pi("n", NAT, lambda n: _eq(_add(n, NatLit(0)), n)),
        value=_lam("n", NAT, lambda n: refl(n)),
        kind="theorem")

    zero_add = Declaration(
        "zero_add",
        _pi("n", NAT, lambda n: _eq(_add(NatLit(0), n), n)),
        value=_lam("n", NAT, lambda n: rec_over(
            n,
            _lam("k", NAT, lambda k: _eq(_add(NatLit(0), k), k)),
            refl(NatLit(0)),
            _lam("k", NAT, lambda k: _lam("ih", _eq(_add(NatLit(0), k), k), lambda ih:
                 _congr_succ(_add(NatLit(0), k), k, ih))))),
        kind="theorem")

    add_succ = Declaration(
        "add_succ",
        _pi("a", NAT, lambda a: _pi("b", NAT, lambda b:
            _eq(_add(a, _succ(b)), _succ(_add(a, b))))),
        value=_lam("a", NAT, lambda a: _lam("b", NAT, lambda b:
                   refl(_succ(_add(a, b))))),
        kind="theorem")

    succ_add = Declaration(
        "succ_add",
        _pi("a", NAT, lambda a: _pi("b", NAT, lambda b:
            _eq(_add(_succ(a), b), _succ(_add(a, b))))),
        value=_lam("a", NAT, lambda a: _lam("b", NAT, lambda b: rec_over(
            b,
            _lam("k", NAT, lambda k: _eq(_add(_succ(a), k), _succ(_add(a, k)))),
            refl(_succ(a)),
            _lam("k", NAT, lambda k: _lam(
                "ih", _eq(_add(_succ(a), k), _succ(_add(a, k))), lambda ih:
                _congr_succ(_add(_succ(a), k), _succ(_add(a, k)), ih)))))),
        kind="theorem")

    mul_zero = Declaration(
        "mul_zero",
        _pi("n", NAT, lambda n: _eq(_mul(n, NatLit(0)), NatLit(0))),
        value=_lam("n", NAT, lambda n: refl(NatLit(0))),
        kind="theorem")

    mul_one = Declaration(
        "mul_one",
        _pi("n", NAT, lambda n: _eq(_mul(n, NatLit(1)), n)),
        value=_lam("n", NAT, lambda n: App(Const("zero_add"), n)),
        kind="theorem")

    return [add_zero, zero_add, add_succ, succ_add, mul_zero, mul_one]


# Names the simplifier uses when no lemma list is given, in orientation order.
DEFAULT_SIMP_LEMMAS = ("add_zero", "zero_add", "add_succ", "succ_add",
                       "mul_zero", "mul_one")


@lru_cache(maxsize=1)
def _base_env() -> Environment:
    env = Environment()
    for d in _builtins():
        env = env.add_unchecked(d)
    for d in _rewrite_lemmas():
        env = env.add(d)
    return env


def initial_env() -> Environment:
    """The fixed theory.  Cached; environments are persistent so sharing
    one base across sessions is safe."""
    return _base_env()
