"""Kernel for the fixed two-level theory: reduction, typing, definitional
equality, first-order/pattern unification, and the arithmetic decision
evaluator that backs `decide` certificates.

Sort structure: Prop : Type, and Type has no type.  The object theory is
fixed at construction (see theory.py); `add_decl` only ever extends an
environment with checked definitions and theorems.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import (DuplicateName, OccursCheck, OutOfFragment, TypingError,
                     UnifyFailure, UnknownName)
from .terms import (DECIDE_CERT, EMPTY_CTX, PROP, SORT_PROP, SORT_TYPE, App,
                    BVar, Const, CtxEntry, FVar, Lam, Let, LocalContext, MVar,
                    NatLit, Pi, Sort, Term, abstract_fvar, app, app_spine,
                    fvars_of, instantiate, mvars_of, subst_fvar)

N_NAT = "Nat"
N_ZERO = "Nat.zero"
N_SUCC = "Nat.succ"
N_ADD = "Nat.add"
N_MUL = "Nat.mul"
N_LE = "Nat.le"
N_LT = "Nat.lt"
N_REC = "Nat.rec"
N_EQ = "Eq"
N_AND = "And"
N_OR = "Or"
N_NOT = "Not"
N_TRUE = "True"
N_FALSE = "False"
N_EXISTS = "Exists"
N_IFF = "Iff"

NAT = Const(N_NAT)

_next_fvar = 0


def fresh_fvar_id() -> int:
    """Session-unique local variable id (monotone, never reused)."""
    global _next_fvar
    _next_fvar += 1
    return _next_fvar


@dataclass(frozen=True)
class Declaration:
    name: str
    type: Term
    value: Optional[Term] = None
    kind: str = "theorem"  # builtin | definition | theorem | axiom
    # Number of leading Pi binders the elaborator fills in with fresh
    # metavariables when the constant is mentioned without `@`.
    implicit: int = 0


class Environment:
    """Insertion-ordered map of checked declarations.  Persistent: add()
    returns a new environment and leaves the receiver untouched."""

    __slots__ = ("decls",)

    def __init__(self, decls: Optional[dict[str, Declaration]] = None):
        self.decls = decls if decls is not None else {}

    def get(self, name: str) -> Optional[Declaration]:
        return self.decls.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self.decls

    def __iter__(self):
        return iter(self.decls.values())

    def add(self, decl: Declaration) -> "Environment":
        check_decl(self, decl)
        new = dict(self.decls)
        new[decl.name] = decl
        return Environment(new)

    def add_unchecked(self, decl: Declaration) -> "Environment":
        # Theory bootstrap only: primitive formers have no checkable type
        # (their types mention constants defined later in the same batch).
        if decl.name in self.decls:
            raise DuplicateName(f"duplicate declaration: {decl.name}")
        new = dict(self.decls)
        new[decl.name] = decl
        return Environment(new)


# Duck-typed view of the metavariable store the tactic layer passes in; the
# kernel never constructs one.  store.assignment(id) -> Term | None,
# store.target(id) -> Term, store.ctx(id) -> LocalContext.


def inst_mvars(t: Term, store) -> Term:
    """Substitute assigned metavariables, transitively.  Free variables of an
    assignment refer to the metavariable's own context and stay put; binder
    tags are preserved so readback can still abstract them later."""
    if store is None or not mvars_of(t):
        return t
    match t:
        case MVar(id=m):
            a = store.assignment(m)
            return t if a is None else inst_mvars(a, store)
        case App(fn, arg):
            return App(inst_mvars(fn, store), inst_mvars(arg, store))
        case Lam(name, ty, body):
            return Lam(name, inst_mvars(ty, store), inst_mvars(body, store), binds=t.binds)
        case Pi(name, ty, body):
            return Pi(name, inst_mvars(ty, store), inst_mvars(body, store), binds=t.binds)
        case Let(name, ty, value, body):
            return Let(name, inst_mvars(ty, store), inst_mvars(value, store),
                       inst_mvars(body, store), binds=t.binds)
        case _:
            return t


def _capture_pending(body: Term, fvar_id: int, store) -> bool:
    # True when an unassigned metavariable declared over fvar_id still sits
    # in body: beta-reducing past the binder would lose the dependency.
    if store is None:
        return False
    for m in mvars_of(body):
        if store.assignment(m) is None:
            ctx = store.ctx(m)
            if ctx is not None and ctx.lookup(fvar_id) is not None:
                return True
    return False


def _delta_unfolds(decl: Declaration) -> bool:
    return decl.kind == "definition" and decl.value is not None


def whnf(env: Environment, ctx: LocalContext, t: Term, store=None) -> Term:
    """Weak head normal form: beta, zeta (lets and local definitions), delta
    for definitions, iota for Nat.rec, and native Nat.add/Nat.mul steps with
    a literal fast path.  Numerals are kept as NatLit."""
    while True:
        head, args = app_spine(t)
        match head:
            case MVar(id=m):
                a = store.assignment(m) if store is not None else None
                if a is None:
                    return t
                t = app(a, *args)
            case FVar(id=f):
                e = ctx.lookup(f)
                if e is None or e.value is None:
                    return t
                t = app(e.value, *args)
            case Let(_, _, value, body):
                if head.binds is not None and _capture_pending(body, head.binds, store):
                    return t
                t = app(instantiate(body, value), *args)
            case Lam(_, _, body):
                if not args:
                    return t
                if head.binds is not None and _capture_pending(body, head.binds, store):
                    return t
                t = app(instantiate(body, args[0]), *args[1:])
            case Const(name):
                stepped = _native_step(env, ctx, name, args, store)
                if stepped is not None:
                    t = stepped
                    continue
                decl = env.get(name)
                if decl is not None and _delta_unfolds(decl):
                    t = app(decl.value, *args)
                    continue
                return t
            case _:
                return t


def _native_step(env, ctx, name: str, args: list[Term], store) -> Optional[Term]:
    """One computation step for the built-in arithmetic heads, or None."""
    if name == N_ZERO and not args:
        return NatLit(0)
    if name == N_SUCC and len(args) == 1:
        a = whnf(env, ctx, args[0], store)
        if isinstance(a, NatLit):
            return NatLit(a.n + 1)
        return None
    if name == N_ADD and len(args) == 2:
        b = whnf(env, ctx, args[1], store)
        if isinstance(b, NatLit):
            if b.n == 0:
                return args[0]
            a = whnf(env, ctx, args[0], store)
            if isinstance(a, NatLit):
                return NatLit(a.n + b.n)
            return App(Const(N_SUCC), app(Const(N_ADD), args[0], NatLit(b.n - 1)))
        bh, bargs = app_spine(b)
        if bh == Const(N_SUCC) and len(bargs) == 1:
            return App(Const(N_SUCC), app(Const(N_ADD), args[0], bargs[0]))
        return None
    if name == N_MUL and len(args) == 2:
        b = whnf(env, ctx, args[1], store)
        if isinstance(b, NatLit):
            if b.n == 0:
                return NatLit(0)
            a = whnf(env, ctx, args[0], store)
            if isinstance(a, NatLit):
                return NatLit(a.n * b.n)
            return app(Const(N_ADD), app(Const(N_MUL), args[0], NatLit(b.n - 1)), args[0])
        bh, bargs = app_spine(b)
        if bh == Const(N_SUCC) and len(bargs) == 1:
            return app(Const(N_ADD), app(Const(N_MUL), args[0], bargs[0]), args[0])
        return None
    if name == N_REC and len(args) >= 4:
        motive, z, s, scrut = args[0], args[1], args[2], args[3]
        rest = args[4:]
        sc = whnf(env, ctx, scrut, store)
        if isinstance(sc, NatLit):
            if sc.n == 0:
                return app(z, *rest)
            prev = NatLit(sc.n - 1)
            return app(s, prev, app(Const(N_REC), motive, z, s, prev), *rest)
        sh, sargs = app_spine(sc)
        if sh == Const(N_SUCC) and len(sargs) == 1:
            return app(s, sargs[0], app(Const(N_REC), motive, z, s, sargs[0]), *rest)
        return None
    return None


_next_group = 0


def fresh_group_id() -> int:
    """Introduction-event id; hypotheses introduced together share one."""
    global _next_group
    _next_group += 1
    return _next_group


def _open_binder(ctx: LocalContext, name: str, ty: Term,
                 value: Optional[Term] = None,
                 reuse: Optional[int] = None) -> tuple[int, LocalContext, int]:
    # A binder tagged with the local variable it closes over is reopened with
    # that same variable, so bodies that mention it through metavariable
    # contexts or directly still type-check.
    f = reuse if reuse is not None else fresh_fvar_id()
    return f, ctx.extend(CtxEntry(f, name, ty, value)), f


def infer(env: Environment, ctx: LocalContext, t: Term, store=None) -> Term:
    """Synthesize the type of t.  Raises TypingError on ill-typed input."""
    match t:
        case Sort(level):
            if level == PROP:
                return SORT_TYPE
            raise TypingError("Type has no type")
        case Const(name):
            if name == DECIDE_CERT:
                raise TypingError("decide certificate must be applied to a proposition")
            decl = env.get(name)
            if decl is None:
                raise UnknownName(f"unknown constant: {name}")
            return decl.type
        case FVar(id=f):
            e = ctx.lookup(f)
            if e is None:
                raise TypingError(f"free variable not in scope: #{f}")
            return e.ty
        case MVar(id=m):
            if store is None:
                raise TypingError("metavariable outside any store")
            return inst_mvars(store.target(m), store)
        case NatLit():
            return NAT
        case App(Const(name), p) if name == DECIDE_CERT:
            p_ty = infer(env, ctx, p, store)
            if whnf(env, ctx, p_ty, store) != SORT_PROP:
                raise TypingError("decide certificate expects a proposition")
            verdict = eval_decide(env, ctx, p, store)
            if verdict != "isTrue":
                raise TypingError(f"decide certificate rejected: evaluation is {verdict}")
            return p
        case App(fn, arg):
            fn_ty = whnf(env, ctx, infer(env, ctx, fn, store), store)
            if not isinstance(fn_ty, Pi):
                raise TypingError("function expected in application")
            arg_ty = infer(env, ctx, arg, store)
            if not defeq(env, ctx, arg_ty, fn_ty.ty, store):
                raise TypingError("application argument type mismatch")
            return instantiate(fn_ty.body, arg)
        case Lam(name, ty, body):
            _check_is_sort(env, ctx, ty, store)
            f, ctx2, _ = _open_binder(ctx, name, ty, reuse=t.binds)
            body_ty = infer(env, ctx2, instantiate(body, FVar(f)), store)
            return Pi(name, ty, abstract_fvar(body_ty, f))
        case Pi(name, ty, body):
            _check_is_sort(env, ctx, ty, store)
            f, ctx2, _ = _open_binder(ctx, name, ty, reuse=t.binds)
            s2 = whnf(env, ctx2, infer(env, ctx2, instantiate(body, FVar(f)), store), store)
            if not isinstance(s2, Sort):
                raise TypingError("binder body is not a sort")
            return SORT_PROP if s2.level == PROP else SORT_TYPE
        case Let(name, ty, value, body):
            _check_is_sort(env, ctx, ty, store)
            v_ty = infer(env, ctx, value, store)
            if not defeq(env, ctx, v_ty, ty, store):
                raise TypingError(f"let value does not have the stated type for {name}")
            f, ctx2, _ = _open_binder(ctx, name, ty, value, reuse=t.binds)
            body_ty = infer(env, ctx2, instantiate(body, FVar(f)), store)
            return subst_fvar(body_ty, f, value)
        case BVar():
            raise TypingError("loose bound variable")
    raise TypingError(f"cannot infer type of {t!r}")


def _check_is_sort(env, ctx, ty: Term, store) -> Sort:
    w = whnf(env, ctx, ty, store)
    if w == SORT_TYPE:
        # Type is terminal yet legal as a binder domain (e.g. ∀ (α : Type), …).
        return SORT_TYPE
    s = whnf(env, ctx, infer(env, ctx, ty, store), store)
    if not isinstance(s, Sort):
        raise TypingError("binder type is not a sort")
    return s


def defeq(env: Environment, ctx: LocalContext, a: Term, b: Term, store=None) -> bool:
    """Definitional equality: beta, eta for lambdas, zeta, delta for
    definitions, NatLit folding.  No proof irrelevance."""
    a = inst_mvars(a, store)
    b = inst_mvars(b, store)
    return _defeq(env, ctx, a, b, store)


def _defeq(env, ctx, a: Term, b: Term, store) -> bool:
    if a == b:
        return True
    a = whnf(env, ctx, a, store)
    b = whnf(env, ctx, b, store)
    if a == b:
        return True
    # Eta: compare a lambda against any other function value.
    if isinstance(a, Lam) and not isinstance(b, Lam):
        f, ctx2, _ = _open_binder(ctx, a.name, a.ty)
        return _defeq(env, ctx2, instantiate(a.body, FVar(f)), App(b, FVar(f)), store)
    if isinstance(b, Lam) and not isinstance(a, Lam):
        f, ctx2, _ = _open_binder(ctx, b.name, b.ty)
        return _defeq(env, ctx2, App(a, FVar(f)), instantiate(b.body, FVar(f)), store)
    match a, b:
        case Sort(l1), Sort(l2):
            return l1 == l2
        case NatLit(n1), NatLit(n2):
            return n1 == n2
        case Lam(_, ty1, body1), Lam(_, ty2, body2):
            if not _defeq(env, ctx, ty1, ty2, store):
                return False
            f, ctx2, _ = _open_binder(ctx, a.name, ty1)
            return _defeq(env, ctx2, instantiate(body1, FVar(f)), instantiate(body2, FVar(f)), store)
        case Pi(_, ty1, body1), Pi(_, ty2, body2):
            if not _defeq(env, ctx, ty1, ty2, store):
                return False
            f, ctx2, _ = _open_binder(ctx, a.name, ty1)
            return _defeq(env, ctx2, instantiate(body1, FVar(f)), instantiate(body2, FVar(f)), store)
        case _:
            pass
    # NatLit against an unreduced successor.
    for x, y in ((a, b), (b, a)):
        if isinstance(x, NatLit):
            yh, yargs = app_spine(y)
            if yh == Const(N_SUCC) and len(yargs) == 1 and x.n > 0:
                return _defeq(env, ctx, NatLit(x.n - 1), yargs[0], store)
            return False
    ah, aargs = app_spine(a)
    bh, bargs = app_spine(b)
    if len(aargs) != len(bargs):
        return False
    match ah, bh:
        case Const(n1), Const(n2):
            if n1 != n2:
                return False
        case FVar(f1), FVar(f2):
            if f1 != f2:
                return False
        case MVar(m1), MVar(m2):
            if m1 != m2:
                return False
        case _:
            if ah != bh:
                return False
    return all(_defeq(env, ctx, x, y, store) for x, y in zip(aargs, bargs))


# ---------------------------------------------------------------------------
# Unification


def unify(env: Environment, ctx: LocalContext, a: Term, b: Term, store):
    """Solve a =?= b, returning the extended store.  First-order problems
    plus the Miller pattern fragment; anything else raises OutOfFragment."""
    a = inst_mvars(a, store)
    b = inst_mvars(b, store)
    if a == b:
        return store
    wa = whnf(env, ctx, a, store)
    wb = whnf(env, ctx, b, store)
    if wa == wb:
        return store
    ah, aargs = app_spine(wa)
    bh, bargs = app_spine(wb)
    a_flex = isinstance(ah, MVar)
    b_flex = isinstance(bh, MVar)
    if a_flex and b_flex:
        if ah == bh and aargs == bargs:
            return store
        if not aargs and not bargs:
            # Orient toward the younger metavariable for determinism.
            m1, m2 = (ah, bh) if ah.id < bh.id else (bh, ah)
            return _assign(env, ctx, m2.id, m1, store)
        raise OutOfFragment("flex-flex unification problem")
    if a_flex or b_flex:
        flex, fargs, rigid, raw = ((ah, aargs, wb, b) if a_flex
                                   else (bh, bargs, wa, a))
        if not fargs:
            # Assign the un-reduced side: assignments feed back into goal
            # statements and extracted proofs, so they should keep the
            # shape they were written in.
            return _assign(env, ctx, flex.id, raw, store)
        if all(isinstance(x, FVar) for x in fargs) \
                and len({x.id for x in fargs if isinstance(x, FVar)}) == len(fargs):
            return _assign_pattern(env, ctx, flex.id, fargs, rigid, store)
        # First-order fallback: peel matching argument counts off both
        # spines, e.g. ?f ?a against Nat.succ (n + m).
        rh, rargs = app_spine(rigid)
        if len(rargs) >= len(fargs):
            cut = len(rargs) - len(fargs)
            head = rh
            for x in rargs[:cut]:
                head = App(head, x)
            store = _assign(env, ctx, flex.id, head, store)
            for x, y in zip(fargs, rargs[cut:]):
                store = unify(env, ctx, x, y, store)
            return store
        raise OutOfFragment("metavariable applied to non-variable arguments")
    # Rigid-rigid.
    if isinstance(wa, Lam) and not isinstance(wb, Lam):
        f, ctx2, _ = _open_binder(ctx, wa.name, wa.ty)
        return unify(env, ctx2, instantiate(wa.body, FVar(f)), App(wb, FVar(f)), store)
    if isinstance(wb, Lam) and not isinstance(wa, Lam):
        f, ctx2, _ = _open_binder(ctx, wb.name, wb.ty)
        return unify(env, ctx2, App(wa, FVar(f)), instantiate(wb.body, FVar(f)), store)
    match wa, wb:
        case Sort(l1), Sort(l2):
            if l1 == l2:
                return store
            raise UnifyFailure(f"sort mismatch: {l1} vs {l2}")
        case NatLit(n1), NatLit(n2):
            if n1 == n2:
                return store
            raise UnifyFailure(f"numeral mismatch: {n1} vs {n2}")
        case Lam(_, ty1, body1), Lam(_, ty2, body2):
            store = unify(env, ctx, ty1, ty2, store)
            f, ctx2, _ = _open_binder(ctx, wa.name, inst_mvars(ty1, store))
            return unify(env, ctx2, instantiate(body1, FVar(f)), instantiate(body2, FVar(f)), store)
        case Pi(_, ty1, body1), Pi(_, ty2, body2):
            store = unify(env, ctx, ty1, ty2, store)
            f, ctx2, _ = _open_binder(ctx, wa.name, inst_mvars(ty1, store))
            return unify(env, ctx2, instantiate(body1, FVar(f)), instantiate(body2, FVar(f)), store)
        case _:
            pass
    for x, y in ((wa, wb), (wb, wa)):
        if isinstance(x, NatLit):
            yh, yargs = app_spine(y)
            if yh == Const(N_SUCC) and len(yargs) == 1 and x.n > 0:
                return unify(env, ctx, NatLit(x.n - 1), yargs[0], store)
            raise UnifyFailure("numeral does not match")
    heads_match = (type(ah) is type(bh)) and ah == bh
    if not heads_match or len(aargs) != len(bargs):
        raise UnifyFailure("rigid head mismatch")
    for x, y in zip(aargs, bargs):
        store = unify(env, ctx, x, y, store)
    return store


def _occurs(m: int, t: Term, store) -> bool:
    for v in mvars_of(t):
        if v == m:
            return True
        a = store.assignment(v)
        if a is not None and _occurs(m, a, store):
            return True
    return False


def _assign(env, ctx, m: int, value: Term, store):
    if _occurs(m, value, store):
        raise OccursCheck(f"occurs check failed for ?m.{m}")
    allowed = store.ctx(m).fvar_ids()
    escaping = fvars_of(inst_mvars(value, store)) - allowed
    if escaping:
        raise UnifyFailure("assignment would let local variables escape their scope")
    try:
        value_ty = infer(env, ctx, value, store)
    except TypingError as e:
        raise OutOfFragment(f"cannot type candidate assignment: {e.message}") from e
    store = unify(env, ctx, value_ty, store.target(m), store)
    return store.assign(m, value)


def _assign_pattern(env, ctx, m: int, args: list[Term], rigid: Term, store):
    # Miller fragment: metavariable applied to distinct local variables.
    if not all(isinstance(x, FVar) for x in args):
        raise OutOfFragment("metavariable applied to non-variable arguments")
    ids = [x.id for x in args]
    if len(set(ids)) != len(ids):
        raise OutOfFragment("metavariable applied to repeated variables")
    if _occurs(m, rigid, store):
        raise OccursCheck(f"occurs check failed for ?m.{m}")
    body = inst_mvars(rigid, store)
    lam = body
    for f in reversed(ids):
        entry = ctx.lookup(f)
        if entry is None:
            raise OutOfFragment("pattern variable not in scope")
        lam = Lam(entry.name, entry.ty, abstract_fvar(lam, f))
    return _assign(env, ctx, m, lam, store)


# ---------------------------------------------------------------------------
# Declarations


def check_decl(env: Environment, decl: Declaration) -> None:
    """Full check of a closed declaration against the current environment."""
    if decl.name in env:
        raise DuplicateName(f"duplicate declaration: {decl.name}")
    ty_sort = whnf(env, EMPTY_CTX, infer(env, EMPTY_CTX, decl.type), None)
    if not isinstance(ty_sort, Sort):
        raise TypingError(f"declaration type of {decl.name} is not a proposition or type")
    if decl.value is not None:
        v_ty = infer(env, EMPTY_CTX, decl.value)
        if not defeq(env, EMPTY_CTX, v_ty, decl.type):
            raise TypingError(f"declaration value does not have the stated type for {decl.name}")


def add_decl(env: Environment, decl: Declaration) -> Environment:
    """Check decl and return the extended environment; env is unchanged."""
    return env.add(decl)


# ---------------------------------------------------------------------------
# Decision evaluator


def eval_nat(env, ctx, t: Term, store=None) -> Optional[int]:
    """Evaluate a closed Nat expression to a numeral, or None if stuck."""
    t = whnf(env, ctx, t, store)
    if isinstance(t, NatLit):
        return t.n
    h, args = app_spine(t)
    if h == Const(N_SUCC) and len(args) == 1:
        inner = eval_nat(env, ctx, args[0], store)
        return None if inner is None else inner + 1
    return None


def _invert(v: str) -> str:
    if v == "isTrue":
        return "isFalse"
    if v == "isFalse":
        return "isTrue"
    return "stuck"


def eval_decide(env: Environment, ctx: LocalContext, p: Term, store=None) -> str:
    """Trusted evaluator for closed arithmetic propositions.

    Returns "isTrue" | "isFalse" | "stuck".  Handles True/False/And/Or/Not
    and Eq/le/lt over numeral-normalizable Nat arithmetic; anything with
    free variables, metavariables, or quantifiers is stuck."""
    p = whnf(env, ctx, p, store)
    head, args = app_spine(p)
    match head:
        case Const(name) if name == N_TRUE:
            return "isTrue"
        case Const(name) if name == N_FALSE:
            return "isFalse"
        case Const(name) if name == N_AND and len(args) == 2:
            l = eval_decide(env, ctx, args[0], store)
            r = eval_decide(env, ctx, args[1], store)
            if l == "isFalse" or r == "isFalse":
                return "isFalse"
            if l == "isTrue" and r == "isTrue":
                return "isTrue"
            return "stuck"
        case Const(name) if name == N_OR and len(args) == 2:
            l = eval_decide(env, ctx, args[0], store)
            r = eval_decide(env, ctx, args[1], store)
            if l == "isTrue" or r == "isTrue":
                return "isTrue"
            if l == "isFalse" and r == "isFalse":
                return "isFalse"
            return "stuck"
        case Const(name) if name == N_EQ and len(args) == 3:
            if whnf(env, ctx, args[0], store) != NAT:
                return "stuck"
            x = eval_nat(env, ctx, args[1], store)
            y = eval_nat(env, ctx, args[2], store)
            if x is None or y is None:
                return "stuck"
            return "isTrue" if x == y else "isFalse"
        case Const(name) if name == N_LE and len(args) == 2:
            x = eval_nat(env, ctx, args[0], store)
            y = eval_nat(env, ctx, args[1], store)
            if x is None or y is None:
                return "stuck"
            return "isTrue" if x <= y else "isFalse"
        case Pi(_, dom, body):
            # Negation unfolds to an implication into False; only that shape
            # is decidable here, general implications stay stuck.
            if body == Const(N_FALSE):
                return _invert(eval_decide(env, ctx, dom, store))
            return "stuck"
        case _:
            return "stuck"
    return "stuck"


def decide_cert(p: Term) -> Term:
    """Certificate term accepted by infer exactly when eval_decide(p) holds."""
    return App(Const(DECIDE_CERT), p)
