"""Tactic execution.

Every tactic is a pure function from a metavariable store and a focused
goal to an extended store plus the goals it produced.  The focused goal is
closed by assigning it a proof term whose leaves are the produced goals;
the assignment is type-checked before it enters the store, so a state can
never hold an ill-typed partial proof.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .elab import elaborate
from .errors import (ElabError, HammerExhausted, LhsMismatch, NotAnEquality,
                     RelationMismatch, TacticFailure, TypingError,
                     UnifyFailure, UnknownGoal, UnknownName)
from .kernel import (N_ADD, N_AND, N_EQ, N_EXISTS, N_MUL, N_OR, N_TRUE, NAT,
                     Environment, decide_cert, defeq, eval_decide,
                     fresh_fvar_id, fresh_group_id, infer, inst_mvars, unify,
                     whnf)
from .metastate import (CouplingGroup, GoalState, MetaStore, Session,
                        coupling_groups)
from .surface import (TacticNode, TApply, TAssumption, TCalc, TCases,
                      TConvDone, TConvEnter, TConvRw, TDecide, TExact,
                      TExists, TExprTac, THammer, THave, TInduction, TIntro,
                      TLetTac, TRfl, TRw, TSimp, TSorryTac, parse_tactic)
from .terms import (SORT_PROP, App, BVar, Const, CtxEntry, FVar, Lam, Let,
                    LocalContext, MVar, NatLit, Pi, Sort, Term, abstract_fvar,
                    app, app_spine, fvars_of, has_loose_bvars, instantiate,
                    mvars_of, subst_fvar, subterms, term_size)
from .theory import DEFAULT_SIMP_LEMMAS


@dataclass(frozen=True)
class TacticResult:
    state: GoalState
    produced: tuple[int, ...]
    messages: tuple[str, ...]
    coupling: list[CouplingGroup]


def run_tactic(session: Session, state: GoalState, goal_id: int,
               tactic: "str | TacticNode",
               automatic: Optional[bool] = None) -> TacticResult:
    node = parse_tactic(tactic) if isinstance(tactic, str) else tactic
    if goal_id not in state.goals:
        raise UnknownGoal(f"goal ?m.{goal_id} is not active in state {state.id}")
    env = session.env_of(state)
    store, produced, messages = dispatch(env, state.store, goal_id, node)
    auto = True if automatic is None else automatic
    goals = list(produced)
    if auto:
        for g in state.goals:
            if g != goal_id and g not in goals:
                goals.append(g)
    active = tuple(g for g in goals if store.assignment(g) is None)
    new_state = session.add_state(state.id, store, active, state.root)
    produced = tuple(g for g in produced if store.assignment(g) is None)
    return TacticResult(new_state, produced, tuple(messages),
                        coupling_groups(new_state))


def dispatch(env: Environment, store: MetaStore, gid: int,
             node: TacticNode) -> tuple[MetaStore, list[int], list[str]]:
    match node:
        case TIntro(names):
            return _intro(env, store, gid, names)
        case TExact(term):
            return _exact(env, store, gid, term)
        case TApply(term):
            return _apply(env, store, gid, term)
        case TAssumption():
            return _assumption(env, store, gid)
        case TRfl():
            return _rfl(env, store, gid)
        case TDecide():
            return _decide(env, store, gid)
        case TCases(hyp, names):
            return _cases(env, store, gid, hyp, names)
        case TExists(witness):
            return _exists(env, store, gid, witness)
        case THave(name, ty, proof):
            return _have(env, store, gid, name, ty, proof)
        case TLetTac(name, ty, value):
            return _let(env, store, gid, name, ty, value)
        case TRw(items):
            if store.origin(gid).startswith("conv:"):
                return _conv_rw(env, store, gid, items)
            return _rw(env, store, gid, items)
        case TInduction(var, _):
            return _induction(env, store, gid, var, None)
        case TCalc():
            return _calc(env, store, gid, node)
        case TConvEnter(side):
            return _conv_enter(env, store, gid, side)
        case TConvRw(items):
            return _conv_rw(env, store, gid, items)
        case TConvDone():
            return _conv_done(env, store, gid)
        case TExprTac(term):
            return _expr(env, store, gid, term)
        case TSimp(lemmas):
            return _simp(env, store, gid, lemmas)
        case THammer(budget):
            return _hammer(env, store, gid, budget)
        case TSorryTac():
            return _sorry(env, store, gid)
    raise TacticFailure(f"unhandled tactic {node!r}")


# ---------------------------------------------------------------------------
# Shared plumbing


def _checked_assign(env: Environment, store: MetaStore, mid: int,
                    value: Term, what: str) -> MetaStore:
    # Invariant: every assignment type-checks against the goal's target in
    # the goal's own context at the moment it is made.
    d = store.decl(mid)
    try:
        vty = infer(env, d.ctx, value, store)
    except TypingError as e:
        raise TypingError(f"{what} produced an ill-typed term: {e.message}") from e
    if not defeq(env, d.ctx, vty, d.target, store):
        raise TypingError(f"{what} produced a proof of the wrong statement")
    return store.assign(mid, value)


def _goal(store: MetaStore, gid: int):
    d = store.decl(gid)
    return d.ctx, inst_mvars(d.target, store)


def _eq_parts(env: Environment, ctx: LocalContext, target: Term,
              store: MetaStore) -> Optional[tuple[Term, Term, Term]]:
    head, args = app_spine(whnf(env, ctx, target, store))
    if isinstance(head, Const) and head.name == N_EQ and len(args) == 3:
        return args[0], args[1], args[2]
    return None


def _refl(alpha: Term, a: Term) -> Term:
    return app(Const("Eq.refl"), alpha, a)


def _symm(alpha: Term, a: Term, b: Term, h: Term) -> Term:
    return app(Const("Eq.symm"), alpha, a, b, h)


def _try_rfl(env: Environment, store: MetaStore, gid: int,
             ) -> tuple[MetaStore, bool]:
    ctx, target = _goal(store, gid)
    parts = _eq_parts(env, ctx, target, store)
    if parts is None:
        return store, False
    alpha, a, b = parts
    try:
        store = unify(env, ctx, a, b, store)
    except UnifyFailure:
        return store, False
    a = inst_mvars(a, store)
    store = _checked_assign(env, store, gid, _refl(inst_mvars(alpha, store), a), "rfl")
    return store, True


# ---------------------------------------------------------------------------
# Basic goal closers


def _intro(env: Environment, store: MetaStore, gid: int,
           names: tuple[str, ...]) -> tuple[MetaStore, list[int], list[str]]:
    group = fresh_group_id()
    cur = gid
    todo: list[Optional[str]] = list(names) if names else []
    auto = not names  # bare intros: take every leading binder
    i = 0
    while True:
        if not auto and i >= len(todo):
            break
        d = store.decl(cur)
        t = whnf(env, d.ctx, d.target, store)
        if not isinstance(t, Pi):
            if auto:
                break
            raise TacticFailure("intro: the goal is not a ∀ or →")
        name = todo[i] if not auto else (t.name if t.name != "_" else "h")
        f = fresh_fvar_id()
        ctx2 = d.ctx.extend(CtxEntry(f, name, t.ty, None, group))
        m, store = store.fresh(ctx2, instantiate(t.body, FVar(f)), "intro")
        store = _checked_assign(env, store, cur,
                                Lam(name, t.ty, MVar(m), binds=f), "intro")
        cur = m
        i += 1
    return store, [cur], []


def _leftover_holes(store: MetaStore, created: tuple[int, ...],
                    what: str) -> None:
    bad = [m for m in created
           if store.assignment(m) is None and store.origin(m) != "sorry"]
    if bad:
        raise TacticFailure(
            f"{what}: the term leaves placeholders or implicit arguments "
            f"undetermined ({', '.join(f'?m.{m}' for m in bad)})")


def _exact(env: Environment, store: MetaStore, gid: int,
           snode) -> tuple[MetaStore, list[int], list[str]]:
    ctx, target = _goal(store, gid)
    r = elaborate(env, store, ctx, snode, target)
    store = r.store
    _leftover_holes(store, r.created, "exact")
    store = _checked_assign(env, store, gid, r.term, "exact")
    return store, [], []


def _apply(env: Environment, store: MetaStore, gid: int,
           snode) -> tuple[MetaStore, list[int], list[str]]:
    ctx, _ = _goal(store, gid)
    r = elaborate(env, store, ctx, snode, None)
    if r.type is None:
        raise ElabError("Type cannot be applied to a goal")
    return _apply_core(env, r.store, gid, r.term, r.type, list(r.created))


def _apply_core(env: Environment, store: MetaStore, gid: int, term: Term,
                ty: Term, arg_mvars: list[int],
                ) -> tuple[MetaStore, list[int], list[str]]:
    d = store.decl(gid)
    ctx = d.ctx
    cur_t, cur_ty = term, ty
    last_err = ""
    while True:
        try:
            store2 = unify(env, ctx, cur_ty, d.target, store)
            break
        except UnifyFailure as e:
            last_err = e.message
        w = whnf(env, ctx, cur_ty, store)
        if not isinstance(w, Pi):
            raise TacticFailure(
                f"apply: the conclusion does not unify with the goal ({last_err})")
        m, store = store.fresh(ctx, w.ty, "apply")
        arg_mvars.append(m)
        cur_t = App(cur_t, MVar(m))
        cur_ty = instantiate(w.body, MVar(m))
    store = _checked_assign(env, store2, gid, cur_t, "apply")
    props: list[int] = []
    values: list[int] = []
    for m in arg_mvars:
        if store.assignment(m) is not None:
            continue
        md = store.decl(m)
        try:
            sort = whnf(env, md.ctx, infer(env, md.ctx, md.target, store), store)
        except TypingError:
            sort = None  # a Type-level placeholder: treat as a value goal
        (props if sort == SORT_PROP else values).append(m)
    return store, props + values, []


def _assumption(env: Environment, store: MetaStore, gid: int,
                ) -> tuple[MetaStore, list[int], list[str]]:
    ctx, target = _goal(store, gid)
    for e in reversed(ctx.entries):
        # Unify rather than check: a coupled goal like a ≤ ?b should close
        # against a ≤ b, instantiating the shared metavariable.
        try:
            store2 = unify(env, ctx, e.ty, target, store)
        except UnifyFailure:
            continue
        store = _checked_assign(env, store2, gid, FVar(e.fvar_id), "assumption")
        return store, [], []
    raise TacticFailure("assumption: no hypothesis matches the goal")


def _rfl(env: Environment, store: MetaStore, gid: int,
         ) -> tuple[MetaStore, list[int], list[str]]:
    ctx, target = _goal(store, gid)
    if _eq_parts(env, ctx, target, store) is None:
        raise TacticFailure("rfl: the goal is not an equality")
    store, closed = _try_rfl(env, store, gid)
    if not closed:
        raise TacticFailure("rfl: the two sides are not definitionally equal")
    return store, [], []


def _decide(env: Environment, store: MetaStore, gid: int,
            ) -> tuple[MetaStore, list[int], list[str]]:
    ctx, target = _goal(store, gid)
    verdict = eval_decide(env, ctx, target, store)
    if verdict == "isTrue":
        store = _checked_assign(env, store, gid, decide_cert(target), "decide")
        return store, [], []
    if verdict == "isFalse":
        raise TacticFailure("decide: the proposition is false")
    raise TacticFailure("decide: the proposition is not closed decidable arithmetic")


def _sorry(env: Environment, store: MetaStore, gid: int,
           ) -> tuple[MetaStore, list[int], list[str]]:
    d = store.decl(gid)
    hole, store = store.fresh(d.ctx, d.target, "sorry")
    store = _checked_assign(env, store, gid, MVar(hole), "sorry")
    return store, [], []


# ---------------------------------------------------------------------------
# Structural tactics


def _depends_later(ctx: LocalContext, fid: int, target: Term) -> bool:
    seen = False
    for e in ctx.entries:
        if e.fvar_id == fid:
            seen = True
            continue
        if seen and (fid in fvars_of(e.ty)
                     or (e.value is not None and fid in fvars_of(e.value))):
            return True
    return fid in fvars_of(target)


def _case_name(ctx: LocalContext, disjunct: Term, side: str) -> str:
    if isinstance(disjunct, FVar):
        e = ctx.lookup(disjunct.id)
        if e is not None:
            return f"h_{e.name}"
    return f"h_{side}"


def _cases(env: Environment, store: MetaStore, gid: int, hyp: str,
           names: Optional[tuple[str, ...]],
           ) -> tuple[MetaStore, list[int], list[str]]:
    ctx, target = _goal(store, gid)
    e = ctx.lookup_name(hyp)
    if e is None:
        raise TacticFailure(f"cases: unknown hypothesis {hyp}")
    w = whnf(env, ctx, e.ty, store)
    head, args = app_spine(w)
    ctx0 = ctx if _depends_later(ctx, e.fvar_id, target) else ctx.remove(e.fvar_id)
    group = fresh_group_id()
    if isinstance(head, Const) and head.name == N_OR and len(args) == 2:
        a, b = args
        if names is not None and len(names) == 2:
            n1, n2 = names
        else:
            n1 = _case_name(ctx, a, "inl")
            n2 = _case_name(ctx, b, "inr")
        f1 = fresh_fvar_id()
        g1, store = store.fresh(ctx0.extend(CtxEntry(f1, n1, a, None, group)),
                                target, "cases")
        f2 = fresh_fvar_id()
        g2, store = store.fresh(ctx0.extend(CtxEntry(f2, n2, b, None, group)),
                                target, "cases")
        val = app(Const("Or.cases"), a, b, target, FVar(e.fvar_id),
                  Lam(n1, a, MVar(g1), binds=f1), Lam(n2, b, MVar(g2), binds=f2))
        store = _checked_assign(env, store, gid, val, "cases")
        return store, [g1, g2], []
    if isinstance(head, Const) and head.name == N_AND and len(args) == 2:
        a, b = args
        if names is not None and len(names) == 2:
            n1, n2 = names
        else:
            n1 = _case_name(ctx, a, "left")
            n2 = _case_name(ctx, b, "right")
        f1 = fresh_fvar_id()
        f2 = fresh_fvar_id()
        ctx2 = (ctx0.extend(CtxEntry(f1, n1, a, None, group))
                    .extend(CtxEntry(f2, n2, b, None, group)))
        g, store = store.fresh(ctx2, target, "cases")
        fn = Lam(n1, a, Lam(n2, b, MVar(g), binds=f2), binds=f1)
        val = app(fn,
                  app(Const("And.left"), a, b, FVar(e.fvar_id)),
                  app(Const("And.right"), a, b, FVar(e.fvar_id)))
        store = _checked_assign(env, store, gid, val, "cases")
        return store, [g], []
    if isinstance(head, Const) and head.name == N_EXISTS and len(args) == 2:
        alpha, p = args
        wn = names[0] if names else (p.name if isinstance(p, Lam) else "x")
        hn = names[1] if names and len(names) > 1 else hyp
        fx = fresh_fvar_id()
        prop_ty = instantiate(p.body, FVar(fx)) if isinstance(p, Lam) else App(p, FVar(fx))
        fh = fresh_fvar_id()
        ctx2 = (ctx0.extend(CtxEntry(fx, wn, alpha, None, group))
                    .extend(CtxEntry(fh, hn, prop_ty, None, group)))
        g, store = store.fresh(ctx2, target, "cases")
        val = app(Const("Exists.cases"), alpha, p, target, FVar(e.fvar_id),
                  Lam(wn, alpha, Lam(hn, prop_ty, MVar(g), binds=fh), binds=fx))
        store = _checked_assign(env, store, gid, val, "cases")
        return store, [g], []
    raise TacticFailure(
        "cases: the hypothesis is not a disjunction, conjunction, or existential")


def _exists(env: Environment, store: MetaStore, gid: int,
            snode) -> tuple[MetaStore, list[int], list[str]]:
    ctx, target = _goal(store, gid)
    head, args = app_spine(whnf(env, ctx, target, store))
    if not (isinstance(head, Const) and head.name == N_EXISTS and len(args) == 2):
        raise TacticFailure("exists: the goal is not an existential")
    alpha, p = args
    r = elaborate(env, store, ctx, snode, alpha)
    store = r.store
    _leftover_holes(store, r.created, "exists")
    wt = r.term
    prop = instantiate(p.body, wt) if isinstance(p, Lam) else App(p, wt)
    g, store = store.fresh(ctx, prop, "exists")
    val = app(Const("Exists.intro"), alpha, p, wt, MVar(g))
    store = _checked_assign(env, store, gid, val, "exists")
    store, closed = _try_close_immediate(env, store, g)
    return store, ([] if closed else [g]), []


def _try_close_immediate(env: Environment, store: MetaStore, gid: int,
                         ) -> tuple[MetaStore, bool]:
    ctx, target = _goal(store, gid)
    if eval_decide(env, ctx, target, store) == "isTrue":
        store = _checked_assign(env, store, gid, decide_cert(target), "decide")
        return store, True
    return _try_rfl(env, store, gid)


def _have(env: Environment, store: MetaStore, gid: int, name: str, sty,
          sproof) -> tuple[MetaStore, list[int], list[str]]:
    ctx, target = _goal(store, gid)
    r = elaborate(env, store, ctx, sty, None)
    store = r.store
    stated = r.term
    if r.type is None or whnf(env, ctx, r.type, store) != SORT_PROP:
        raise TypingError(
            "have: the stated type must be a Prop; "
            "use let to introduce definitions")
    produced: list[int] = []
    if sproof is not None:
        pr = elaborate(env, store, ctx, sproof, stated)
        store = pr.store
        _leftover_holes(store, pr.created, "have")
        value: Term = pr.term
    else:
        pg, store = store.fresh(ctx, stated, "have")
        value = MVar(pg)
        produced.append(pg)
    f = fresh_fvar_id()
    ctx2 = ctx.extend(CtxEntry(f, name, stated, None, fresh_group_id()))
    rest, store = store.fresh(ctx2, target, "have")
    produced.append(rest)
    val = App(Lam(name, stated, MVar(rest), binds=f), value)
    store = _checked_assign(env, store, gid, val, "have")
    return store, produced, []


def _let(env: Environment, store: MetaStore, gid: int, name: str, sty,
         svalue) -> tuple[MetaStore, list[int], list[str]]:
    ctx, target = _goal(store, gid)
    r = elaborate(env, store, ctx, sty, None)
    store = r.store
    stated = r.term
    if not (isinstance(stated, Sort)
            or (r.type is not None
                and isinstance(whnf(env, ctx, r.type, store), Sort))):
        raise TypingError("let: the stated type must be a type or proposition")
    vr = elaborate(env, store, ctx, svalue, stated)
    store = vr.store
    _leftover_holes(store, vr.created, "let")
    f = fresh_fvar_id()
    ctx2 = ctx.extend(CtxEntry(f, name, stated, vr.term, fresh_group_id()))
    rest, store = store.fresh(ctx2, target, "let")
    val = Let(name, stated, vr.term, MVar(rest), binds=f)
    store = _checked_assign(env, store, gid, val, "let")
    return store, [rest], []


# ---------------------------------------------------------------------------
# Rewriting


def _lemma_instance(env: Environment, store: MetaStore, ctx: LocalContext,
                    name: str, origin: str,
                    ) -> tuple[Term, Term, MetaStore]:
    """A proof term for `name` with every binder filled by a fresh mvar,
    together with its (whnf) statement."""
    e = ctx.lookup_name(name)
    if e is not None:
        proof: Term = FVar(e.fvar_id)
        stmt = e.ty
    else:
        decl = env.get(name)
        if decl is None:
            raise UnknownName(f"unknown identifier {name}")
        proof = Const(name)
        stmt = decl.type
    while True:
        w = whnf(env, ctx, stmt, store)
        if not isinstance(w, Pi):
            return proof, w, store
        m, store = store.fresh(ctx, w.ty, origin)
        proof = App(proof, MVar(m))
        stmt = instantiate(w.body, MVar(m))


def _abstract_pattern(t: Term, pat: Term, depth: int = 0) -> Term:
    # pat is closed with respect to binders, so plain equality is stable
    # at any depth.
    if t == pat:
        return BVar(depth)
    match t:
        case App(fn, arg):
            return App(_abstract_pattern(fn, pat, depth),
                       _abstract_pattern(arg, pat, depth))
        case Lam(name, ty, body, binds):
            return Lam(name, _abstract_pattern(ty, pat, depth),
                       _abstract_pattern(body, pat, depth + 1), binds)
        case Pi(name, ty, body, binds):
            return Pi(name, _abstract_pattern(ty, pat, depth),
                      _abstract_pattern(body, pat, depth + 1), binds)
        case Let(name, ty, value, body, binds):
            return Let(name, _abstract_pattern(ty, pat, depth),
                       _abstract_pattern(value, pat, depth),
                       _abstract_pattern(body, pat, depth + 1), binds)
        case _:
            return t


def _match_pattern(env: Environment, store: MetaStore, ctx: LocalContext,
                   pattern: Term, sub: Term) -> Optional[MetaStore]:
    """Match a rewrite pattern against one subterm.

    Matching is structural at the head: the pattern's spine head and arity
    must be mirrored by the subterm, and only the arguments unify (where
    conversion is wanted, e.g. a numeral against a successor pattern).
    Handing the whole pattern to unify would let the kernel reduce it
    first, and a pattern like ?n + 0 collapses to bare ?n, which matches
    everything and rewrites nothing."""
    ph, pargs = app_spine(pattern)
    sh, sargs = app_spine(sub)
    if isinstance(ph, (Const, FVar)):
        if type(ph) is not type(sh) or len(pargs) != len(sargs):
            return None
        if isinstance(ph, Const) and ph.name != sh.name:
            return None
        if isinstance(ph, FVar) and ph.id != sh.id:
            return None
        try:
            for x, y in zip(pargs, sargs):
                store = unify(env, ctx, x, y, store)
            return store
        except UnifyFailure:
            return None
    try:
        return unify(env, ctx, pattern, sub, store)
    except UnifyFailure:
        return None


def _find_rewrite(env: Environment, store: MetaStore, ctx: LocalContext,
                  scrutinee: Term, pattern: Term,
                  ) -> Optional[tuple[MetaStore, Term]]:
    """Match the pattern against the first viable subterm.

    The matched subterm itself comes back alongside the store: occurrence
    abstraction must target what is literally in the goal, which can differ
    syntactically from the instantiated pattern."""
    for sub in subterms(scrutinee):
        if has_loose_bvars(sub) or isinstance(sub, MVar):
            continue
        hit = _match_pattern(env, store, ctx, pattern, sub)
        if hit is not None:
            return hit, sub
    return None


def _rw_step(env: Environment, store: MetaStore, gid: int, rev: bool,
             name: str, origin: str) -> tuple[MetaStore, int]:
    ctx, target = _goal(store, gid)
    proof, stmt, store = _lemma_instance(env, store, ctx, name, origin)
    head, args = app_spine(stmt)
    if not (isinstance(head, Const) and head.name == N_EQ and len(args) == 3):
        raise TacticFailure(f"rw: {name} is not an equality")
    alpha, lhs, rhs = args
    if rev:
        proof = _symm(alpha, lhs, rhs, proof)
        lhs, rhs = rhs, lhs
    hit = _find_rewrite(env, store, ctx, target, lhs)
    if hit is None:
        raise TacticFailure(
            f"rw: no occurrence of the left-hand side of {name} in the goal")
    store, sub = hit
    li = inst_mvars(lhs, store)
    ri = inst_mvars(rhs, store)
    ai = inst_mvars(alpha, store)
    if mvars_of(li) or mvars_of(ri):
        raise TacticFailure(f"rw: could not determine the arguments of {name}")
    proof = inst_mvars(proof, store)
    target = inst_mvars(target, store)
    sub = inst_mvars(sub, store)
    motive_body = _abstract_pattern(target, sub)
    new_target = instantiate(motive_body, ri)
    motive = Lam("x", ai, motive_body)
    g, store = store.fresh(ctx, new_target, origin)
    val = app(Const("Eq.subst"), ai, motive, ri, li,
              _symm(ai, li, ri, proof), MVar(g))
    store = _checked_assign(env, store, gid, val, "rw")
    return store, g


def _rw(env: Environment, store: MetaStore, gid: int,
        items: tuple[tuple[bool, str], ...],
        ) -> tuple[MetaStore, list[int], list[str]]:
    cur = gid
    for rev, name in items:
        store, cur = _rw_step(env, store, cur, rev, name, "rw")
    store, closed = _try_rfl(env, store, cur)
    return store, ([] if closed else [cur]), []


# ---------------------------------------------------------------------------
# Induction


def _induction(env: Environment, store: MetaStore, gid: int, var: str,
               names: Optional[tuple[str, str]],
               ) -> tuple[MetaStore, list[int], list[str]]:
    ctx, target = _goal(store, gid)
    e = ctx.lookup_name(var)
    if e is None:
        raise TacticFailure(f"induction: unknown hypothesis {var}")
    if whnf(env, ctx, e.ty, store) != NAT:
        raise TacticFailure(f"induction: {var} is not a Nat")
    if e.value is not None:
        raise TacticFailure(f"induction: {var} is a definition, not a variable")
    fv = e.fvar_id
    if _depends_later(ctx, fv, Const(N_TRUE)):
        raise TacticFailure(f"induction: later hypotheses depend on {var}")
    motive = Lam(var, NAT, abstract_fvar(target, fv))
    ctx0 = ctx.remove(fv)
    g_base, store = store.fresh(ctx0, subst_fvar(target, fv, NatLit(0)),
                                "induction")
    n_name, ih_name = names if names else (var, "ih")
    group = fresh_group_id()
    fn = fresh_fvar_id()
    ih_ty = subst_fvar(target, fv, FVar(fn))
    fih = fresh_fvar_id()
    step_target = subst_fvar(target, fv, app(Const(N_ADD), FVar(fn), NatLit(1)))
    ctx_step = (ctx0.extend(CtxEntry(fn, n_name, NAT, None, group))
                    .extend(CtxEntry(fih, ih_name, ih_ty, None, group)))
    g_step, store = store.fresh(ctx_step, step_target, "induction")
    val = app(Const("Nat.rec"), motive, MVar(g_base),
              Lam(n_name, NAT, Lam(ih_name, ih_ty, MVar(g_step), binds=fih),
                  binds=fn),
              FVar(fv))
    store = _checked_assign(env, store, gid, val, "induction")
    return store, [g_base, g_step], []


# ---------------------------------------------------------------------------
# Calculation chains


_REL_SYM = {"eq": "=", "le": "≤"}


def _calc(env: Environment, store: MetaStore, gid: int,
          node: TCalc) -> tuple[MetaStore, list[int], list[str]]:
    ctx, target = _goal(store, gid)
    w = whnf(env, ctx, target, store)
    head, args = app_spine(w)
    if isinstance(head, Const) and head.name == N_EQ and len(args) == 3:
        rel, alpha, big_l, big_r = "eq", args[0], args[1], args[2]
    elif isinstance(head, Const) and head.name == "Nat.le" and len(args) == 2:
        rel, alpha, big_l, big_r = "le", NAT, args[0], args[1]
    else:
        raise NotAnEquality("calc: the goal is not an equality or ≤")
    if node.op != rel:
        raise RelationMismatch(
            f"calc: the step uses {_REL_SYM.get(node.op, node.op)} but the "
            f"goal relates with {_REL_SYM[rel]}")
    elem_ty = alpha if rel == "eq" else NAT
    if node.lhs is None:
        lterm = big_l
    else:
        r = elaborate(env, store, ctx, node.lhs, elem_ty)
        lterm, store = r.term, r.store
        if not defeq(env, ctx, lterm, big_l, store):
            raise LhsMismatch(
                "calc: the step's left-hand side does not match the goal")
    rr = elaborate(env, store, ctx, node.rhs, elem_ty)
    mid, store = rr.term, rr.store
    if rel == "eq":
        step_stmt = app(Const(N_EQ), alpha, lterm, mid)
    else:
        step_stmt = app(Const("Nat.le"), lterm, mid)
    jr = elaborate(env, store, ctx, node.just, step_stmt)
    store = jr.store
    _leftover_holes(store, jr.created, "calc")
    if defeq(env, ctx, mid, big_r, store):
        store = _checked_assign(env, store, gid, jr.term, "calc")
        return store, [], []
    if rel == "eq":
        rest_stmt = app(Const(N_EQ), alpha, mid, big_r)
    else:
        rest_stmt = app(Const("Nat.le"), mid, big_r)
    g, store = store.fresh(ctx, rest_stmt, "calc")
    if rel == "eq":
        val = app(Const("Eq.trans"), alpha, lterm, mid, big_r, jr.term, MVar(g))
    else:
        val = app(Const("Nat.le_trans"), lterm, mid, big_r, jr.term, MVar(g))
    store = _checked_assign(env, store, gid, val, "calc")
    return store, [g], []


# ---------------------------------------------------------------------------
# Conversion focus


def _conv_enter(env: Environment, store: MetaStore, gid: int,
                side: str) -> tuple[MetaStore, list[int], list[str]]:
    ctx, target = _goal(store, gid)
    parts = _eq_parts(env, ctx, target, store)
    if parts is None:
        raise NotAnEquality("conv: the goal is not an equality")
    alpha, lhs, rhs = parts
    fin, store = store.fresh(ctx, alpha, "conv.val")
    if side == "lhs":
        main_t = app(Const(N_EQ), alpha, MVar(fin), rhs)
        focus_on = lhs
    else:
        main_t = app(Const(N_EQ), alpha, lhs, MVar(fin))
        focus_on = rhs
    main, store = store.fresh(ctx, main_t, "conv.main")
    focus, store = store.fresh(ctx, app(Const(N_EQ), alpha, focus_on, MVar(fin)),
                               f"conv:{side}:{main}")
    if side == "lhs":
        val = app(Const("Eq.trans"), alpha, lhs, MVar(fin), rhs,
                  MVar(focus), MVar(main))
    else:
        val = app(Const("Eq.trans"), alpha, lhs, MVar(fin), rhs,
                  MVar(main), _symm(alpha, rhs, MVar(fin), MVar(focus)))
    store = _checked_assign(env, store, gid, val, "conv")
    return store, [focus], []


def _conv_parts(store: MetaStore, gid: int) -> tuple[LocalContext, Term, Term, Term, str]:
    d = store.decl(gid)
    if not d.origin.startswith("conv:"):
        raise TacticFailure("conv: the goal is not a conversion focus")
    target = inst_mvars(d.target, store)
    head, args = app_spine(target)
    alpha, cur, acc = args
    return d.ctx, alpha, cur, acc, d.origin


def _conv_rw(env: Environment, store: MetaStore, gid: int,
             items: tuple[tuple[bool, str], ...],
             ) -> tuple[MetaStore, list[int], list[str]]:
    cur_gid = gid
    for rev, name in items:
        store, cur_gid = _conv_rw_step(env, store, cur_gid, rev, name)
    return store, [cur_gid], []


def _conv_rw_step(env: Environment, store: MetaStore, gid: int, rev: bool,
                  name: str) -> tuple[MetaStore, int]:
    ctx, alpha, cur, acc, origin = _conv_parts(store, gid)
    proof, stmt, store = _lemma_instance(env, store, ctx, name, "conv")
    head, args = app_spine(stmt)
    if not (isinstance(head, Const) and head.name == N_EQ and len(args) == 3):
        raise TacticFailure(f"conv rw: {name} is not an equality")
    beta, lhs, rhs = args
    if rev:
        proof = _symm(beta, lhs, rhs, proof)
        lhs, rhs = rhs, lhs
    hit = _find_rewrite(env, store, ctx, cur, lhs)
    if hit is None:
        raise TacticFailure(
            f"conv rw: no occurrence of the left-hand side of {name} "
            "in the focused side")
    store, sub = hit
    li = inst_mvars(lhs, store)
    ri = inst_mvars(rhs, store)
    bi = inst_mvars(beta, store)
    if mvars_of(li) or mvars_of(ri):
        raise TacticFailure(f"conv rw: could not determine the arguments of {name}")
    proof = inst_mvars(proof, store)
    sub = inst_mvars(sub, store)
    body = _abstract_pattern(cur, sub)
    cur2 = instantiate(body, ri)
    # Eq cur cur2, by rewriting the right occurrence inside a refl.
    motive = Lam("x", bi, app(Const(N_EQ), alpha, cur, body))
    pf = app(Const("Eq.subst"), bi, motive, li, ri, proof,
             _refl(inst_mvars(alpha, store), cur))
    g, store = store.fresh(ctx, app(Const(N_EQ), alpha, cur2, acc), origin)
    val = app(Const("Eq.trans"), alpha, cur, cur2, acc, pf, MVar(g))
    store = _checked_assign(env, store, gid, val, "conv rw")
    return store, g


def _conv_done(env: Environment, store: MetaStore, gid: int,
               ) -> tuple[MetaStore, list[int], list[str]]:
    ctx, alpha, cur, acc, origin = _conv_parts(store, gid)
    if not isinstance(acc, MVar):
        raise TacticFailure("conv done: the focus is already closed")
    store = unify(env, ctx, acc, cur, store)
    store = _checked_assign(env, store, gid,
                            _refl(inst_mvars(alpha, store), cur), "conv done")
    main_id = int(origin.split(":")[2])
    return store, [main_id], []


# ---------------------------------------------------------------------------
# expr: whole proof terms with explicit placeholders


def _expr(env: Environment, store: MetaStore, gid: int,
          snode) -> tuple[MetaStore, list[int], list[str]]:
    ctx, target = _goal(store, gid)
    r = elaborate(env, store, ctx, snode, target)
    store = r.store
    bad = [m for m in r.created
           if store.assignment(m) is None
           and store.origin(m) not in ("hole", "sorry")]
    if bad:
        raise TacticFailure(
            "expr: could not determine all implicit arguments")
    store = _checked_assign(env, store, gid, r.term, "expr")
    produced = [m for m in r.holes
                if store.assignment(m) is None and store.origin(m) == "hole"]
    return store, produced, []


# ---------------------------------------------------------------------------
# The simplifier


def _simp_key(t: Term) -> tuple[int, int, int]:
    ops = 0
    opsum = 0
    for s in subterms(t):
        h, a = app_spine(s)
        if isinstance(h, Const) and h.name in (N_ADD, N_MUL) and len(a) == 2:
            ops += 1
            opsum += term_size(s)
    return (ops, opsum, term_size(t))


def _check_rule(env: Environment, store: MetaStore, ctx: LocalContext,
                name: str) -> None:
    proof, stmt, probe = _lemma_instance(env, store, ctx, name, "simp")
    head, args = app_spine(stmt)
    if not (isinstance(head, Const) and head.name == N_EQ and len(args) == 3):
        raise TacticFailure(f"simp: {name} is not an equality")
    _, lhs, rhs = args
    lhs = inst_mvars(lhs, probe)
    rhs = inst_mvars(rhs, probe)
    if not (mvars_of(rhs) <= mvars_of(lhs)):
        raise TacticFailure(
            f"simp: {name} introduces variables on the right-hand side")
    if not (_simp_key(rhs) < _simp_key(lhs)):
        raise TacticFailure(
            f"simp: {name} does not decrease the term measure")


_SIMP_FUEL = 1000


def _simp(env: Environment, store: MetaStore, gid: int,
          lemmas: Optional[tuple[str, ...]],
          ) -> tuple[MetaStore, list[int], list[str]]:
    names = tuple(lemmas) if lemmas is not None else DEFAULT_SIMP_LEMMAS
    ctx0 = store.decl(gid).ctx
    for n in names:
        _check_rule(env, store, ctx0, n)
    cur = gid
    rewrites = 0
    for _ in range(_SIMP_FUEL):
        hit = _simp_once(env, store, cur, names)
        if hit is None:
            break
        store, cur = hit
        rewrites += 1
    else:
        raise TacticFailure("simp: rewrite limit exceeded")
    ctx, target = _goal(store, cur)
    closed = False
    if whnf(env, ctx, target, store) == Const(N_TRUE):
        store = _checked_assign(env, store, cur, Const("True.intro"), "simp")
        closed = True
    else:
        store, closed = _try_rfl(env, store, cur)
    if not closed and rewrites == 0:
        raise TacticFailure("simp made no progress")
    return store, ([] if closed else [cur]), []


def _postorder(t: Term):
    match t:
        case App(fn, arg):
            yield from _postorder(fn)
            yield from _postorder(arg)
        case Lam(_, ty, body) | Pi(_, ty, body):
            yield from _postorder(ty)
            yield from _postorder(body)
        case Let(_, ty, value, body):
            yield from _postorder(ty)
            yield from _postorder(value)
            yield from _postorder(body)
        case _:
            pass
    yield t


def _simp_once(env: Environment, store: MetaStore, gid: int,
               names: tuple[str, ...]) -> Optional[tuple[MetaStore, int]]:
    ctx, target = _goal(store, gid)
    for sub in _postorder(target):
        if has_loose_bvars(sub) or isinstance(sub, (MVar, Sort, NatLit)):
            continue
        for name in names:
            proof, stmt, probe = _lemma_instance(env, store, ctx, name, "simp")
            _, args = app_spine(stmt)
            alpha, lhs, rhs = args
            hit = _match_pattern(env, probe, ctx, lhs, sub)
            if hit is None:
                continue
            probe = hit
            li = inst_mvars(lhs, probe)
            ri = inst_mvars(rhs, probe)
            if mvars_of(li) or mvars_of(ri):
                continue
            store = probe
            ai = inst_mvars(alpha, store)
            proof = inst_mvars(proof, store)
            target_i = inst_mvars(target, store)
            sub_i = inst_mvars(sub, store)
            motive_body = _abstract_pattern(target_i, sub_i)
            new_target = instantiate(motive_body, ri)
            g, store2 = store.fresh(ctx, new_target, "simp")
            val = app(Const("Eq.subst"), ai, Lam("x", ai, motive_body), ri, li,
                      _symm(ai, li, ri, proof), MVar(g))
            store2 = _checked_assign(env, store2, gid, val, "simp")
            return store2, g
    return None


# ---------------------------------------------------------------------------
# The hammer: deterministic bounded search


_HAMMER_DEPTH = 6
_HAMMER_BUDGET = 10000


def _concl_head(ty: Term) -> Optional[str]:
    """Head constant of a declaration's conclusion; None when flexible."""
    while isinstance(ty, Pi):
        ty = ty.body
    head, _ = app_spine(ty)
    if isinstance(head, Const):
        return head.name
    return None  # a bound variable: matches any goal


def _hammer_candidates(env: Environment, store: MetaStore, gid: int):
    ctx, target = _goal(store, gid)
    w = whnf(env, ctx, target, store)
    ghead, _ = app_spine(w)
    gname = ghead.name if isinstance(ghead, Const) else None

    yield "assumption", lambda s: _assumption(env, s, gid)
    yield "rfl", lambda s: _rfl(env, s, gid)
    yield "decide", lambda s: _decide(env, s, gid)
    yield "simp", lambda s: _simp(env, s, gid, None)
    for decl in env:
        ch = _concl_head(decl.type)
        if ch is None or (gname is not None and ch == gname):
            yield (f"apply {decl.name}",
                   lambda s, d=decl: _apply_core(
                       env, s, gid, Const(d.name), d.type, []))
    if isinstance(w, Pi):
        name = w.name if w.name != "_" else "h"
        yield f"intro {name}", lambda s, n=name: _intro(env, s, gid, (n,))


def _hammer(env: Environment, store: MetaStore, gid: int,
            budget: Optional[int],
            ) -> tuple[MetaStore, list[int], list[str]]:
    limit = budget if budget is not None else _HAMMER_BUDGET
    nodes = 0
    for max_depth in range(1, _HAMMER_DEPTH + 1):
        stack: list[tuple[MetaStore, tuple[int, ...], int]] = [(store, (gid,), 0)]
        while stack:
            st, goals, depth = stack.pop()
            goals = tuple(g for g in goals if st.assignment(g) is None)
            if not goals:
                return st, [], [f"hammer: closed the goal ({nodes} nodes)"]
            if depth >= max_depth:
                continue
            g, rest = goals[0], goals[1:]
            children = []
            for _, mk in _hammer_candidates(env, st, g):
                if nodes >= limit:
                    raise HammerExhausted(
                        f"hammer: budget exhausted after {nodes} nodes",
                        nodes=nodes)
                nodes += 1
                try:
                    st2, produced, _ = mk(st)
                except (TacticFailure, ElabError, UnifyFailure, TypingError,
                        UnknownName):
                    continue
                children.append((st2, tuple(produced) + rest, depth + 1))
            stack.extend(reversed(children))
    raise HammerExhausted(
        f"hammer: no proof found within {nodes} nodes", nodes=nodes)
