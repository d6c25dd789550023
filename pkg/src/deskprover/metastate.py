"""Metavariable stores and immutable branching proof states.

A goal is a metavariable; a GoalState is a snapshot (store version + ordered
active goals).  Stores are append-only: descendants may assign metavariables
or add new ones, never reassign or delete, so sibling branches share history
without interference and any two states with a common ancestor compare.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .errors import (ElabError, NoCommonAncestor, NothingToResume,
                     TypingError, UnknownGoal, UnknownState)
from .kernel import Environment, infer, inst_mvars, whnf
from .terms import (EMPTY_CTX, App, BVar, FVar, Lam, Let, LocalContext, MVar,
                    Pi, Sort, Term, mvars_of)
from .theory import initial_env


@dataclass(frozen=True)
class MetaVarDecl:
    id: int
    ctx: LocalContext
    target: Term
    assignment: Optional[Term] = None
    origin: str = ""


class MetaStore:
    """Persistent metavariable store.  Mutating operations return a new
    store with a bumped version; existing assignments are never changed."""

    __slots__ = ("decls", "version", "next_id")

    def __init__(self, decls: Optional[dict[int, MetaVarDecl]] = None,
                 version: int = 0, next_id: int = 0):
        self.decls = decls if decls is not None else {}
        self.version = version
        self.next_id = next_id

    def fresh(self, ctx: LocalContext, target: Term, origin: str = "") -> tuple[int, "MetaStore"]:
        mid = self.next_id
        decls = dict(self.decls)
        decls[mid] = MetaVarDecl(mid, ctx, target, None, origin)
        return mid, MetaStore(decls, self.version + 1, mid + 1)

    def assign(self, mid: int, value: Term) -> "MetaStore":
        decl = self.decls.get(mid)
        if decl is None:
            raise UnknownGoal(f"unknown metavariable: ?m.{mid}")
        if decl.assignment is not None:
            raise TypingError(f"metavariable ?m.{mid} is already assigned")
        decls = dict(self.decls)
        decls[mid] = replace(decl, assignment=value)
        return MetaStore(decls, self.version + 1, self.next_id)

    def decl(self, mid: int) -> MetaVarDecl:
        d = self.decls.get(mid)
        if d is None:
            raise UnknownGoal(f"unknown metavariable: ?m.{mid}")
        return d

    def assignment(self, mid: int) -> Optional[Term]:
        d = self.decls.get(mid)
        return None if d is None else d.assignment

    def target(self, mid: int) -> Term:
        return self.decl(mid).target

    def ctx(self, mid: int) -> Optional[LocalContext]:
        d = self.decls.get(mid)
        return None if d is None else d.ctx

    def origin(self, mid: int) -> str:
        return self.decl(mid).origin

    def __contains__(self, mid: int) -> bool:
        return mid in self.decls

    def __len__(self) -> int:
        return len(self.decls)


@dataclass(frozen=True)
class GoalState:
    """Immutable snapshot: active goals are unassigned metavariables in
    `store`; everything unassigned but not listed is dormant."""
    id: int
    parent: Optional[int]
    store: MetaStore
    goals: tuple[int, ...]
    root: int


@dataclass(frozen=True)
class CouplingGroup:
    goals: tuple[int, ...]
    shared: tuple[int, ...]


@dataclass
class SessionOptions:
    automatic_mode: bool = True
    print_expr_ast: bool = False
    pp_all: bool = False


class Session:
    """Owner of state ids and per-state environment snapshots.  Single
    writer: methods are not locked, callers serialize."""

    def __init__(self, env: Optional[Environment] = None):
        self.env = env if env is not None else initial_env()
        self.states: dict[int, GoalState] = {}
        self.state_env: dict[int, Environment] = {}
        self._next_state = 0
        self.options = SessionOptions()

    def add_state(self, parent: Optional[int], store: MetaStore,
                  goals: tuple[int, ...], root: int,
                  env: Optional[Environment] = None) -> GoalState:
        for g in goals:
            if store.assignment(g) is not None:
                raise TypingError(f"active goal ?m.{g} is already assigned")
        sid = self._next_state
        self._next_state += 1
        st = GoalState(sid, parent, store, goals, root)
        self.states[sid] = st
        if env is not None:
            self.state_env[sid] = env
        elif parent in self.state_env:
            self.state_env[sid] = self.state_env[parent]
        else:
            self.state_env[sid] = self.env
        return st

    def get(self, state_id: int) -> GoalState:
        st = self.states.get(state_id)
        if st is None:
            raise UnknownState(f"unknown state: {state_id}")
        return st

    def env_of(self, state: GoalState) -> Environment:
        return self.state_env.get(state.id, self.env)

    def ancestors(self, state_id: int) -> list[int]:
        chain = []
        cur: Optional[int] = state_id
        while cur is not None and cur in self.states:
            chain.append(cur)
            cur = self.states[cur].parent
        return chain

    def gc(self, keep: list[int]) -> int:
        """Drop every state not in keep or on a keep state's ancestor chain."""
        retained: set[int] = set()
        for sid in keep:
            if sid in self.states:
                retained.update(self.ancestors(sid))
        dropped = [sid for sid in self.states if sid not in retained]
        for sid in dropped:
            del self.states[sid]
            self.state_env.pop(sid, None)
        return len(dropped)


def state_init(session: Session, target: Term) -> GoalState:
    """Fresh proof state with a single root goal ⊢ target."""
    if mvars_of(target):
        raise ElabError("statement contains unresolved holes")
    env = session.env
    sort = whnf(env, EMPTY_CTX, infer(env, EMPTY_CTX, target), None)
    if not isinstance(sort, Sort):
        raise ElabError("statement is not a proposition or type")
    store = MetaStore()
    root, store = store.fresh(EMPTY_CTX, target, origin="goal.start")
    return session.add_state(None, store, (root,), root, env)


def goal_mentions(state: GoalState, gid: int) -> set[int]:
    """Unassigned metavariables a goal mentions: itself, its target, and its
    context entry types and values."""
    store = state.store
    decl = store.decl(gid)
    seen = {gid}
    terms = [decl.target]
    for e in decl.ctx:
        terms.append(e.ty)
        if e.value is not None:
            terms.append(e.value)
    for t in terms:
        for m in mvars_of(inst_mvars(t, store)):
            if store.assignment(m) is None:
                seen.add(m)
    return seen


def coupling_groups(state: GoalState) -> list[CouplingGroup]:
    """Partition of active goals: two goals share a group iff they are
    connected through a shared unassigned metavariable."""
    mentions = {g: goal_mentions(state, g) for g in state.goals}
    parent: dict[int, int] = {g: g for g in state.goals}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    by_mvar: dict[int, list[int]] = {}
    for g in state.goals:
        for m in mentions[g]:
            by_mvar.setdefault(m, []).append(g)
    for members in by_mvar.values():
        for other in members[1:]:
            union(members[0], other)

    groups: dict[int, list[int]] = {}
    for g in state.goals:
        groups.setdefault(find(g), []).append(g)

    out = []
    for root in sorted(groups):
        members = sorted(groups[root])
        shared = sorted(m for m, gs in by_mvar.items()
                        if len({g for g in gs if g in members}) >= 2)
        out.append(CouplingGroup(tuple(members), tuple(shared)))
    return out


def continue_state(session: Session, target: GoalState, basis: GoalState,
                   goals: Optional[list[int]] = None) -> GoalState:
    """Resume basis's goals (or an explicit subset) under target's store."""
    if not (set(session.ancestors(target.id)) & set(session.ancestors(basis.id))):
        raise NoCommonAncestor(
            f"states {target.id} and {basis.id} share no common ancestor")
    if target.goals and goals is None:
        raise NothingToResume(
            "target state still has active goals; pass an explicit goal subset")
    requested = list(basis.goals) if goals is None else goals
    for g in requested:
        if g not in basis.goals:
            raise UnknownGoal(f"goal ?m.{g} is not active in state {basis.id}")
    resumed = tuple(g for g in requested if target.store.assignment(g) is None)
    if not resumed:
        raise NothingToResume("every requested goal is already solved")
    return session.add_state(target.id, target.store,
                             target.goals + tuple(g for g in resumed if g not in target.goals),
                             target.root)


def _readback(t: Term, store: MetaStore, denv: dict[int, int], depth: int) -> Term:
    match t:
        case MVar(id=m):
            a = store.assignment(m)
            if a is None:
                return t
            return _readback(a, store, denv, depth)
        case FVar(id=f):
            lvl = denv.get(f)
            return t if lvl is None else BVar(depth - lvl - 1)
        case App(fn, arg):
            return App(_readback(fn, store, denv, depth),
                       _readback(arg, store, denv, depth))
        case Lam(name, ty, body):
            ty2 = _readback(ty, store, denv, depth)
            inner = {**denv, t.binds: depth} if t.binds is not None else denv
            return Lam(name, ty2, _readback(body, store, inner, depth + 1))
        case Pi(name, ty, body):
            ty2 = _readback(ty, store, denv, depth)
            inner = {**denv, t.binds: depth} if t.binds is not None else denv
            return Pi(name, ty2, _readback(body, store, inner, depth + 1))
        case Let(name, ty, value, body):
            ty2 = _readback(ty, store, denv, depth)
            v2 = _readback(value, store, denv, depth)
            inner = {**denv, t.binds: depth} if t.binds is not None else denv
            return Let(name, ty2, v2, _readback(body, store, inner, depth + 1))
        case _:
            return t


def root_proof(state: GoalState) -> Term:
    """Fully instantiated proof term of the root goal.  Unassigned
    metavariables remain as explicit holes (printed ?m.<id>)."""
    return _readback(MVar(state.root), state.store, {}, 0)


def is_solved(state: GoalState) -> bool:
    """No active goals and no holes reachable from the root."""
    return not state.goals and not mvars_of(root_proof(state))
