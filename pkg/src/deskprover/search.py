"""Proof search over branching goal states.

Both strategies drive the same move generator and act on the first open
goal of a state.  States are immutable, so abandoned branches stay valid
and the winning path can be replayed as a plain tactic script.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, TextIO

from .errors import EngineError
from .kernel import (N_AND, N_EQ, N_EXISTS, N_OR, Environment, infer,
                     inst_mvars, defeq, whnf)
from .metastate import GoalState, MetaStore, Session, is_solved, root_proof
from .tactics import run_tactic
from .terms import BVar, Const, FVar, LocalContext, Pi, app_spine

CandidateFn = Callable[[Environment, MetaStore, int], list[str]]


@dataclass(frozen=True)
class SearchResult:
    solved: bool
    state: Optional[GoalState]
    steps: tuple[str, ...]
    applied: int
    failed: int
    elapsed: float
    iterations: int = 0


def default_candidates(env: Environment, store: MetaStore, gid: int,
                       max_exists: int = 8, cap: int = 16) -> list[str]:
    """Moves worth trying on one goal, most specific first."""
    d = store.decl(gid)
    target = whnf(env, d.ctx, inst_mvars(d.target, store), store)
    head, args = app_spine(target)
    gname = head.name if isinstance(head, Const) else None
    out: list[str] = []
    if isinstance(head, Const) and head.name == N_EQ:
        out.append("rfl")
    out.append("decide")
    out.append("assumption")
    if isinstance(target, Pi):
        name = target.name if target.name != "_" else "h"
        out.append(f"intro {name}")
    for e in reversed(d.ctx.entries):
        ety = whnf(env, d.ctx, e.ty, store)
        eh, _ = app_spine(ety)
        if isinstance(eh, Const) and eh.name in (N_OR, N_AND, N_EXISTS):
            out.append(f"cases {e.name}")
        elif isinstance(ety, Pi):
            concl = ety
            while isinstance(concl, Pi):
                concl = concl.body
            ch, _ = app_spine(concl)
            if (isinstance(ch, BVar)
                    or (isinstance(ch, Const) and ch.name == gname)
                    or (isinstance(ch, FVar) and isinstance(head, FVar)
                        and ch.id == head.id)):
                out.append(f"apply {e.name}")
    if isinstance(head, Const) and head.name == N_EXISTS:
        out.extend(f"exists {k}" for k in range(max_exists + 1))
    # Only lemmas whose conclusion is headed by the goal's own constant:
    # flex-conclusion declarations (recursors, case splitters) apply to
    # anything and drown the search in junk branches.
    if gname is not None:
        for decl in env:
            ty = decl.type
            while isinstance(ty, Pi):
                ty = ty.body
            ch, _ = app_spine(ty)
            if isinstance(ch, Const) and ch.name == gname:
                out.append(f"apply {decl.name}")
    return out[:cap]


def _verify(session: Session, state: GoalState) -> bool:
    # Search output is only trusted after the kernel rechecks the root
    # proof against the original statement.
    root = session.get(state.root)
    proof = inst_mvars(root_proof(state), state.store)
    env = session.env_of(state)
    try:
        ty = infer(env, LocalContext(), proof, state.store)
    except EngineError:
        return False
    target = inst_mvars(state.store.decl(root.goals[0]).target, state.store)
    return defeq(env, LocalContext(), ty, target, state.store)


def _steps_of(state: GoalState,
              came: dict[int, tuple[int, str]]) -> tuple[str, ...]:
    steps: list[str] = []
    sid = state.id
    while sid in came:
        sid, tac = came[sid]
        steps.append(tac)
    return tuple(reversed(steps))


# ---------------------------------------------------------------------------
# Best-first search


def best_first(session: Session, state: GoalState, budget: int = 2000,
               candidates: Optional[CandidateFn] = None) -> SearchResult:
    """Expand states in order of open-goal count, then discovery depth."""
    gen = candidates if candidates is not None else default_candidates
    t0 = time.monotonic()
    applied = failed = 0
    counter = 0
    came: dict[int, tuple[int, str]] = {}
    frontier: list[tuple[int, int, int, GoalState]] = [(len(state.goals), 0, 0, state)]
    while frontier and applied < budget:
        frontier.sort(key=lambda e: (e[0], e[1], e[2]))
        ngoals, depth, _, cur = frontier.pop(0)
        if is_solved(cur):
            if _verify(session, cur):
                return SearchResult(True, cur, _steps_of(cur, came),
                                    applied, failed, time.monotonic() - t0)
            failed += 1
            continue
        env = session.env_of(cur)
        for tac in gen(env, cur.store, cur.goals[0]):
            if applied >= budget:
                break
            applied += 1
            try:
                res = run_tactic(session, cur, cur.goals[0], tac)
            except EngineError:
                failed += 1
                continue
            came[res.state.id] = (cur.id, tac)
            counter += 1
            if is_solved(res.state) and _verify(session, res.state):
                return SearchResult(True, res.state,
                                    _steps_of(res.state, came),
                                    applied, failed, time.monotonic() - t0)
            frontier.append((len(res.state.goals), depth + 1, counter, res.state))
    return SearchResult(False, None, (), applied, failed, time.monotonic() - t0)


# ---------------------------------------------------------------------------
# Monte Carlo tree search with UCT selection


@dataclass
class _Node:
    state: GoalState
    parent: Optional["_Node"]
    tactic_in: Optional[str]
    untried: list[str]
    children: list["_Node"] = field(default_factory=list)
    visits: int = 0
    reward: float = 0.0

    def uct(self, c: float) -> float:
        if self.visits == 0:
            return math.inf
        assert self.parent is not None
        return (self.reward / self.visits
                + c * math.sqrt(math.log(self.parent.visits) / self.visits))


def mcts(session: Session, state: GoalState, iterations: int = 400,
         rollout_depth: int = 8, c_uct: float = math.sqrt(2.0),
         seed: int = 0, candidates: Optional[CandidateFn] = None,
         stats_out: Optional[TextIO] = None) -> SearchResult:
    gen = candidates if candidates is not None else default_candidates
    rng = random.Random(seed)
    t0 = time.monotonic()
    applied = failed = 0

    def moves(st: GoalState) -> list[str]:
        if is_solved(st):
            return []
        return gen(session.env_of(st), st.store, st.goals[0])

    def try_tactic(st: GoalState, tac: str) -> Optional[GoalState]:
        nonlocal applied, failed
        applied += 1
        try:
            return run_tactic(session, st, st.goals[0], tac).state
        except EngineError:
            failed += 1
            return None

    def finish(node: Optional[_Node], it: int) -> SearchResult:
        steps: list[str] = []
        solved_state = None
        if node is not None and _verify(session, node.state):
            solved_state = node.state
            walk = node
            while walk.parent is not None:
                steps.append(walk.tactic_in or "")
                walk = walk.parent
            steps.reverse()
        r = SearchResult(solved_state is not None, solved_state, tuple(steps),
                         applied, failed, time.monotonic() - t0, iterations=it)
        if stats_out is not None:
            stats_out.write(f"solved={'true' if r.solved else 'false'}\n"
                            f"iterations={r.iterations}\n"
                            f"applied={r.applied}\n"
                            f"failed={r.failed}\n"
                            f"steps={len(r.steps)}\n"
                            f"elapsed_s={r.elapsed:.3f}\n")
        return r

    root = _Node(state, None, None, moves(state))
    if is_solved(state):
        return finish(root, 0)

    for it in range(1, iterations + 1):
        # Selection: descend while fully expanded.
        node = root
        while not node.untried and node.children:
            node = max(node.children, key=lambda ch: ch.uct(c_uct))
        # Expansion: first untried move that applies.
        leaf = node
        while node.untried:
            tac = node.untried.pop(0)
            nxt = try_tactic(node.state, tac)
            if nxt is None:
                continue
            leaf = _Node(nxt, node, tac, moves(nxt))
            node.children.append(leaf)
            break
        if is_solved(leaf.state):
            return finish(leaf, it)
        # Rollout: random moves to a bounded depth, remembering the path.
        cur = leaf.state
        reward = 0.0
        path: list[tuple[str, GoalState]] = []
        for _ in range(rollout_depth):
            options = moves(cur)
            rng.shuffle(options)
            nxt = None
            used = ""
            for tac in options:
                nxt = try_tactic(cur, tac)
                if nxt is not None:
                    used = tac
                    break
            if nxt is None:
                break
            path.append((used, nxt))
            cur = nxt
            if is_solved(cur):
                reward = 1.0
                break
        # Backpropagation.
        walk: Optional[_Node] = leaf
        while walk is not None:
            walk.visits += 1
            walk.reward += reward
            walk = walk.parent
        if reward == 1.0:
            # Splice the winning rollout into the tree so the full tactic
            # path can be read back off the node chain.
            node = leaf
            for tac, st2 in path:
                child = _Node(st2, node, tac, [])
                node.children.append(child)
                node = child
            return finish(node, it)
    return finish(None, iterations)
