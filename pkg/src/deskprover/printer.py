"""Term and goal display.

Two modes: `pretty` renders notation (infix operators, quantifier groups,
postfix .succ) for humans; with all_mode it renders a fully explicit form
that re-elaborates to the same term. S-expression output is the stable
machine format.
"""

from __future__ import annotations

from typing import Optional

from .errors import ParseError
from .kernel import (DECIDE_CERT, N_ADD, N_AND, N_EQ, N_EXISTS, N_IFF, N_LE,
                     N_LT, N_MUL, N_NOT, N_OR, N_SUCC, N_ZERO, Environment)
from .terms import (App, BVar, Const, CtxEntry, FVar, Lam, Let, LocalContext,
                    MVar, NatLit, Pi, Sort, Term, app_spine, has_loose_bvars,
                    instantiate)

_PREC_BINDER = 0
_PREC_IFF = 20
_PREC_IMP = 25
_PREC_OR = 30
_PREC_AND = 35
_PREC_NOT = 40
_PREC_CMP = 50
_PREC_ADD = 65
_PREC_MUL = 70
_PREC_APP = 100
_PREC_POST = 110
_PREC_ATOM = 200

_INFIX = {
    N_EQ: ("=", _PREC_CMP, "none", 3),
    N_LE: ("≤", _PREC_CMP, "none", 2),
    N_LT: ("<", _PREC_CMP, "none", 2),
    N_ADD: ("+", _PREC_ADD, "left", 2),
    N_MUL: ("*", _PREC_MUL, "left", 2),
    N_OR: ("∨", _PREC_OR, "right", 2),
    N_AND: ("∧", _PREC_AND, "right", 2),
    N_IFF: ("↔", _PREC_IFF, "right", 2),
}


def _uses_bvar(t: Term, idx: int) -> bool:
    match t:
        case BVar(i):
            return i == idx
        case App(fn, arg):
            return _uses_bvar(fn, idx) or _uses_bvar(arg, idx)
        case Lam(_, ty, body) | Pi(_, ty, body):
            return _uses_bvar(ty, idx) or _uses_bvar(body, idx + 1)
        case Let(_, ty, value, body):
            return (_uses_bvar(ty, idx) or _uses_bvar(value, idx)
                    or _uses_bvar(body, idx + 1))
        case _:
            return False


def _paren(s: str, needed: bool) -> str:
    return f"({s})" if needed else s


class _Printer:
    def __init__(self, ctx: LocalContext, store=None, all_mode: bool = False,
                 env: Optional[Environment] = None):
        self.ctx = ctx
        self.store = store
        self.all_mode = all_mode
        self.env = env
        self.used = set(ctx.names())

    def _fresh_name(self, name: str) -> str:
        if name == "_":
            name = "a"
        while name in self.used:
            name += "'"
        return name

    def pp(self, t: Term, names: list[str], prec: int) -> str:
        match t:
            case Sort(level):
                return "Prop" if level == "prop" else "Type"
            case NatLit(n):
                return str(n)
            case Const(name):
                if self.all_mode and self.env is not None:
                    d = self.env.get(name)
                    if d is not None and d.implicit > 0:
                        return f"@{name}"
                return name
            case BVar(idx):
                if idx < len(names):
                    return names[-1 - idx]
                return f"#{idx}"
            case FVar(fid):
                e = self.ctx.lookup(fid)
                return e.name if e is not None else f"_fvar.{fid}"
            case MVar(mid):
                return f"?m.{mid}"
            case App():
                return self._pp_app(t, names, prec)
            case Lam():
                return self._pp_lam(t, names, prec)
            case Pi():
                return self._pp_pi(t, names, prec)
            case Let(name, ty, value, body):
                n = self._fresh_name(name)
                s = (f"let {n} : {self.pp(ty, names, 0)} := "
                     f"{self.pp(value, names, 0)}; ")
                self.used.add(n)
                s += self.pp(body, names + [n], 0)
                self.used.discard(n)
                return _paren(s, prec > _PREC_BINDER)
        return repr(t)

    def _pp_app(self, t: Term, names: list[str], prec: int) -> str:
        head, args = app_spine(t)
        if not self.all_mode and isinstance(head, Const):
            s = self._pp_notation(head.name, args, names, prec)
            if s is not None:
                return s
        parts = [self.pp(head, names, _PREC_ATOM)]
        for a in args:
            parts.append(self.pp(a, names, _PREC_APP + 1))
        return _paren(" ".join(parts), prec > _PREC_APP)

    def _pp_notation(self, name: str, args: list[Term], names: list[str],
                     prec: int) -> Optional[str]:
        if name in _INFIX:
            sym, p, assoc, arity = _INFIX[name]
            if len(args) == arity:
                l, r = args[-2], args[-1]
                lp = p if assoc == "left" else p + 1
                rp = p if assoc == "right" else p + 1
                s = f"{self.pp(l, names, lp)} {sym} {self.pp(r, names, rp)}"
                return _paren(s, prec > p)
        if name == N_NOT and len(args) == 1:
            s = f"¬{self.pp(args[0], names, _PREC_NOT + 1)}"
            return _paren(s, prec > _PREC_NOT)
        if name == N_SUCC and len(args) == 1:
            s = f"{self.pp(args[0], names, _PREC_POST)}.succ"
            return _paren(s, prec > _PREC_POST)
        if name == N_EXISTS and len(args) == 2 and isinstance(args[1], Lam):
            lam = args[1]
            n = self._fresh_name(lam.name)
            self.used.add(n)
            body = self.pp(lam.body, names + [n], 0)
            self.used.discard(n)
            return _paren(f"∃ {n}, {body}", prec > _PREC_BINDER)
        if name == N_ZERO and not args:
            return "Nat.zero"
        return None

    def _pp_lam(self, t: Lam, names: list[str], prec: int) -> str:
        groups: list[tuple[list[str], Term]] = []
        body: Term = t
        names2 = list(names)
        while isinstance(body, Lam):
            n = self._fresh_name(body.name)
            self.used.add(n)
            if (not self.all_mode and groups and groups[-1][1] == body.ty
                    and not has_loose_bvars(body.ty)):
                groups[-1][0].append(n)
            else:
                groups.append(([n], body.ty))
            names2.append(n)
            body = body.body
            if self.all_mode:
                break
        # Binder types print in the scope outside their own group.
        parts = []
        depth = 0
        for gnames, gty in groups:
            parts.append(f"({' '.join(gnames)} : {self.pp(gty, names2[:len(names) + depth], 0)})")
            depth += len(gnames)
        s = f"fun {' '.join(parts)} => {self.pp(body, names2, 0)}"
        for gnames, _ in groups:
            for n in gnames:
                self.used.discard(n)
        return _paren(s, prec > _PREC_BINDER)

    def _pp_pi(self, t: Pi, names: list[str], prec: int) -> str:
        if not self.all_mode and not _uses_bvar(t.body, 0):
            body = instantiate(t.body, Const("_"))
            s = (f"{self.pp(t.ty, names, _PREC_IMP + 1)} → "
                 f"{self.pp(body, names, _PREC_IMP)}")
            return _paren(s, prec > _PREC_IMP)
        groups: list[tuple[list[str], Term]] = []
        body = t
        names2 = list(names)
        while isinstance(body, Pi) and (self.all_mode or _uses_bvar(body.body, 0)):
            n = self._fresh_name(body.name)
            self.used.add(n)
            if (not self.all_mode and groups and groups[-1][1] == body.ty
                    and not has_loose_bvars(body.ty)):
                groups[-1][0].append(n)
            else:
                groups.append(([n], body.ty))
            names2.append(n)
            body = body.body
            if self.all_mode:
                break
        parts = []
        depth = 0
        for gnames, gty in groups:
            parts.append(f"({' '.join(gnames)} : {self.pp(gty, names2[:len(names) + depth], 0)})")
            depth += len(gnames)
        s = f"∀ {' '.join(parts)}, {self.pp(body, names2, 0)}"
        for gnames, _ in groups:
            for n in gnames:
                self.used.discard(n)
        return _paren(s, prec > _PREC_BINDER)


def pretty(t: Term, ctx: LocalContext = None, store=None, all_mode: bool = False,
           env: Optional[Environment] = None) -> str:
    from .terms import EMPTY_CTX
    if ctx is None:
        ctx = EMPTY_CTX
    if store is not None:
        from .kernel import inst_mvars
        t = inst_mvars(t, store)
    return _Printer(ctx, store, all_mode, env).pp(t, [], 0)


# ---------------------------------------------------------------------------
# Goal display
# ---------------------------------------------------------------------------


def pretty_goal(ctx: LocalContext, target: Term, store=None,
                all_mode: bool = False, env: Optional[Environment] = None,
                ascii_goal: bool = False, conv: bool = False) -> str:
    from .kernel import inst_mvars
    inst = (lambda t: inst_mvars(t, store)) if store is not None else (lambda t: t)
    lines: list[str] = []
    entries = list(ctx.entries)
    i = 0
    while i < len(entries):
        e = entries[i]
        run = [e]
        while (i + len(run) < len(entries)
               and e.value is None
               and e.group >= 0
               and entries[i + len(run)].group == e.group
               and entries[i + len(run)].value is None
               and inst(entries[i + len(run)].ty) == inst(e.ty)):
            run.append(entries[i + len(run)])
        head_ctx = LocalContext(tuple(entries[:i]))
        ty_s = pretty(inst(e.ty), head_ctx, store, all_mode, env)
        names = " ".join(x.name for x in run)
        if e.value is not None:
            val_s = pretty(inst(e.value), head_ctx, store, all_mode, env)
            lines.append(f"{names} : {ty_s} := {val_s}")
        else:
            lines.append(f"{names} : {ty_s}")
        i += len(run)
    tgt = inst(target)
    if conv:
        head, args = app_spine(tgt)
        if isinstance(head, Const) and head.name == N_EQ and len(args) == 3:
            tgt = args[1]
        lines.append(f"| {pretty(tgt, ctx, store, all_mode, env)}")
    else:
        mark = "|-" if ascii_goal else "⊢"
        lines.append(f"{mark} {pretty(tgt, ctx, store, all_mode, env)}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# S-expressions (format sexp-v1)
# ---------------------------------------------------------------------------


def sexp_print(t: Term) -> str:
    match t:
        case Sort(level):
            return f"(sort {level})"
        case Const(name):
            return f"(const {name})"
        case BVar(idx):
            return f"(fvar {idx})"
        case FVar(fid):
            return f"(fvar {fid})"
        case MVar(mid):
            return f"(mvar {mid})"
        case NatLit(n):
            return f"(lit {n})"
        case App(fn, arg):
            return f"(app {sexp_print(fn)} {sexp_print(arg)})"
        case Lam(name, ty, body):
            return f"(lam {name} {sexp_print(ty)} {sexp_print(body)})"
        case Pi(name, ty, body):
            return f"(pi {name} {sexp_print(ty)} {sexp_print(body)})"
        case Let(name, ty, value, body):
            return f"(let {name} {sexp_print(ty)} {sexp_print(value)} {sexp_print(body)})"
    raise ValueError(f"unprintable term {t!r}")


def _sexp_tokens(src: str) -> list[str]:
    out: list[str] = []
    i, n = 0, len(src)
    while i < n:
        ch = src[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            out.append(ch)
            i += 1
        else:
            j = i
            while j < n and not src[j].isspace() and src[j] not in "()":
                j += 1
            out.append(src[i:j])
            i = j
    return out


def sexp_parse(src: str) -> Term:
    toks = _sexp_tokens(src)
    pos = 0

    def parse(depth: int) -> Term:
        nonlocal pos
        if pos >= len(toks):
            raise ParseError("unexpected end of s-expression")
        tok = toks[pos]
        if tok != "(":
            raise ParseError(f"expected '(', found {tok!r}")
        pos += 1
        head = toks[pos]
        pos += 1
        t: Term
        match head:
            case "sort":
                level = toks[pos]
                pos += 1
                if level not in ("prop", "type"):
                    raise ParseError(f"unknown sort {level!r}")
                t = Sort(level)
            case "const":
                t = Const(toks[pos])
                pos += 1
            case "fvar":
                k = int(toks[pos])
                pos += 1
                # Indices under an enclosing binder are positional.
                t = BVar(k) if k < depth else FVar(k)
            case "mvar":
                t = MVar(int(toks[pos]))
                pos += 1
            case "lit":
                t = NatLit(int(toks[pos]))
                pos += 1
            case "app":
                fn = parse(depth)
                arg = parse(depth)
                t = App(fn, arg)
            case "lam":
                name = toks[pos]
                pos += 1
                ty = parse(depth)
                body = parse(depth + 1)
                t = Lam(name, ty, body)
            case "pi":
                name = toks[pos]
                pos += 1
                ty = parse(depth)
                body = parse(depth + 1)
                t = Pi(name, ty, body)
            case "let":
                name = toks[pos]
                pos += 1
                ty = parse(depth)
                value = parse(depth)
                body = parse(depth + 1)
                t = Let(name, ty, value, body)
            case _:
                raise ParseError(f"unknown s-expression head {head!r}")
        if pos >= len(toks) or toks[pos] != ")":
            raise ParseError("expected ')'")
        pos += 1
        return t

    t = parse(0)
    if pos != len(toks):
        raise ParseError("trailing tokens after s-expression")
    return t
