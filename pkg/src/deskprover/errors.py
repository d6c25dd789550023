"""Error taxonomy shared by the kernel, tactics, frontend, and wire protocol.

Every error carries a stable `kind` string which is what goes over the wire;
messages mirror the interactive phrasing and are pinned by golden tests.
"""
from __future__ import annotations

from typing import Optional


class EngineError(Exception):
    kind = "EngineError"

    def __init__(self, message: str, pos: Optional[int] = None):
        super().__init__(message)
        self.message = message
        self.pos = pos


class ParseError(EngineError):
    kind = "ParseError"


class ElabError(EngineError):
    kind = "ElabError"


class TypingError(EngineError):
    kind = "TypeError"


class DuplicateName(EngineError):
    kind = "DuplicateName"


class UnknownName(EngineError):
    kind = "UnknownName"


class UnifyFailure(EngineError):
    kind = "UnifyFailure"


class OccursCheck(UnifyFailure):
    kind = "OccursCheck"


class OutOfFragment(UnifyFailure):
    kind = "OutOfFragment"


class TacticFailure(EngineError):
    kind = "TacticFailure"


class RelationMismatch(TacticFailure):
    kind = "RelationMismatch"


class LhsMismatch(TacticFailure):
    kind = "LhsMismatch"


class NotAnEquality(TacticFailure):
    kind = "NotAnEquality"


class HammerExhausted(TacticFailure):
    kind = "HammerExhausted"

    def __init__(self, message: str, nodes: int = 0):
        super().__init__(message)
        self.nodes = nodes


class UnknownState(EngineError):
    kind = "UnknownState"


class UnknownGoal(EngineError):
    kind = "UnknownGoal"


class NoCommonAncestor(EngineError):
    kind = "NoCommonAncestor"


class NothingToResume(EngineError):
    kind = "NothingToResume"


class BudgetExhausted(EngineError):
    kind = "BudgetExhausted"

    def __init__(self, message: str, nodes: int = 0):
        super().__init__(message)
        self.nodes = nodes
