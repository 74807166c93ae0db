"""
异常层次：所有模块抛出的错误都继承 DatapathError

每个子类带一个 module 标签，CLI / API 输出时统一格式化为 "[module] message"，
方便定位是哪一段流水线（parse → e-graph → saturate → extract → codegen → verify）出的问题。
"""

from typing import Any, Dict, Optional


class DatapathError(Exception):
    """流水线错误基类"""

    module = "datapath"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def __str__(self) -> str:
        return f"[{self.module}] {self.message}"


# ---------------------------------------------------------------------------
# ir
# ---------------------------------------------------------------------------

class UnsupportedOperator(DatapathError):
    module = "ir"


class BudgetExceeded(DatapathError):
    module = "ir"

    def __init__(self, message: str, bits: int = 0, budget: int = 0):
        super().__init__(message)
        self.bits = bits
        self.budget = budget


# ---------------------------------------------------------------------------
# frontend
# ---------------------------------------------------------------------------

class VerilogSyntaxError(DatapathError):
    module = "frontend"

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnsupportedConstruct(DatapathError):
    module = "frontend"


class WidthInferenceError(DatapathError):
    module = "frontend"


class ArityError(DatapathError):
    module = "frontend"


# ---------------------------------------------------------------------------
# engine
# ---------------------------------------------------------------------------

class IncompleteMap(DatapathError):
    module = "engine"


class NotEquivalentInEGraph(DatapathError):
    module = "engine"


class AnalysisConflict(DatapathError):
    module = "engine"


# ---------------------------------------------------------------------------
# condsynth
# ---------------------------------------------------------------------------

class CombinatorialBudget(DatapathError):
    module = "condsynth"


class Inseparable(DatapathError):
    module = "condsynth"


# ---------------------------------------------------------------------------
# extraction
# ---------------------------------------------------------------------------

class Unextractable(DatapathError):
    module = "extraction"


class Infeasible(DatapathError):
    module = "extraction"


# ---------------------------------------------------------------------------
# backend (codegen / proof)
# ---------------------------------------------------------------------------

class NonConcrete(DatapathError):
    module = "backend"


class CyclicDag(DatapathError):
    module = "backend"


class StepFailed(DatapathError):
    module = "backend"

    def __init__(self, index: int, counterexample: Optional[Dict[str, Any]] = None, detail: str = ""):
        msg = f"proof step {index} failed"
        if detail:
            msg += f": {detail}"
        if counterexample is not None:
            msg += f" (counterexample {counterexample})"
        super().__init__(msg)
        self.index = index
        self.counterexample = counterexample
