"""
Engine 模块：数据通路优化引擎
包含 IR、Verilog 前端、e-graph 与重写、条件综合、提取、代码生成和证书验证
"""

from .errors import DatapathError, StepFailed
from .ir import Arg, Const, Node, Signage, Var, eval_term, equivalent_bounded
from .verilang import parse_verilang, print_verilang
from .verilog_parser import DesignModule, parse_verilog, print_verilog
from .egraph import EGraph
from .rules import builtin_ruleset, rule_by_name
from .conditions import ConditionStore
from .condsynth import synthesize
from .cost_model import CostModel
from .extraction import greedy_extract, ilp_extract
from .codegen import generate_verilog
from .proof import ProofCertificate, produce_proof, verify_chain
from .config import RunConfig
from .pipeline import OptimizeResult, bench, optimize, sweep

__all__ = [
    "DatapathError",
    "StepFailed",
    "Arg",
    "Const",
    "Node",
    "Signage",
    "Var",
    "eval_term",
    "equivalent_bounded",
    "parse_verilang",
    "print_verilang",
    "DesignModule",
    "parse_verilog",
    "print_verilog",
    "EGraph",
    "builtin_ruleset",
    "rule_by_name",
    "ConditionStore",
    "synthesize",
    "CostModel",
    "greedy_extract",
    "ilp_extract",
    "generate_verilog",
    "ProofCertificate",
    "produce_proof",
    "verify_chain",
    "RunConfig",
    "OptimizeResult",
    "bench",
    "optimize",
    "sweep",
]
