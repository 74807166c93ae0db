"""
运行配置：规则开关、饱和限制、提取方式、代价常数覆盖、验证与输出

RunConfig 和 CostConstants 都是 pydantic 模型，可以整体存成 / 读回 JSON；
CLI 的 --cost-config 只覆盖代价常数。
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Union

from pydantic import BaseModel, Field

logger = logging.getLogger(__name__)


class CostConstants(BaseModel):
    """默认代价公式里的常数（单位：两输入门）"""

    cpa: int = Field(12, ge=0, description="进位传播加法器，每位")
    neg: int = Field(13, ge=0, description="取负，每位")
    mul_pp: int = Field(6, ge=0, description="Booth 部分积阵列，每个 wa×wb 位对")
    mux: int = Field(3, ge=0, description="二选一，每位")
    shift: int = Field(3, ge=0, description="变量移位的每级每位")
    compare: int = Field(12, ge=0, description="比较器，按较宽操作数每位")
    bitwise: int = Field(1, ge=0, description="按位逻辑，每位")
    sum_csa: int = Field(5, ge=0, description="SUM 每多一个操作数的压缩行，每位")
    muxar_row: int = Field(3, ge=0, description="MUXAR 每行的选择，每位")
    muxar_csa: int = Field(5, ge=0, description="MUXAR 行压缩，每位")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "CostConstants":
        with open(path, "r", encoding="utf-8") as f:
            return cls(**json.load(f))


class RunConfig(BaseModel):
    # 规则类别
    arith: bool = True
    logic: bool = True
    exchange: bool = True
    merge: bool = True
    constexp: bool = True
    one_to_two: bool = False

    # 饱和限制
    max_iters: int = Field(30, ge=1)
    max_nodes: int = Field(100_000, ge=1)
    time_limit: float = Field(300.0, gt=0)

    # 提取
    extract: Literal["greedy", "ilp"] = "ilp"
    ilp_timeout: float = Field(120.0, gt=0)
    ilp_solver: Literal["bnb", "highs"] = "bnb"
    cost: CostConstants = Field(default_factory=CostConstants)

    # 验证
    verify: bool = True
    verify_budget: int = Field(24, ge=1, le=40)
    shrink_width: int = Field(5, ge=1, le=16)

    # 输出
    output: Optional[str] = None
    emit_cert: Optional[str] = None
    dump_egraph: Optional[str] = None
    export_lp: Optional[str] = None

    def rule_options(self) -> Dict[str, bool]:
        """builtin_ruleset 的关键字参数"""
        return {
            "arith": self.arith,
            "logic": self.logic,
            "exchange": self.exchange,
            "merge": self.merge,
            "constexp": self.constexp,
            "one_to_two": self.one_to_two,
        }

    def with_rules(self, classes: Optional[str]) -> "RunConfig":
        """
        按逗号分隔的类别名（--rules arith,merge）只启用这些类别

        Raises:
            ValueError: 未知的类别名
        """
        if not classes:
            return self
        names = {s.strip() for s in classes.split(",") if s.strip()}
        known = {"arith", "logic", "exchange", "merge", "constexp", "one_to_two"}
        unknown = names - known
        if unknown:
            raise ValueError(f"unknown rule classes: {', '.join(sorted(unknown))}")
        update: Dict[str, Any] = {k: (k in names) for k in known}
        return self.model_copy(update=update)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        logger.debug("loaded run config from %s", path)
        return cls(**data)

    def save(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.model_dump_json(indent=2))
            f.write("\n")
