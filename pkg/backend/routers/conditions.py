"""
条件综合 API
"""

from typing import Any, Dict, List, Optional

from fastapi import APIRouter, HTTPException, status
from pydantic import BaseModel, Field

from backend.config import settings
from backend.services.datapath_service import get_store, to_http
from engine.condsynth import synthesize
from engine.errors import DatapathError
from engine.rules import rule_by_name
from engine.verilang import parse_pattern, print_verilang

router = APIRouter(prefix="/api/conditions", tags=["conditions"])


# ---------- 请求/响应模型 ----------

class SynthesizeRequest(BaseModel):
    rule: Optional[str] = Field(None, description="目录里的规则名；与 lhs/rhs 二选一")
    lhs: Optional[str] = Field(None, description="左侧模式（VeriLang 文本）")
    rhs: Optional[str] = Field(None, description="右侧模式")
    wmax: int = Field(3, ge=1, description="枚举的最大位宽；受服务上限约束")


class SynthesizeResponse(BaseModel):
    condition: str
    maps: int
    true: int
    false: int
    depth: int
    width_vars: List[str]
    sign_vars: List[str]
    record: Dict[str, Any]


# ---------- 端点 ----------

@router.post("/synthesize", response_model=SynthesizeResponse)
def synthesize_condition(req: SynthesizeRequest):
    """
    对一条重写穷举小位宽映射、打标签、建决策树，返回 SOP 条件。
    结果不写回条件库；需要入库请用 CLI 的 synth-cond --save。
    """
    if req.wmax > settings.API_MAX_WMAX:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail=f"wmax {req.wmax} exceeds the service limit {settings.API_MAX_WMAX}",
        )
    try:
        if req.rule is not None:
            try:
                rw = rule_by_name(req.rule, get_store())
            except KeyError:
                raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=f"unknown rule {req.rule}")
            if rw.rhs is None:
                raise HTTPException(
                    status_code=status.HTTP_400_BAD_REQUEST,
                    detail=f"rule {req.rule} is built dynamically and has no fixed right-hand side",
                )
            lhs, rhs = rw.lhs, rw.rhs
        elif req.lhs and req.rhs:
            lhs, rhs = parse_pattern(req.lhs), parse_pattern(req.rhs)
        else:
            raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail="give either rule or lhs and rhs")
        report = synthesize(lhs, rhs, wmax=req.wmax, workers=1)
    except DatapathError as exc:
        raise to_http(exc)

    d = report.to_dict()
    return SynthesizeResponse(
        condition=d["condition"],
        maps=d["maps"],
        true=d["true"],
        false=d["false"],
        depth=d["depth"],
        width_vars=d["width_vars"],
        sign_vars=d["sign_vars"],
        record=report.to_record(print_verilang(lhs), print_verilang(rhs)),
    )
