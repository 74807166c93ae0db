"""
证书验证 API
"""

from typing import Any, Dict, List, Optional

from fastapi import APIRouter, HTTPException, status
from pydantic import BaseModel, Field

from backend.services.datapath_service import get_store, to_http
from engine.errors import DatapathError
from engine.proof import ProofCertificate, StepRecord, verify_chain

router = APIRouter(prefix="/api", tags=["verify"])


# ---------- 请求/响应模型 ----------

class StepIn(BaseModel):
    rule: Optional[str] = None
    binding: Dict[str, Any] = Field(default_factory=dict)


class VerifyRequest(BaseModel):
    modules: List[str] = Field(..., min_length=1, description="R0…Rn 的 Verilog 文本")
    steps: Optional[List[StepIn]] = Field(None, description="每个模块对应的规则与绑定；可省略")
    budget: int = Field(24, ge=1, le=32, description="穷举的输入总位数上限")
    shrink_width: int = Field(5, ge=1, le=8)


class VerifyResponse(BaseModel):
    fully_verified: bool
    verdicts: List[str]
    endpoint: Optional[str]


# ---------- 端点 ----------

@router.post("/verify", response_model=VerifyResponse)
def verify_certificate(req: VerifyRequest):
    """
    逐对验证证书里相邻的模块，再比较首尾。
    某一步找到反例时返回 409，detail 里带步号和反例。
    """
    steps_in = req.steps or [StepIn() for _ in req.modules]
    if len(steps_in) != len(req.modules):
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail=f"{len(req.modules)} modules but {len(steps_in)} step records",
        )
    cert = ProofCertificate(
        module_name="request",
        modules=list(req.modules),
        steps=[StepRecord(i, rule=s.rule, binding=dict(s.binding)) for i, s in enumerate(steps_in)],
    )
    try:
        report = verify_chain(cert, req.budget, req.shrink_width, store=get_store())
    except DatapathError as exc:
        raise to_http(exc)
    return VerifyResponse(**report.to_dict())
