"""
优化 API
直接复用 engine/pipeline.py 中的 optimize
"""

from typing import Any, Dict, List, Literal, Optional

from fastapi import APIRouter, HTTPException, status
from pydantic import BaseModel, Field

from backend.services.datapath_service import clamp_config, get_store, to_http
from engine.errors import DatapathError
from engine.pipeline import optimize

router = APIRouter(prefix="/api", tags=["optimize"])


# ---------- 请求/响应模型 ----------

class OptimizeRequest(BaseModel):
    verilog: str = Field(..., description="单个组合模块的源码")
    rules: Optional[str] = Field(None, description="启用的规则类别，逗号分隔；缺省全部")
    max_iters: Optional[int] = Field(None, ge=1, description="饱和轮数上限")
    max_nodes: Optional[int] = Field(None, ge=1, description="e-node 数上限")
    extract: Literal["greedy", "ilp"] = "ilp"
    ilp_timeout: Optional[float] = Field(None, gt=0, description="ILP 超时（秒）")
    verify: bool = Field(True, description="是否逐步验证证书")
    include_certificate: bool = Field(False, description="响应里是否带上证书的全部模块（需 verify）")


class OptimizeResponse(BaseModel):
    verilog: str
    exit_code: int
    report: Dict[str, Any]
    certificate: Optional[List[str]] = None
    manifest: Optional[Dict[str, Any]] = None


# ---------- 端点 ----------

@router.post("/optimize", response_model=OptimizeResponse)
def optimize_design(req: OptimizeRequest):
    """
    优化一个 Verilog 模块，返回优化后的 RTL 和代价报告。
    验证失败返回 409，且不返回 RTL。
    """
    try:
        config = clamp_config(req.rules, req.max_iters, req.max_nodes, req.extract,
                              req.ilp_timeout, req.verify)
    except ValueError as exc:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(exc))
    try:
        result = optimize(req.verilog, config, get_store())
    except DatapathError as exc:
        raise to_http(exc)

    resp = OptimizeResponse(verilog=result.verilog, exit_code=result.exit_code, report=result.report())
    if req.include_certificate and result.certificate is not None:
        resp.certificate = list(result.certificate.modules)
        resp.manifest = result.certificate.manifest()
    return resp
