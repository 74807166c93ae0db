"""
路由共用的引擎入口：条件库缓存、请求配置收敛、异常到 HTTP 状态码的映射
"""

import logging
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional

from fastapi import HTTPException, status

from backend.config import settings
from engine.conditions import ConditionStore
from engine.config import RunConfig
from engine.errors import (
    ArityError,
    BudgetExceeded,
    CombinatorialBudget,
    DatapathError,
    StepFailed,
    UnsupportedConstruct,
    VerilogSyntaxError,
    WidthInferenceError,
)

logger = logging.getLogger(__name__)


@lru_cache(maxsize=1)
def get_store() -> ConditionStore:
    return ConditionStore.load(Path(settings.CONDITION_STORE_PATH))


def reload_store() -> ConditionStore:
    get_store.cache_clear()
    return get_store()


def clamp_config(
    rules: Optional[str] = None,
    max_iters: Optional[int] = None,
    max_nodes: Optional[int] = None,
    extract: str = "ilp",
    ilp_timeout: Optional[float] = None,
    verify: bool = True,
) -> RunConfig:
    """
    把请求参数收敛到服务允许的范围内

    Raises:
        ValueError: rules 里有未知类别
    """
    config = RunConfig(
        max_iters=min(max_iters or settings.API_MAX_ITERS, settings.API_MAX_ITERS),
        max_nodes=min(max_nodes or settings.API_MAX_NODES, settings.API_MAX_NODES),
        extract=extract,
        ilp_timeout=min(ilp_timeout or settings.API_ILP_TIMEOUT, settings.API_ILP_TIMEOUT),
        verify=verify,
    )
    return config.with_rules(rules)


def to_http(exc: DatapathError) -> HTTPException:
    """StepFailed → 409；输入问题 → 400；预算不够 → 413；其它 → 422"""
    if isinstance(exc, StepFailed):
        logger.error("verification failed: %s", exc)
        return HTTPException(
            status_code=status.HTTP_409_CONFLICT,
            detail={"error": str(exc), "step": exc.index, "counterexample": _plain(exc.counterexample)},
        )
    if isinstance(exc, (VerilogSyntaxError, UnsupportedConstruct, WidthInferenceError, ArityError)):
        return HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(exc))
    if isinstance(exc, (BudgetExceeded, CombinatorialBudget)):
        return HTTPException(status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE, detail=str(exc))
    logger.warning("request failed: %s", exc)
    return HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(exc))


def _plain(cex: Optional[Dict[str, Any]]) -> Optional[Dict[str, Any]]:
    # 反例里可能是 numpy 整数
    if cex is None:
        return None
    return {k: int(v) if not isinstance(v, (str, dict, list)) else v for k, v in cex.items()}
