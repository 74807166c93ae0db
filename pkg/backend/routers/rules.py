"""
重写目录 API
"""

from typing import Any, Dict, List, Optional

from fastapi import APIRouter
from pydantic import BaseModel

from backend.services.datapath_service import get_store
from engine.rules import builtin_ruleset

router = APIRouter(prefix="/api", tags=["rules"])


class RuleInfo(BaseModel):
    name: str
    rule_class: str
    lhs: str
    rhs: Optional[str]
    condition: str
    dynamic: bool
    description: str


@router.get("/rules", response_model=List[RuleInfo])
def list_rules(rule_class: Optional[str] = None):
    """列出全部内置规则及其当前条件（one-to-two-mult 也包含在内）"""
    rules = builtin_ruleset(one_to_two=True, store=get_store())
    out: List[Dict[str, Any]] = []
    for rw in rules:
        d = rw.to_dict()
        if rule_class is not None and d["class"] != rule_class:
            continue
        d["rule_class"] = d.pop("class")
        out.append(d)
    return out
