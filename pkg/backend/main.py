"""
FastAPI 应用入口
"""

import logging
import os
import sys

# 将项目根目录加入 Python 路径，以便导入 engine/
PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from backend.config import settings
from backend.routers.optimize import router as optimize_router
from backend.routers.verify import router as verify_router
from backend.routers.conditions import router as conditions_router
from backend.routers.rules import router as rules_router
from engine.rules import CATALOG

logging.basicConfig(
    level=settings.LOG_LEVEL.upper(),
    format="%(asctime)s %(levelname)s %(name)s: %(message)s",
)

app = FastAPI(
    title="Datapath Optimizer API",
    description="基于 e-graph 的数据通路 RTL 优化服务",
    version="0.1.0",
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["http://localhost:5173"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


# ---------- 注册路由 ----------

app.include_router(optimize_router)
app.include_router(verify_router)
app.include_router(conditions_router)
app.include_router(rules_router)


# ---------- Health Check ----------

@app.get("/health")
def health_check():
    # 条件库探针：缺文件时 store-backed 规则永远不触发，服务仍可用
    store_status = "found" if os.path.exists(settings.CONDITION_STORE_PATH) else "missing"
    return {
        "status": "ok",
        "env": settings.APP_ENV,
        "condition_store": store_status,
        "rules": len(CATALOG),
    }
