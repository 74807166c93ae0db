"""
配置管理：从环境变量和 .env 文件加载配置
"""

import os
from pydantic_settings import BaseSettings

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


class Settings(BaseSettings):
    # 日志级别（CLI 与服务共用）
    LOG_LEVEL: str = "INFO"

    # 重写条件库
    CONDITION_STORE_PATH: str = os.path.join(PROJECT_ROOT, "models", "conditions.json")

    # 基准目录与报告输出目录
    BENCH_DIR: str = os.path.join(PROJECT_ROOT, "bench")
    REPORTS_DIR: str = os.path.join(PROJECT_ROOT, "reports")

    # API 请求的上限：在线请求不能像 CLI 那样跑几分钟
    API_MAX_ITERS: int = 30
    API_MAX_NODES: int = 50_000
    API_ILP_TIMEOUT: float = 30.0
    API_MAX_WMAX: int = 5

    # 应用配置
    APP_ENV: str = "development"
    DEBUG: bool = True

    model_config = {
        "env_file": os.path.join(PROJECT_ROOT, ".env"),
        "env_file_encoding": "utf-8",
        "extra": "ignore",
    }


settings = Settings()
