"""
Application settings and environment configuration.

Purpose:
- Centralize solver defaults (time/node limits, packing budgets, ablation switches)
- Load from environment variables (or a local .env file) so batch runs can be tuned without code changes
- Provide sensible defaults for local development and benchmarking
"""
import os
from typing import Optional

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # API Configuration
    API_TITLE: str = "TOU Scheduling Solver API"
    API_VERSION: str = "0.3"
    DEBUG: bool = os.getenv("DEBUG", "False").lower() == "true"

    # Logging: level and output format
    # Values: DEBUG, INFO, WARNING, ERROR, CRITICAL
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    # JSON lines on stderr (python-json-logger) instead of the console renderer
    LOG_JSON: bool = os.getenv("LOG_JSON", "false").lower() == "true"

    # Search limits
    # Wall-clock budget of one solve call, in seconds
    SOLVER_TIME_LIMIT: float = float(os.getenv("SOLVER_TIME_LIMIT", "60"))
    # Maximum number of evaluated search nodes (unset = unlimited)
    SOLVER_NODE_LIMIT: Optional[int] = (
        int(os.environ["SOLVER_NODE_LIMIT"]) if os.getenv("SOLVER_NODE_LIMIT") else None
    )

    # Packing subproblems: per-call budgets in milliseconds
    PACK_BUDGET_MS: float = float(os.getenv("PACK_BUDGET_MS", "50"))
    BIN_FIND_BUDGET_MS: float = float(os.getenv("BIN_FIND_BUDGET_MS", "1000"))

    # Ablation switches
    USE_GCD: bool = os.getenv("USE_GCD", "true").lower() == "true"
    USE_PRIMAL_PACKING: bool = os.getenv("USE_PRIMAL_PACKING", "true").lower() == "true"
    USE_INITIAL_HEURISTIC: bool = os.getenv("USE_INITIAL_HEURISTIC", "true").lower() == "true"
    # Attempt the packing heuristic only at depths divisible by this value
    PACK_EVERY_DEPTH: int = int(os.getenv("PACK_EVERY_DEPTH", "1"))

    # Emit a progress event every N nodes
    PROGRESS_EVERY: int = int(os.getenv("PROGRESS_EVERY", "1000"))

    # Benchmark harness: number of worker processes
    BENCH_JOBS: int = int(os.getenv("BENCH_JOBS", "1"))

    # Shipped fixtures (diagrams, sample price profile, example instances)
    DATA_DIR: str = os.getenv("DATA_DIR", "data")

    class Config:
        env_file = ".env"  # Load from .env file if present
        extra = "allow"


# Global settings instance
settings = Settings()
