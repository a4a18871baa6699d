# api/routes_solver.py
from typing import Any, Dict

from fastapi import APIRouter
import logging

from core.response import ok
from models.instance import Instance, Schedule
from models.schemas import GenSpec, SearchConfig, SolveRequest, ValidateRequest
from services.bnb import solve
from services.evaluation import processing_window, validate
from services.instgen import generate

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("/solve")
def post_solve(payload: SolveRequest):
    """
    Solve one instance.

    Request JSON:
    {
      "instance": {"horizon": 20, "costs": [...], "jobs": [1, 2, 4], "states": [...], ...},
      "config": {"time_limit": 10, "use_gcd": true}
    }

    Response JSON:
    {
      "ok": true,
      "data": {"status": "Optimal", "ub": 342, "lb": 342, "tec": 342, "nodes": 6, "schedule": {...}, ...}
    }
    """
    instance = Instance.model_validate(payload.instance)
    config = SearchConfig.from_settings(**payload.config)
    result = solve(instance, config)
    logger.info("solve %s jobs h=%s -> %s", instance.n, instance.horizon, result.status.value)
    return ok(result.to_payload(instance))


@router.post("/validate")
def post_validate(payload: ValidateRequest):
    """
    Check a schedule against an instance.

    Response JSON:
    {
      "ok": true,
      "data": {"valid": false, "tec": null, "violations": [{"condition": 3, "message": "...", "intervals": [1], "jobs": []}]}
    }
    """
    instance = Instance.model_validate(payload.instance)
    schedule = Schedule.from_payload(payload.schedule, instance.diagram)
    result = validate(instance, schedule)
    return ok(result.model_dump(mode="json"))


@router.post("/generate")
def post_generate(payload: Dict[str, Any]):
    """Generate an instance from a GenSpec body; answers with the instance JSON."""
    spec = GenSpec.model_validate(payload)
    return ok(generate(spec).to_payload())


@router.post("/window")
def post_window(payload: Dict[str, Any]):
    """Earliest and latest processing interval of an instance."""
    instance = Instance.model_validate(payload)
    window = processing_window(instance)
    return ok({"h_first": window.h_first, "h_last": window.h_last})
