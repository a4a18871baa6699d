"""
Logging setup and request logging middleware.

- configure_logging() routes structlog through the standard library so solver
  events and third-party logs (uvicorn, fastapi) share one handler on stderr.
- With LOG_JSON the handler uses python-json-logger and structlog key/value
  pairs become JSON fields; otherwise a console renderer is used.
- request_logging_middleware adds an X-Request-ID header (UUID4) and logs
  method, path, status and latency.
"""
import logging
import sys
import time
import uuid
from typing import Callable, Optional

import structlog
from pythonjsonlogger import jsonlogger
from starlette.requests import Request

from config.settings import settings

_CONSOLE_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
_JSON_FORMAT = "%(asctime)s %(name)s %(levelname)s %(message)s"


def configure_logging(level: Optional[str] = None, json_logs: Optional[bool] = None) -> None:
    level = (level or settings.LOG_LEVEL).upper()
    json_logs = settings.LOG_JSON if json_logs is None else json_logs

    handler = logging.StreamHandler(sys.stderr)
    if json_logs:
        handler.setFormatter(jsonlogger.JsonFormatter(_JSON_FORMAT))
        renderer = structlog.stdlib.render_to_log_kwargs
    else:
        handler.setFormatter(logging.Formatter(_CONSOLE_FORMAT))
        renderer = structlog.dev.ConsoleRenderer(colors=False)

    root = logging.getLogger()
    root.handlers = [handler]
    root.setLevel(level)

    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            renderer,
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=False,
    )


_request_logger = structlog.get_logger("api.request")


async def request_logging_middleware(request: Request, call_next: Callable):
    request_id = str(uuid.uuid4())
    request.state.request_id = request_id
    start = time.perf_counter()
    response = await call_next(request)
    latency = (time.perf_counter() - start) * 1000.0
    response.headers["X-Request-ID"] = request_id
    _request_logger.info(
        "request",
        request_id=request_id,
        method=request.method,
        path=request.url.path,
        status=response.status_code,
        latency_ms=round(latency, 2),
    )
    return response
