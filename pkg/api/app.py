# api/app.py
"""
HTTP front end of the solver.

Responsibilities:
- Wire the solver router
- Register centralized exception handlers
- Request-id logging middleware
- Health endpoint
"""
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from api import routes_solver
from config.settings import settings
from core.exception_handlers import register_exception_handlers
from core.logging import request_logging_middleware
from core.response import ok

app = FastAPI(title=settings.API_TITLE, version=settings.API_VERSION, debug=settings.DEBUG)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(routes_solver.router, prefix="", tags=["solver"])

register_exception_handlers(app)

# adds X-Request-ID header and logs each request
app.middleware("http")(request_logging_middleware)


@app.get("/health")
async def health():
    """Simple health endpoint used by load balancers and orchestrators."""
    return ok({"service": settings.API_TITLE, "status": "ok"})
