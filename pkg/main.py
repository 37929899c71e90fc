"""
FastAPI server exposing region bounds, comparisons, bound matrices and tau tables
Returns the same JSON payloads as the command line json format
"""

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
import logging
from datetime import datetime, timezone
from typing import Any, Dict, Optional

from cli import CommandRunner
from config import Settings
from errors import DomainError, RegionBoundError
from models import Architecture, Command, OutputFormat, RunConfig
from services.gamma_service import FAMILY_NAMES

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

# Initialize FastAPI app
app = FastAPI(
    title="Region Bound Server",
    description="Exact upper bounds on the number of linear regions of ReLU networks",
    version="1.0.0"
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Initialize settings
settings = Settings()

# Initialize services
runner = CommandRunner(settings)


@app.on_event("startup")
async def startup_event():
    logger.info("Starting Region Bound Server...")
    # warm the width-6 matrices the examples use
    for name in FAMILY_NAMES:
        runner.bound_service.build_bound_matrix(runner.gamma_service.family(name), 6)
    logger.info("Server started successfully")


def _check_size(config: RunConfig) -> None:
    """The server refuses architectures beyond the configured width and depth"""
    if not config.arch:
        return
    arch = Architecture.parse(config.arch)
    if max(arch.widths) > settings.http_max_width or arch.depth > settings.http_max_depth:
        message = (
            f"architecture {arch} exceeds the server limits of width {settings.http_max_width} "
            f"and depth {settings.http_max_depth}"
        )
        logger.warning(message)
        raise DomainError(message)


def _run(config: RunConfig) -> Dict[str, Any]:
    try:
        _check_size(config)
        report, _ = runner.run(config)
    except RegionBoundError as e:
        logger.error(f"{config.command.value} failed: {str(e)}")
        raise HTTPException(status_code=e.status_code, detail=str(e))
    return report.payload


@app.get("/")
async def root():
    return {
        "message": "Region Bound Server is running",
        "version": "1.0.0",
        "families": list(FAMILY_NAMES),
        "timestamp": datetime.now(timezone.utc).isoformat()
    }


@app.get("/health")
async def health_check():
    """Health check: the width-6 bar matrix must have growth rate 42"""
    try:
        bar = runner.gamma_service.family("bar")
        growth = runner.bound_service.growth_rate(bar, 3, 6)
        return {
            "status": "healthy" if growth == 42 else "degraded",
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
    except Exception as e:
        logger.error(f"Health check failed: {str(e)}")
        return {
            "status": "unhealthy",
            "error": str(e),
            "timestamp": datetime.now(timezone.utc).isoformat()
        }


@app.get("/bound")
async def bound(arch: str, family: str = "star", allow_conjecture: bool = False):
    return _run(RunConfig(
        command=Command.BOUND, arch=arch, family=family,
        allow_conjecture=allow_conjecture, output_format=OutputFormat.JSON,
    ))


@app.get("/compare")
async def compare(arch: str):
    return _run(RunConfig(command=Command.COMPARE, arch=arch, output_format=OutputFormat.JSON))


@app.get("/matrix")
async def matrix(family: str = "star", p1: int = Query(default=6, ge=1, le=64)):
    return _run(RunConfig(command=Command.MATRIX, family=family, p1=p1, output_format=OutputFormat.JSON))


@app.get("/tau")
async def tau(p1: int = Query(default=6, ge=1, le=32), p0: Optional[int] = Query(default=None, ge=1)):
    return _run(RunConfig(command=Command.TAU, p0=p0, p1=p1, output_format=OutputFormat.JSON))
