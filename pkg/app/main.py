import logging
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, Request, status
from fastapi.responses import JSONResponse

from app.api.v1.router import api_router
from app.config import settings
from app.core.exceptions import FinRayError
from app.core.logging import setup_logging
from app.core.middleware import RequestLoggingMiddleware
from app.services.mlp import load_model

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Startup and shutdown events."""
    # Startup
    setup_logging(settings.LOG_LEVEL, settings.LOG_JSON)
    app.state.model = None
    model_path = Path(settings.MODEL_PATH)
    if model_path.exists():
        try:
            app.state.model = load_model(model_path)
            logger.info("Surrogate loaded", extra={"path": str(model_path)})
        except FinRayError as e:
            logger.error("Surrogate model rejected", extra={"path": str(model_path), "error": e.message})
    else:
        logger.warning("No surrogate model file", extra={"path": str(model_path)})
    logger.info(f"{settings.APP_NAME} started in {settings.ENVIRONMENT} mode")

    yield

    # Shutdown
    logger.info(f"{settings.APP_NAME} shutting down")


app = FastAPI(
    title=settings.APP_NAME,
    description="Inference API for the Fin-Ray finger surrogate and pseudo-FEM oracle",
    version="1.0.0",
    docs_url="/docs" if settings.DEBUG else None,
    redoc_url="/redoc" if settings.DEBUG else None,
    lifespan=lifespan,
)

# Request logging middleware
app.add_middleware(RequestLoggingMiddleware)

# Include API routes
app.include_router(api_router, prefix=settings.API_V1_PREFIX)


@app.exception_handler(FinRayError)
async def finray_error_handler(request: Request, exc: FinRayError):
    # Raised while parsing request bodies, e.g. a design outside the permitted box.
    return JSONResponse(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, content={"detail": exc.message})


@app.get("/")
async def root():
    """Basic health check endpoint."""
    return {
        "status": "healthy",
        "app": settings.APP_NAME,
        "environment": settings.ENVIRONMENT,
    }


@app.get("/health")
async def health_check(request: Request):
    """Health plus whether a surrogate is loaded."""
    model = getattr(request.app.state, "model", None)
    return {
        "status": "healthy" if model is not None else "degraded",
        "services": {
            "surrogate": {
                "status": "loaded" if model is not None else "not_loaded",
                "path": settings.MODEL_PATH,
            },
        },
    }
