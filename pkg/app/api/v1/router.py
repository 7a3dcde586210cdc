from fastapi import APIRouter

from app.api.v1.design import router as design_router
from app.api.v1.surrogate import router as surrogate_router

api_router = APIRouter()

# Include all route modules
api_router.include_router(design_router)
api_router.include_router(surrogate_router)
