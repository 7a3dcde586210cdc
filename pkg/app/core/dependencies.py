from fastapi import HTTPException, Request, status

from app.services.mlp import MlpModel


def get_model(request: Request) -> MlpModel:
    """
    Dependency returning the surrogate loaded at startup.
    Responds 503 when no model file was available.
    """
    model = getattr(request.app.state, "model", None)
    if model is None:
        raise HTTPException(
            status_code=status.HTTP_503_SERVICE_UNAVAILABLE,
            detail="No surrogate model loaded; train one and set MODEL_PATH",
        )
    return model
