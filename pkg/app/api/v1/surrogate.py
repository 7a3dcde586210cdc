from fastapi import APIRouter, Depends, HTTPException, status

from app.core.dependencies import get_model
from app.core.exceptions import FinRayError
from app.schemas.api import DesignBatch, PredictResponse, ResponseItem
from app.services.mlp import MlpModel
from app.services.pareto import compose_array


router = APIRouter(prefix="/surrogate", tags=["Surrogate"])


@router.post("/predict", response_model=PredictResponse)
async def predict(batch: DesignBatch, model: MlpModel = Depends(get_model)):
    """
    Surrogate responses (fx, fy, dx, dy) and magnitudes (f, d) in physical units.
    Inference only; the model is read-only.
    """
    designs = [design.as_tuple() for design in batch.designs]
    try:
        outputs = model.predict(designs)
    except FinRayError as e:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=e.message)

    magnitudes = compose_array(outputs)
    predictions = [
        ResponseItem(
            design=design,
            fx=float(out[0]),
            fy=float(out[1]),
            dx=float(out[2]),
            dy=float(out[3]),
            f=float(fd[0]),
            d=float(fd[1]),
        )
        for design, out, fd in zip(batch.designs, outputs, magnitudes)
    ]
    return PredictResponse(
        predictions=predictions,
        hidden_sizes=list(model.config.hidden_sizes),
        activation=model.config.hidden_activation,
        model_seed=model.seed,
    )
