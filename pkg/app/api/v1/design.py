from fastapi import APIRouter, HTTPException, status

from app.core.exceptions import FinRayError
from app.schemas.api import DesignBatch, DesignSpaceResponse, OracleResponse, ResponseItem, VariableInfo
from app.schemas.design import DESIGN_BOUNDS, DESIGN_VARIABLES, DesignSpace
from app.services import oracle
from app.services.design_space import grid_size
from app.services.pareto import compose_objectives


router = APIRouter(tags=["Design"])


@router.get("/design-space", response_model=DesignSpaceResponse)
async def get_design_space():
    """Default design grid and the permitted box for every variable."""
    space = DesignSpace()
    variables = [
        VariableInfo(
            name=name,
            min=rng.min,
            max=rng.max,
            step=rng.step,
            lower_bound=DESIGN_BOUNDS[name][0],
            upper_bound=DESIGN_BOUNDS[name][1],
        )
        for name, rng in zip(DESIGN_VARIABLES, space.ranges())
    ]
    return DesignSpaceResponse(variables=variables, grid_size=grid_size(space))


@router.post("/oracle/evaluate", response_model=OracleResponse)
async def evaluate_with_oracle(batch: DesignBatch):
    """Noise-free oracle responses for each design."""
    results = []
    for design in batch.designs:
        try:
            responses = oracle.evaluate(design)
        except FinRayError as e:
            raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=e.message)
        objectives = compose_objectives(responses)
        fx, fy, dx, dy = responses
        results.append(
            ResponseItem(design=design, fx=fx, fy=fy, dx=dx, dy=dy, f=objectives.f, d=objectives.d)
        )
    return OracleResponse(results=results)
