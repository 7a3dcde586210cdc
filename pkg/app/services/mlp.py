"""
MLP Surrogate Engine
Feedforward regression network written directly on numpy: forward pass,
backpropagation with inverted dropout, Adam, MSE/MAE/R^2 metrics, K-fold
training and JSON model files with embedded scalers.

Layout is fixed at 3 -> h1 -> h2 -> h3 -> 4 with a sigmoid output layer, so
targets are min-max normalized into [margin, 1 - margin] and predictions are
denormalized for reporting.
All arithmetic is float64.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from app.core.exceptions import DivergenceError, InputError, MetricError, ModelFormatError
from app.core.rng import counter_rng
from app.schemas.dataset import RESPONSE_NAMES, Dataset, SplitIndices
from app.schemas.design import ScalerParams
from app.schemas.surrogate import (
    INPUT_WIDTH,
    OUTPUT_ACTIVATION,
    OUTPUT_WIDTH,
    LayerFile,
    LossCurve,
    Metrics,
    MlpConfig,
    ModelFile,
)
from app.services.design_space import (
    fit_scaler,
    out_of_unit_range,
    scale_array,
    unscale_array,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8

# Independent streams derived from the training seed.
_INIT_STREAM = 0
_SHUFFLE_STREAM = 1
_DROPOUT_STREAM = 2


# ==================== Activations ====================

def _sigmoid(z: np.ndarray) -> np.ndarray:
    # tanh form does not overflow for large |z|
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _sigmoid_grad(z: np.ndarray) -> np.ndarray:
    s = _sigmoid(z)
    return s * (1.0 - s)


def _relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def _relu_grad(z: np.ndarray) -> np.ndarray:
    return (z > 0.0).astype(float)


def _tanh_grad(z: np.ndarray) -> np.ndarray:
    t = np.tanh(z)
    return 1.0 - t * t


ACTIVATION_FUNCTIONS: Dict[str, Tuple[Callable, Callable]] = {
    "relu": (_relu, _relu_grad),
    "sigmoid": (_sigmoid, _sigmoid_grad),
    "tanh": (np.tanh, _tanh_grad),
}


# ==================== Model ====================

class MlpModel:
    """
    Trained (or freshly initialized) network plus its input/target scalers.

    weights[i] has shape (out, in); biases[i] has shape (out,).
    """

    def __init__(
        self,
        weights: Sequence[np.ndarray],
        biases: Sequence[np.ndarray],
        activations: Sequence[str],
        input_scaler: ScalerParams,
        target_scaler: ScalerParams,
        config: MlpConfig,
        seed: Optional[int] = None,
    ):
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        self.activations = list(activations)
        self.input_scaler = input_scaler
        self.target_scaler = target_scaler
        self.config = config
        self.seed = config.seed if seed is None else seed
        _check_dimensions(self.weights, self.biases, self.activations)

    @classmethod
    def initialize(
        cls,
        config: MlpConfig,
        input_scaler: ScalerParams,
        target_scaler: ScalerParams,
    ) -> "MlpModel":
        """Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases."""
        rng = counter_rng(config.seed, (_INIT_STREAM,))
        sizes = config.layer_sizes()
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
        activations = [config.hidden_activation] * 3 + [OUTPUT_ACTIVATION]
        return cls(weights, biases, activations, input_scaler, target_scaler, config)

    # Parameters are exchanged as a flat list [W0, b0, W1, b1, ...].
    def parameters(self) -> List[np.ndarray]:
        params: List[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            params.extend([w, b])
        return params

    def with_parameters(self, params: Sequence[np.ndarray]) -> "MlpModel":
        return MlpModel(
            params[0::2],
            params[1::2],
            self.activations,
            self.input_scaler,
            self.target_scaler,
            self.config,
            self.seed,
        )

    def freeze(self) -> "MlpModel":
        for arr in self.parameters():
            arr.setflags(write=False)
        return self

    @property
    def n_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def predict(self, designs) -> np.ndarray:
        """Physical-unit responses (fx, fy, dx, dy) for physical designs, shape (n, 4)."""
        x = scale_array(np.asarray(designs, dtype=float).reshape(-1, INPUT_WIDTH), self.input_scaler, clamp=True)
        return unscale_array(forward(self, x), self.target_scaler)


def _check_dimensions(weights, biases, activations) -> None:
    if not (len(weights) == len(biases) == len(activations) == 4):
        raise ModelFormatError(
            f"expected 4 layers, got {len(weights)} weight matrices, "
            f"{len(biases)} bias vectors and {len(activations)} activations"
        )
    expected_in = INPUT_WIDTH
    for layer, (w, b, act) in enumerate(zip(weights, biases, activations)):
        if w.ndim != 2 or w.shape[1] != expected_in:
            raise ModelFormatError(
                f"weight matrix shape {list(w.shape)} does not take {expected_in} inputs", layer=layer
            )
        if b.shape != (w.shape[0],):
            raise ModelFormatError(
                f"bias length {list(b.shape)} does not match {w.shape[0]} outputs", layer=layer
            )
        if act not in ACTIVATION_FUNCTIONS:
            raise ModelFormatError(f"unknown activation '{act}'", layer=layer)
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ModelFormatError("non-finite weights", layer=layer)
        expected_in = w.shape[0]
    if expected_in != OUTPUT_WIDTH:
        raise ModelFormatError(f"output width {expected_in}, expected {OUTPUT_WIDTH}", layer=3)
    if activations[-1] != OUTPUT_ACTIVATION:
        raise ModelFormatError(f"output activation must be {OUTPUT_ACTIVATION}", layer=3)


# ==================== Forward / Backward ====================

def _as_batch(inputs) -> Tuple[np.ndarray, bool]:
    x = np.asarray(inputs, dtype=float)
    single = x.ndim == 1
    if single and x.size == INPUT_WIDTH:
        x = x.reshape(1, INPUT_WIDTH)
    if x.ndim != 2 or x.shape[1] != INPUT_WIDTH:
        raise InputError(f"expected inputs of width {INPUT_WIDTH}, got shape {list(np.shape(inputs))}")
    if not np.all(np.isfinite(x)):
        raise InputError("non-finite model input")
    return x, single


def _propagate(model: MlpModel, x: np.ndarray, masks: Optional[List[np.ndarray]] = None):
    """Returns (pre-activations z per layer, layer inputs a per layer, output)."""
    zs: List[np.ndarray] = []
    inputs: List[np.ndarray] = []
    a = x
    last = len(model.weights) - 1
    for layer, (w, b, act) in enumerate(zip(model.weights, model.biases, model.activations)):
        inputs.append(a)
        z = a @ w.T + b
        a = ACTIVATION_FUNCTIONS[act][0](z)
        if masks is not None and layer < last:
            a = a * masks[layer]
        zs.append(z)
    return zs, inputs, a


def forward(model: MlpModel, inputs) -> np.ndarray:
    """
    Inference-mode pass (dropout off).

    Args:
        model: network
        inputs: normalized design(s), shape (3,) or (n, 3)

    Returns:
        Normalized predictions in (0, 1), shape (4,) or (n, 4).
    """
    x, single = _as_batch(inputs)
    if out_of_unit_range(x):
        logger.warning("Surrogate extrapolating outside the training box", extra={"rows": len(x)})
    _, _, out = _propagate(model, x)
    return out[0] if single else out


def dropout_masks(model: MlpModel, batch: int, rate: float, rng: np.random.Generator) -> Optional[List[np.ndarray]]:
    """Inverted-dropout masks for the three hidden layers (None when rate is 0)."""
    if rate <= 0.0:
        return None
    keep = 1.0 - rate
    return [
        (rng.random((batch, w.shape[0])) < keep).astype(float) / keep
        for w in model.weights[:-1]
    ]


def loss_and_gradients(
    model: MlpModel,
    inputs,
    targets,
    rng: Optional[np.random.Generator] = None,
    epoch: int = 0,
    batch: Optional[int] = None,
) -> Tuple[float, List[np.ndarray]]:
    """
    Mean squared error over the batch and the four outputs, with gradients.

    Args:
        model: network
        inputs: normalized inputs, (n, 3)
        targets: normalized targets, (n, 4)
        rng: dropout stream; training-mode dropout is applied when given and
             the model's dropout rate is positive
        epoch, batch: context for divergence errors

    Returns:
        (loss, gradients as [dW0, db0, dW1, db1, ...])
    """
    x, _ = _as_batch(inputs)
    y = np.asarray(targets, dtype=float).reshape(-1, OUTPUT_WIDTH)
    if len(x) == 0 or len(x) != len(y):
        raise InputError(f"batch needs matching non-empty inputs and targets, got {len(x)} and {len(y)}")

    masks = dropout_masks(model, len(x), model.config.dropout_rate, rng) if rng is not None else None
    zs, layer_inputs, out = _propagate(model, x, masks)

    residual = out - y
    loss = float(np.mean(residual * residual))
    if not math.isfinite(loss):
        raise DivergenceError(epoch, batch)

    grads: List[np.ndarray] = [None] * (2 * len(model.weights))
    # d loss / d out for the mean over n * 4 terms
    delta = (2.0 / residual.size) * residual
    for layer in range(len(model.weights) - 1, -1, -1):
        delta = delta * ACTIVATION_FUNCTIONS[model.activations[layer]][1](zs[layer])
        grads[2 * layer] = delta.T @ layer_inputs[layer]
        grads[2 * layer + 1] = delta.sum(axis=0)
        if layer > 0:
            delta = delta @ model.weights[layer]
            if masks is not None:
                delta = delta * masks[layer - 1]

    if not all(np.all(np.isfinite(g)) for g in grads):
        raise DivergenceError(epoch, batch)
    return loss, grads


# ==================== Adam ====================

@dataclass
class AdamState:
    """First/second moment estimates and the step counter."""

    m: List[np.ndarray]
    v: List[np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params])


def adam_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: AdamState,
    learning_rate: float,
) -> Tuple[List[np.ndarray], AdamState]:
    """
    One bias-corrected Adam update (beta1 0.9, beta2 0.999, eps 1e-8).

    Returns:
        (new parameters, new state); inputs are not modified.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("parameter, gradient and state lists must have the same length")

    t = state.step + 1
    correction1 = 1.0 - ADAM_BETA1 ** t
    correction2 = 1.0 - ADAM_BETA2 ** t
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * g
        v = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        new_params.append(p - learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPSILON))
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamState(m=new_m, v=new_v, step=t)


# ==================== Training ====================

def _mse(model: MlpModel, x: np.ndarray, y: np.ndarray) -> float:
    residual = forward(model, x) - y
    return float(np.mean(residual * residual))


def train_on_rows(
    designs: np.ndarray,
    responses: np.ndarray,
    train_idx: Sequence[int],
    val_idx: Sequence[int],
    config: MlpConfig,
) -> Tuple[MlpModel, LossCurve]:
    """
    Fit a model on `train_idx` rows, tracking validation loss on `val_idx` rows.

    Scalers are fit on the training rows only. Each epoch visits the training
    rows in a freshly shuffled order; the final-epoch weights are returned.
    """
    train_idx = list(train_idx)
    val_idx = list(val_idx)
    if not train_idx or not val_idx:
        raise InputError("training and validation rows must both be non-empty")

    designs = np.asarray(designs, dtype=float)
    responses = np.asarray(responses, dtype=float)
    input_scaler = fit_scaler(designs[train_idx])
    target_scaler = fit_scaler(responses[train_idx], margin=config.target_margin)

    x_train = scale_array(designs[train_idx], input_scaler)
    y_train = scale_array(responses[train_idx], target_scaler)
    x_val = scale_array(designs[val_idx], input_scaler, clamp=False)
    y_val = scale_array(responses[val_idx], target_scaler, clamp=False)

    model = MlpModel.initialize(config, input_scaler, target_scaler)
    params = model.parameters()
    state = AdamState.zeros_like(params)
    shuffle_rng = counter_rng(config.seed, (_SHUFFLE_STREAM,))
    dropout_rng = counter_rng(config.seed, (_DROPOUT_STREAM,))

    curve = LossCurve()
    n = len(train_idx)
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(n)
        for batch, start in enumerate(range(0, n, config.batch_size)):
            rows = order[start:start + config.batch_size]
            _, grads = loss_and_gradients(
                model, x_train[rows], y_train[rows], dropout_rng, epoch=epoch, batch=batch
            )
            params, state = adam_step(params, grads, state, config.learning_rate)
            model = model.with_parameters(params)

        train_mse = _mse(model, x_train, y_train)
        val_mse = _mse(model, x_val, y_val)
        if not (math.isfinite(train_mse) and math.isfinite(val_mse)):
            raise DivergenceError(epoch)
        curve.train_mse.append(train_mse)
        curve.val_mse.append(val_mse)
        logger.debug("Epoch finished", extra={"epoch": epoch, "train_mse": train_mse, "val_mse": val_mse})

    return model.freeze(), curve


def train(dataset: Dataset, split: SplitIndices, config: MlpConfig) -> Tuple[MlpModel, LossCurve]:
    """Train on split.train, validating on split.validation."""
    model, curve = train_on_rows(
        dataset.design_matrix(), dataset.response_matrix(), split.train, split.validation, config
    )
    logger.info(
        "Surrogate trained",
        extra={
            "hidden_sizes": list(config.hidden_sizes),
            "activation": config.hidden_activation,
            "epochs": config.epochs,
            "final_train_mse": curve.train_mse[-1],
            "final_val_mse": curve.val_mse[-1],
        },
    )
    return model, curve


@dataclass
class CrossValidationResult:
    """Per-fold loss curves, their per-epoch mean, and final validation scores."""

    fold_curves: List[LossCurve]
    mean_curve: LossCurve
    fold_scores: List[float] = field(default_factory=list)

    @property
    def score(self) -> float:
        return float(np.mean(self.fold_scores))


def cross_validate_rows(
    designs: np.ndarray,
    responses: np.ndarray,
    split: SplitIndices,
    config: MlpConfig,
) -> CrossValidationResult:
    """Train one model per fold over the non-test rows."""
    curves: List[LossCurve] = []
    for fold in range(split.k):
        fold_train, fold_val = split.fold_partition(fold)
        _, curve = train_on_rows(designs, responses, fold_train, fold_val, config)
        curves.append(curve)

    mean_curve = LossCurve(
        train_mse=np.mean([c.train_mse for c in curves], axis=0).tolist(),
        val_mse=np.mean([c.val_mse for c in curves], axis=0).tolist(),
    )
    return CrossValidationResult(
        fold_curves=curves,
        mean_curve=mean_curve,
        fold_scores=[c.val_mse[-1] for c in curves],
    )


def cross_validate(dataset: Dataset, split: SplitIndices, config: MlpConfig) -> CrossValidationResult:
    return cross_validate_rows(dataset.design_matrix(), dataset.response_matrix(), split, config)


# ==================== Metrics ====================

def compute_metrics(y_true, y_pred) -> Metrics:
    """
    Per-column MSE, MAE and R^2 = 1 - SS_res / SS_tot, with the mean taken over
    the evaluated rows.
    """
    y = np.asarray(y_true, dtype=float).reshape(-1, OUTPUT_WIDTH)
    p = np.asarray(y_pred, dtype=float).reshape(-1, OUTPUT_WIDTH)
    if len(y) == 0:
        raise InputError("metrics need at least one row")

    residual = y - p
    mse = np.mean(residual * residual, axis=0)
    mae = np.mean(np.abs(residual), axis=0)
    ss_res = np.sum(residual * residual, axis=0)
    centered = y - y.mean(axis=0)
    ss_tot = np.sum(centered * centered, axis=0)

    r2 = []
    for column, name in enumerate(RESPONSE_NAMES):
        if ss_tot[column] == 0.0:
            raise MetricError(name, "R^2 undefined for a constant target column")
        r2.append(1.0 - ss_res[column] / ss_tot[column])

    return Metrics(
        mse=mse.tolist(),
        mae=mae.tolist(),
        r2=[float(v) for v in r2],
        mse_mean=float(np.mean(mse)),
        mae_mean=float(np.mean(mae)),
        r2_mean=float(np.mean(r2)),
    )


def evaluate_metrics(model: MlpModel, designs, responses) -> Metrics:
    """Metrics for physical-unit rows, computed in the model's normalized target space."""
    x = scale_array(np.asarray(designs, dtype=float).reshape(-1, INPUT_WIDTH), model.input_scaler, clamp=False)
    y = scale_array(np.asarray(responses, dtype=float).reshape(-1, OUTPUT_WIDTH), model.target_scaler, clamp=False)
    return compute_metrics(y, forward(model, x))


# ==================== Model Files ====================

def to_model_file(model: MlpModel) -> ModelFile:
    return ModelFile(
        config=model.config,
        input_scaler=model.input_scaler,
        target_scaler=model.target_scaler,
        layers=[
            LayerFile(weights=w.tolist(), bias=b.tolist(), activation=act)
            for w, b, act in zip(model.weights, model.biases, model.activations)
        ],
        seed=model.seed,
    )


def save_model(model: MlpModel, path: PathLike) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_model_file(model).model_dump_json(indent=2) + "\n", encoding="utf-8")


def from_model_file(data: ModelFile) -> MlpModel:
    if data.input_scaler.n_columns != INPUT_WIDTH:
        raise ModelFormatError(f"input scaler has {data.input_scaler.n_columns} columns, expected {INPUT_WIDTH}")
    if data.target_scaler.n_columns != OUTPUT_WIDTH:
        raise ModelFormatError(f"target scaler has {data.target_scaler.n_columns} columns, expected {OUTPUT_WIDTH}")

    sizes = data.config.layer_sizes()
    if len(data.layers) != len(sizes) - 1:
        raise ModelFormatError(f"expected {len(sizes) - 1} layers, found {len(data.layers)}")

    weights, biases = [], []
    for layer, (spec, fan_in, fan_out) in enumerate(zip(data.layers, sizes[:-1], sizes[1:])):
        rows = {len(r) for r in spec.weights}
        if len(spec.weights) != fan_out or rows != {fan_in}:
            raise ModelFormatError(
                f"weight matrix must be {fan_out}x{fan_in} per config", layer=layer
            )
        if len(spec.bias) != fan_out:
            raise ModelFormatError(f"bias must have {fan_out} entries", layer=layer)
        expected_act = OUTPUT_ACTIVATION if layer == len(data.layers) - 1 else data.config.hidden_activation
        if spec.activation != expected_act:
            raise ModelFormatError(
                f"activation '{spec.activation}' does not match config ('{expected_act}')", layer=layer
            )
        weights.append(np.array(spec.weights, dtype=float))
        biases.append(np.array(spec.bias, dtype=float))

    model = MlpModel(
        weights,
        biases,
        [layer.activation for layer in data.layers],
        data.input_scaler,
        data.target_scaler,
        data.config,
        data.seed,
    )
    return model.freeze()


def load_model(path: PathLike) -> MlpModel:
    """Read a model file, rejecting malformed or dimension-inconsistent content."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"model file not found: {path}")
    try:
        data = ModelFile.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first.get("loc", ()))
        raise ModelFormatError(f"invalid model file ({location or 'document'}): {first['msg']}")
    return from_model_file(data)


def write_loss_curve(curve: LossCurve, path: PathLike) -> None:
    frame = pd.DataFrame(
        {
            "epoch": range(1, len(curve.train_mse) + 1),
            "train_mse": curve.train_mse,
            "val_mse": curve.val_mse,
        }
    )
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")


def write_cv_curves(result: CrossValidationResult, path: PathLike) -> None:
    """First fold, last fold and per-epoch mean, long format `epoch,curve,train_mse,val_mse`."""
    curves = [
        ("fold_1", result.fold_curves[0]),
        (f"fold_{len(result.fold_curves)}", result.fold_curves[-1]),
        ("mean", result.mean_curve),
    ]
    rows = [
        [epoch, name, train_mse, val_mse]
        for name, curve in curves
        for epoch, (train_mse, val_mse) in enumerate(zip(curve.train_mse, curve.val_mse), start=1)
    ]
    frame = pd.DataFrame(rows, columns=["epoch", "curve", "train_mse", "val_mse"])
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
