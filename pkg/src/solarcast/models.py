"""FLNN, ELM and EELM forecasters.

All three consume a :class:`~solarcast.series.PatternSet` and return a
:class:`TrainOutcome`; :func:`predict` dispatches on the state type so the
benchmark harness can treat them uniformly.

* FLNN: trigonometric expansion followed by a linear layer trained with the
  per-sample delta rule.
* ELM: fixed random ``tanh`` hidden layer, output weights by min-norm least
  squares.
* EELM: the expansion itself is the hidden layer, output weights by min-norm
  least squares. No randomness is involved anywhere.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import DimensionMismatch, DivergenceDetected, EmptyInput, UntrainedModel
from .expansion import ExpansionConfig, expand_matrix
from .lstsq import LinearSystem, solve_min_norm
from .series import PatternSet

DEFAULT_LR = 0.01
DEFAULT_EPOCHS = 100
DEFAULT_HIDDEN = 20


def measure_tt(fit: Callable[[], object], repeat: int = 1) -> float:
    """Median wall time in seconds of ``repeat`` calls to ``fit``."""
    if repeat < 1:
        raise ValueError("repeat must be >= 1")
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fit()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


@dataclass(eq=False)
class FlnnState:
    weights: np.ndarray
    learning_rate: float
    epochs: int
    cfg: ExpansionConfig
    mse_history: list = field(default_factory=list)

    name = "FLNN"


@dataclass(eq=False)
class ElmState:
    input_weights: np.ndarray
    biases: np.ndarray
    hidden_count: int
    seed: int
    output_weights: Optional[np.ndarray] = None

    name = "ELM"

    def hidden(self, X: np.ndarray) -> np.ndarray:
        return np.tanh(X @ self.input_weights.T + self.biases)


@dataclass(eq=False)
class EelmState:
    cfg: ExpansionConfig
    output_weights: Optional[np.ndarray] = None

    name = "EELM"


ModelState = Union[FlnnState, ElmState, EelmState]


@dataclass(eq=False)
class TrainOutcome:
    state: ModelState
    training_time: float
    training_rmse: float


def _check_train(train: PatternSet) -> None:
    if train.S == 0:
        raise EmptyInput("training set is empty")


def _rmse(residual: np.ndarray) -> float:
    return float(np.sqrt(np.mean(residual * residual)))


def _cfg_for(train: PatternSet, cfg: Optional[ExpansionConfig]) -> ExpansionConfig:
    if cfg is None:
        return ExpansionConfig(n=train.n)
    if cfg.n != train.n:
        raise DimensionMismatch(f"expansion expects n={cfg.n} inputs, patterns have {train.n}")
    return cfg


# ---------------------------------------------------------------------------
# FLNN
# ---------------------------------------------------------------------------


def _lms_epoch(Z: np.ndarray, D: np.ndarray, a: np.ndarray, lr: float) -> None:
    """One chronological pass of the delta rule, updating ``a`` in place."""
    for j in range(a.shape[1]):
        w = a[:, j]
        d = D[:, j]
        for i in range(Z.shape[0]):
            z = Z[i]
            w += (lr * (d[i] - z @ w)) * z


def flnn_train(
    train: PatternSet,
    cfg: Optional[ExpansionConfig] = None,
    lr: float = DEFAULT_LR,
    epochs: int = DEFAULT_EPOCHS,
    seed: Optional[int] = None,
    tol: Optional[float] = None,
) -> TrainOutcome:
    """Delta-rule training on expanded inputs.

    Patterns are visited in chronological order each epoch. ``seed=None``
    starts from zero weights; otherwise weights start uniform in
    [-0.01, 0.01]. With ``tol`` set, training stops early once the epoch
    MSE changes by less than ``tol``.
    """
    _check_train(train)
    if not lr > 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    cfg = _cfg_for(train, cfg)
    D = train.targets
    holder: dict = {}

    def fit():
        Z = expand_matrix(train.inputs, cfg)
        if seed is None:
            a = np.zeros((cfg.expanded_width, train.m))
        else:
            a = np.random.default_rng(seed).uniform(-0.01, 0.01, size=(cfg.expanded_width, train.m))
        history = []
        with np.errstate(all="ignore"):
            for epoch in range(1, epochs + 1):
                _lms_epoch(Z, D, a, lr)
                if not np.all(np.isfinite(a)):
                    raise DivergenceDetected(epoch)
                mse = float(np.mean((Z @ a - D) ** 2))
                if not np.isfinite(mse):
                    raise DivergenceDetected(epoch)
                history.append(mse)
                if tol is not None and len(history) > 1 and abs(history[-2] - history[-1]) < tol:
                    break
        holder["a"], holder["history"] = a, history

    tt = measure_tt(fit)
    state = FlnnState(holder["a"], float(lr), len(holder["history"]), cfg, holder["history"])
    return TrainOutcome(state, tt, float(np.sqrt(holder["history"][-1])))


# ---------------------------------------------------------------------------
# ELM
# ---------------------------------------------------------------------------


def elm_init(n: int, hidden_count: int, seed: int) -> ElmState:
    """Draw fixed hidden-layer parameters uniform on [-1, 1].

    Row ``j`` of the draw holds neuron ``j``'s input weights followed by its
    bias, so for a given seed the first ``L`` neurons are identical for every
    ``hidden_count >= L``.
    """
    if hidden_count < 1:
        raise ValueError(f"hidden_count must be >= 1, got {hidden_count}")
    rng = np.random.default_rng(seed)
    draw = rng.uniform(-1.0, 1.0, size=(hidden_count, n + 1))
    return ElmState(
        input_weights=np.ascontiguousarray(draw[:, :n]),
        biases=np.ascontiguousarray(draw[:, n]),
        hidden_count=int(hidden_count),
        seed=int(seed),
    )


def elm_train(
    train: PatternSet,
    L: int = DEFAULT_HIDDEN,
    seed: int = 0,
    ridge_lambda: float = 0.0,
) -> TrainOutcome:
    _check_train(train)
    holder: dict = {}

    def fit():
        state = elm_init(train.n, L, seed)
        H = state.hidden(train.inputs)
        state.output_weights = solve_min_norm(LinearSystem(H, train.targets, ridge_lambda))
        holder["state"], holder["H"] = state, H

    tt = measure_tt(fit)
    state = holder["state"]
    return TrainOutcome(state, tt, _rmse(holder["H"] @ state.output_weights - train.targets))


# ---------------------------------------------------------------------------
# EELM
# ---------------------------------------------------------------------------


def eelm_train(
    train: PatternSet,
    cfg: Optional[ExpansionConfig] = None,
    ridge_lambda: float = 0.0,
) -> TrainOutcome:
    _check_train(train)
    cfg = _cfg_for(train, cfg)
    holder: dict = {}

    def fit():
        H = expand_matrix(train.inputs, cfg)
        holder["beta"] = solve_min_norm(LinearSystem(H, train.targets, ridge_lambda))
        holder["H"] = H

    tt = measure_tt(fit)
    state = EelmState(cfg, holder["beta"])
    return TrainOutcome(state, tt, _rmse(holder["H"] @ state.output_weights - train.targets))


# ---------------------------------------------------------------------------
# Prediction and serialisation
# ---------------------------------------------------------------------------


def predict(state: ModelState, inputs) -> np.ndarray:
    X = np.asarray(inputs, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if isinstance(state, FlnnState):
        return expand_matrix(X, state.cfg) @ state.weights
    if isinstance(state, EelmState):
        if state.output_weights is None:
            raise UntrainedModel("EELM state has no output weights")
        return expand_matrix(X, state.cfg) @ state.output_weights
    if isinstance(state, ElmState):
        if state.output_weights is None:
            raise UntrainedModel("ELM state has no output weights")
        if X.ndim != 2 or X.shape[1] != state.input_weights.shape[1]:
            raise DimensionMismatch(
                f"ELM expects {state.input_weights.shape[1]} inputs per pattern, got shape {X.shape}"
            )
        return state.hidden(X) @ state.output_weights
    raise TypeError(f"not a model state: {type(state).__name__}")


def state_to_dict(state: ModelState) -> dict:
    if isinstance(state, FlnnState):
        return {
            "model": "FLNN",
            "weights": state.weights.tolist(),
            "learning_rate": state.learning_rate,
            "epochs": state.epochs,
            "cfg": state.cfg.to_dict(),
            "mse_history": list(state.mse_history),
        }
    if isinstance(state, ElmState):
        return {
            "model": "ELM",
            "input_weights": state.input_weights.tolist(),
            "biases": state.biases.tolist(),
            "output_weights": None if state.output_weights is None else state.output_weights.tolist(),
            "hidden_count": state.hidden_count,
            "seed": state.seed,
        }
    if isinstance(state, EelmState):
        return {
            "model": "EELM",
            "output_weights": None if state.output_weights is None else state.output_weights.tolist(),
            "cfg": state.cfg.to_dict(),
        }
    raise TypeError(f"not a model state: {type(state).__name__}")


def _matrix_or_none(v):
    return None if v is None else np.asarray(v, dtype=np.float64)


def state_from_dict(d: dict) -> ModelState:
    kind = d.get("model")
    if kind == "FLNN":
        return FlnnState(
            np.asarray(d["weights"], dtype=np.float64),
            float(d["learning_rate"]),
            int(d["epochs"]),
            ExpansionConfig.from_dict(d["cfg"]),
            list(d.get("mse_history", [])),
        )
    if kind == "ELM":
        return ElmState(
            input_weights=np.asarray(d["input_weights"], dtype=np.float64),
            biases=np.asarray(d["biases"], dtype=np.float64),
            hidden_count=int(d["hidden_count"]),
            seed=int(d["seed"]),
            output_weights=_matrix_or_none(d.get("output_weights")),
        )
    if kind == "EELM":
        return EelmState(ExpansionConfig.from_dict(d["cfg"]), _matrix_or_none(d.get("output_weights")))
    raise ValueError(f"unknown model kind {kind!r}")
