"""Trigonometric functional expansion block.

Each scalar input ``x`` becomes ``[x, x**2, sin(pi x), cos(pi x), ...,
sin(p pi x), cos(p pi x)]``; a pattern is the concatenation of its inputs'
expansions behind one optional shared constant column.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonFiniteInput


@dataclass(frozen=True)
class ExpansionConfig:
    order_p: int = 1
    include_bias: bool = True
    n: int = 5

    def __post_init__(self):
        if int(self.order_p) != self.order_p or self.order_p < 1:
            raise ValueError(f"order_p must be a positive integer, got {self.order_p}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")

    @property
    def terms_per_input(self) -> int:
        return 2 + 2 * self.order_p

    @property
    def expanded_width(self) -> int:
        return int(self.include_bias) + self.n * self.terms_per_input

    def to_dict(self) -> dict:
        return {"order_p": self.order_p, "include_bias": self.include_bias, "n": self.n}

    @classmethod
    def from_dict(cls, d: dict) -> "ExpansionConfig":
        return cls(int(d["order_p"]), bool(d["include_bias"]), int(d["n"]))


def _expand(x: np.ndarray, p: int) -> np.ndarray:
    """Per-element expansion; appends a trailing axis of length 2 + 2p."""
    k = np.arange(1, p + 1) * np.pi
    arg = x[..., None] * k
    trig = np.stack((np.sin(arg), np.cos(arg)), axis=-1).reshape(*x.shape, 2 * p)
    return np.concatenate((x[..., None], (x * x)[..., None], trig), axis=-1)


def expand_scalar(x: float, cfg: ExpansionConfig) -> np.ndarray:
    x = float(x)
    if not np.isfinite(x):
        raise NonFiniteInput(f"cannot expand non-finite input {x}")
    return _expand(np.asarray(x), cfg.order_p)


def expand_matrix(X, cfg: ExpansionConfig) -> np.ndarray:
    """Expand every row of an S x n matrix; the result is S x expanded_width."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != cfg.n:
        raise DimensionMismatch(f"expected an S x {cfg.n} matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("input matrix contains non-finite values")
    Z = _expand(X, cfg.order_p).reshape(X.shape[0], cfg.n * cfg.terms_per_input)
    if cfg.include_bias:
        Z = np.hstack((np.ones((X.shape[0], 1)), Z))
    return Z


def expand_pattern(row, cfg: ExpansionConfig) -> np.ndarray:
    row = np.asarray(row, dtype=np.float64)
    if row.ndim != 1 or row.shape[0] != cfg.n:
        raise DimensionMismatch(f"expected a pattern of length {cfg.n}, got shape {row.shape}")
    return expand_matrix(row[None, :], cfg)[0]
