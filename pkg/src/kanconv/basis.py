"""Univariate basis families for KAN kernels: Gram/Legendre, Chebyshev, RBF.

The Gram kind uses the Legendre-form three-term recurrence over tanh-squashed
inputs; "chebyshev" and "legendre" are kept as separately named kinds so the
choice stays explicit in configs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor, record

POLYNOMIAL_KINDS = ("gram", "chebyshev", "legendre")
KINDS = POLYNOMIAL_KINDS + ("rbf",)


@dataclass
class BasisSpec:
    """Declarative description of the univariate basis.

    degree: highest polynomial degree (features 0..degree), or the number of
    RBF centers for kind "rbf".
    """

    kind: str = "gram"
    degree: int = 3
    normalization: str = "tanh"
    rbf_range: tuple = (-2.0, 2.0)
    rbf_gamma: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.kind == "rbf":
            if self.degree < 1:
                raise ValueError("rbf basis needs at least one center")
            if self.rbf_gamma <= 0:
                raise ValueError("rbf_gamma must be positive")
        elif self.degree < 0:
            raise ValueError("polynomial degree must be >= 0")
        if self.normalization not in ("tanh", "none"):
            raise ValueError(f"unknown normalization {self.normalization!r}")

    @property
    def is_polynomial(self) -> bool:
        return self.kind in POLYNOMIAL_KINDS

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "degree": self.degree, "normalization": self.normalization}
        if self.kind == "rbf":
            d["rbf_range"] = list(self.rbf_range)
            d["rbf_gamma"] = self.rbf_gamma
        return d

    @staticmethod
    def from_dict(d: dict) -> "BasisSpec":
        return BasisSpec(
            kind=d["kind"],
            degree=int(d["degree"]),
            normalization=d.get("normalization", "tanh"),
            rbf_range=tuple(d.get("rbf_range", (-2.0, 2.0))),
            rbf_gamma=float(d.get("rbf_gamma", 1.0)),
        )


def basis_feature_count(spec: BasisSpec) -> int:
    """Number of features appended by evaluate_basis."""
    return spec.degree if spec.kind == "rbf" else spec.degree + 1


def _poly_values(u: np.ndarray, kind: str, degree: int) -> np.ndarray:
    """Stack T_n(u) (or P_n(u)) for n = 0..degree along a new last axis."""
    feats = np.empty(u.shape + (degree + 1,), dtype=u.dtype)
    feats[..., 0] = 1.0
    if degree >= 1:
        feats[..., 1] = u
    if kind == "chebyshev":
        for n in range(1, degree):
            feats[..., n + 1] = 2.0 * u * feats[..., n] - feats[..., n - 1]
    else:  # gram / legendre share the Legendre-form recurrence
        for n in range(1, degree):
            feats[..., n + 1] = ((2 * n + 1) * u * feats[..., n] - n * feats[..., n - 1]) / (n + 1)
    return feats


def _poly_derivatives(u: np.ndarray, kind: str, degree: int, vals: np.ndarray) -> np.ndarray:
    """d/du of each basis feature, via the differentiated recurrences."""
    d = np.zeros_like(vals)
    if degree >= 1:
        d[..., 1] = 1.0
    if kind == "chebyshev":
        for n in range(1, degree):
            d[..., n + 1] = 2.0 * vals[..., n] + 2.0 * u * d[..., n] - d[..., n - 1]
    else:
        for n in range(1, degree):
            d[..., n + 1] = (
                (2 * n + 1) * (vals[..., n] + u * d[..., n]) - n * d[..., n - 1]
            ) / (n + 1)
    return d


def evaluate_basis(x: Tensor, spec: BasisSpec) -> Tensor:
    """Append a feature axis with every basis function evaluated at x.

    Polynomial kinds require inputs in [-1, 1] unless tanh normalization is on
    (a domain error is raised otherwise). Differentiable w.r.t. x.
    """
    xd = x.data
    if not np.all(np.isfinite(xd)):
        raise ValueError("basis input contains non-finite values")
    if spec.normalization == "tanh":
        u = np.tanh(xd)
    else:
        u = xd
        if spec.is_polynomial and np.max(np.abs(u), initial=0.0) > 1.0 + 1e-12:
            raise ValueError(
                "polynomial basis with normalization='none' requires inputs in [-1, 1]"
            )

    if spec.is_polynomial:
        feats = _poly_values(u, spec.kind, spec.degree)
    else:
        centers = np.linspace(spec.rbf_range[0], spec.rbf_range[1], spec.degree).astype(u.dtype)
        diff = u[..., None] - centers
        feats = np.exp(-spec.rbf_gamma * diff * diff)

    out = Tensor(feats)

    def bw(g):
        if spec.is_polynomial:
            vals = _poly_values(u, spec.kind, spec.degree)
            dv = _poly_derivatives(u, spec.kind, spec.degree, vals)
        else:
            centers_b = np.linspace(spec.rbf_range[0], spec.rbf_range[1], spec.degree).astype(u.dtype)
            diff_b = u[..., None] - centers_b
            dv = np.exp(-spec.rbf_gamma * diff_b * diff_b) * (-2.0 * spec.rbf_gamma * diff_b)
        gx = np.sum(g * dv, axis=-1)
        if spec.normalization == "tanh":
            gx = gx * (1.0 - u * u)
        return (gx,)

    return record(out, (x,), bw, "evaluate_basis")
