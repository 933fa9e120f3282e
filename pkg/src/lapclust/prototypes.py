"""Prototype updates: weighted class means and kernel mode seeking.

Cluster representatives are either closed-form weighted means or fixed points
of the weighted kernel average g(m). The mode solver also exposes the total
kernel mass u^n at each iterate, which is monotonically increasing along the
fixed-point sequence and is used by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, EmptyClusterError
from .io import validate_features

_EXP_CLAMP = -700.0  # exp underflows to 0 near -745; keep denominators positive

RULE_MEANS = "means"
RULE_MODES = "modes"


@dataclass(frozen=True)
class Prototypes:
    """K x d prototype matrix with its update-rule tag."""

    values: np.ndarray
    rule: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1:
            raise DataError(f"prototype matrix must be 2-D with k >= 1, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DataError("prototypes must be finite")
        if self.rule not in (RULE_MEANS, RULE_MODES):
            raise DataError(f"unknown prototype rule: {self.rule!r}")
        object.__setattr__(self, "values", v)

    @property
    def k(self):
        return self.values.shape[0]

    @property
    def n_dims(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class ModeSolverConfig:
    sigma2: float
    tol: float = 1e-6
    max_iters: int = 100

    def __post_init__(self):
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise DataError("sigma2 must be finite and > 0")
        if self.tol <= 0 or self.max_iters < 1:
            raise DataError("tol must be > 0 and max_iters >= 1")


def rbf_weights(X, m, sigma2):
    """exp(-||x_p - m||^2 / (2 sigma^2)), exponent clamped against underflow."""
    sqd = np.einsum("ij,ij->i", X - m, X - m)
    return np.exp(np.maximum(-sqd / (2.0 * sigma2), _EXP_CLAMP))


def update_means(X, S, prev: Prototypes | None = None):
    """Weighted means m_k = X^t S_k / 1^t S_k.

    A zero-mass column raises EmptyClusterError unless ``prev`` supplies a
    prototype to keep. Returns (Prototypes, empty_mask).
    """
    X = validate_features(X)
    rows = np.asarray(getattr(S, "rows", S), dtype=np.float64)
    mass = rows.sum(axis=0)
    empty = mass <= 0.0
    if empty.any() and prev is None:
        raise EmptyClusterError(int(np.nonzero(empty)[0][0]))
    safe_mass = np.where(empty, 1.0, mass)
    M = (rows.T @ X) / safe_mass[:, None]
    if empty.any():
        M[empty] = prev.values[empty]
    return Prototypes(values=M, rule=RULE_MEANS), empty


def meanshift_step(X, s_col, m, sigma2):
    """One fixed-point step: the s- and kernel-weighted average of the points."""
    X = validate_features(X)
    w = np.asarray(s_col, dtype=np.float64) * rbf_weights(X, np.asarray(m, dtype=np.float64), sigma2)
    total = w.sum()
    if total <= 0.0:
        raise EmptyClusterError(-1)
    return (w @ X) / total


def update_modes(X, S, cfg: ModeSolverConfig, M_init: Prototypes):
    """Run per-cluster mean-shift iterates m <- g(m) from the given prototypes.

    Returns (Prototypes, u_traces, warnings): u_traces[k] holds the kernel
    mass u^n at every visited iterate of cluster k; non-convergence within
    max_iters is reported as a warning, not a failure.
    """
    X = validate_features(X)
    rows = np.asarray(getattr(S, "rows", S), dtype=np.float64)
    modes = np.array(M_init.values, dtype=np.float64, copy=True)
    u_traces = []
    warnings = []
    for k in range(modes.shape[0]):
        s_col = rows[:, k]
        m = modes[k]
        trace = []
        if s_col.sum() <= 0.0:
            warnings.append(f"cluster {k}: zero assignment mass, mode kept")
            u_traces.append(np.array(trace))
            continue
        converged = False
        for _ in range(cfg.max_iters):
            w = s_col * rbf_weights(X, m, cfg.sigma2)
            total = w.sum()
            trace.append(total)
            new = (w @ X) / total
            step = np.linalg.norm(new - m)
            m = new
            if step < cfg.tol:
                converged = True
                break
        if not converged:
            warnings.append(f"cluster {k}: mode solver hit max_iters={cfg.max_iters}")
        modes[k] = m
        u_traces.append(np.array(trace))
    return Prototypes(values=modes, rule=RULE_MODES), u_traces, warnings


def prototype_scores(X, M: Prototypes, rule=None, sigma2=None):
    """Per-point prototype scores a (N x K), signed so higher is better.

    means: a = -||x_p - m_k||^2; modes: a = w_F(x_p, m_k). Softmaxing a row
    then favors the low-cost (high-affinity) prototype.
    """
    X = validate_features(X)
    rule = rule or M.rule
    V = M.values
    if X.shape[0] * V.shape[0] * X.shape[1] <= 20_000_000:
        diff = X[:, None, :] - V[None, :, :]
        sqd = np.einsum("nkd,nkd->nk", diff, diff)
    else:
        sqd = (
            np.einsum("ij,ij->i", X, X)[:, None]
            + np.einsum("ij,ij->i", V, V)[None, :]
            - 2.0 * (X @ V.T)
        )
        np.maximum(sqd, 0.0, out=sqd)
    if rule == RULE_MEANS:
        return -sqd
    if rule == RULE_MODES:
        if sigma2 is None:
            raise DataError("sigma2 is required for the modes rule")
        return np.exp(np.maximum(-sqd / (2.0 * sigma2), _EXP_CLAMP))
    raise DataError(f"unknown prototype rule: {rule!r}")
