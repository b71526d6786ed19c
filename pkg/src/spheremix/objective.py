"""Objective pieces for the balance-regularized spherical mixture.

The fitted criterion is

    F(theta, gamma) = sum_ik gamma_ik log(alpha_k f(x_i | mu_k, kappa_k))
                      + sum_i H(gamma_i)
                      - (lam / 2) ||pi(gamma) - u||^2

with a fixed uniform prior alpha_k = 1/K, pi(gamma) the column means of
gamma, and u the uniform distribution. The quadratic balance term is
concave with an exactly lam-Lipschitz gradient, which is what makes the
linearized surrogate below a true minorizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DimensionMismatchError, SizeMismatchError
from .geometry import KAPPA_MAX, log_vmf_norm_const

_ROW_SUM_ATOL = 1e-9


@dataclass(frozen=True)
class MixtureParams:
    """vMF mixture parameters: unit mean directions and concentrations.

    The mixing prior is fixed at 1/K by design (the balance penalty acts
    on the responsibilities instead), so it is not stored.
    """

    means: np.ndarray   # (k, d), unit rows
    kappas: np.ndarray  # (k,), each in [0, KAPPA_MAX]

    @property
    def k(self) -> int:
        return self.means.shape[0]

    @property
    def d(self) -> int:
        return self.means.shape[1]

    def validate(self) -> "MixtureParams":
        if self.means.ndim != 2 or self.kappas.shape != (self.means.shape[0],):
            raise DimensionMismatchError(
                f"means {self.means.shape} and kappas {self.kappas.shape} disagree"
            )
        norms = np.linalg.norm(self.means, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise DimensionMismatchError("mean directions must be unit vectors")
        if np.any(self.kappas < 0.0) or np.any(self.kappas > KAPPA_MAX):
            raise ValueError(f"kappas must lie in [0, {KAPPA_MAX:g}]")
        return self


def check_responsibilities(gamma: np.ndarray) -> np.ndarray:
    """Validate an (n, k) row-stochastic matrix and return it as float64."""
    gamma = np.asarray(gamma, dtype=np.float64)
    if gamma.ndim != 2:
        raise DimensionMismatchError(f"expected (n, k) responsibilities, got {gamma.shape}")
    if np.any(gamma < -_ROW_SUM_ATOL):
        raise ValueError("responsibilities must be nonnegative")
    rows = gamma.sum(axis=1)
    if np.any(np.abs(rows - 1.0) > _ROW_SUM_ATOL):
        bad = int(np.argmax(np.abs(rows - 1.0)))
        raise ValueError(f"row {bad} sums to {rows[bad]!r}, not 1")
    return gamma


def empirical_mass(gamma: np.ndarray) -> np.ndarray:
    """pi(gamma): the fraction of total responsibility held by each cluster."""
    gamma = check_responsibilities(gamma)
    return gamma.mean(axis=0)


def balance_regularizer(pi: np.ndarray, lam: float) -> float:
    """R(pi) = -(lam / 2) ||pi - u||_2^2, maximal (zero) at the uniform pi."""
    if lam < 0.0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    pi = np.asarray(pi, dtype=np.float64)
    u = 1.0 / pi.shape[0]
    return -0.5 * lam * float(np.sum((pi - u) ** 2))


def balance_gradient(pi: np.ndarray, lam: float) -> np.ndarray:
    """grad R(pi) = -lam (pi - u). Affine, hence exactly lam-Lipschitz."""
    if lam < 0.0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    pi = np.asarray(pi, dtype=np.float64)
    u = 1.0 / pi.shape[0]
    return -lam * (pi - u)


def row_entropy(row: np.ndarray) -> float:
    """Shannon entropy -sum p log p of one responsibility row, with 0 log 0 = 0."""
    row = np.asarray(row, dtype=np.float64)
    return -float(np.sum(special.xlogy(row, row)))


def entropy_total(gamma: np.ndarray) -> float:
    """Sum of row entropies of a responsibility matrix."""
    return -float(np.sum(special.xlogy(gamma, gamma)))


def log_component_scores(X: np.ndarray, theta: MixtureParams) -> np.ndarray:
    """(n, k) matrix of log(alpha_k f(x_i | mu_k, kappa_k)) with alpha_k = 1/k.

    One dense dot product X @ means.T per call; callers that evaluate the
    objective and surrogate repeatedly at the same theta should compute
    this once and use the *_from_scores helpers.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != theta.d:
        raise DimensionMismatchError(f"X has d={X.shape[1]}, theta has d={theta.d}")
    log_c = np.array(
        [log_vmf_norm_const(theta.d, float(kap)) for kap in theta.kappas]
    )
    return X @ theta.means.T * theta.kappas[None, :] + log_c[None, :] - np.log(theta.k)


def log_marginal(x: np.ndarray, theta: MixtureParams) -> float | np.ndarray:
    """log sum_k alpha_k f(x | mu_k, kappa_k) for one row or a stack of rows."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    scores = log_component_scores(x[None, :] if single else x, theta)
    out = special.logsumexp(scores, axis=1)
    return float(out[0]) if single else out


def posterior(theta: MixtureParams, X: np.ndarray) -> np.ndarray:
    """Exact posterior responsibilities: row-softmax of the component scores."""
    return softmax_rows(log_component_scores(X, theta))


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stable under large logits; -inf entries get 0."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    np.exp(shifted, out=shifted)
    shifted /= shifted.sum(axis=1, keepdims=True)
    return shifted


def elbo_from_scores(scores: np.ndarray, gamma: np.ndarray) -> float:
    """Fidelity part sum_ik gamma_ik scores_ik plus the entropy of gamma."""
    if scores.shape != gamma.shape:
        raise SizeMismatchError(f"scores {scores.shape} vs gamma {gamma.shape}")
    return float(np.sum(gamma * scores)) + entropy_total(gamma)


def objective_from_scores(scores: np.ndarray, gamma: np.ndarray, lam: float) -> float:
    pi = gamma.mean(axis=0)
    return elbo_from_scores(scores, gamma) + balance_regularizer(pi, lam)


def surrogate_from_scores(
    scores: np.ndarray, gamma: np.ndarray, pi_anchor: np.ndarray, lam: float
) -> float:
    """Linearized-penalty surrogate around pi_anchor, at fixed theta.

    Replaces R(pi(gamma)) by its tangent at the anchor minus the matching
    (lam / 2) ||pi - pi_anchor||^2 curvature term. Because grad R is
    exactly lam-Lipschitz this lower-bounds the true objective everywhere
    and touches it at gamma with pi(gamma) = pi_anchor.
    """
    pi = gamma.mean(axis=0)
    diff = pi - pi_anchor
    return (
        elbo_from_scores(scores, gamma)
        + balance_regularizer(pi_anchor, lam)
        + float(balance_gradient(pi_anchor, lam) @ diff)
        - 0.5 * lam * float(diff @ diff)
    )


def elbo_value(theta: MixtureParams, gamma: np.ndarray, X: np.ndarray) -> float:
    """ELBO part of the objective (no balance term). Equals the sum of
    log-marginals when gamma is the exact posterior."""
    gamma = check_responsibilities(gamma)
    return elbo_from_scores(log_component_scores(X, theta), gamma)


def objective_value(
    theta: MixtureParams, gamma: np.ndarray, X: np.ndarray, lam: float
) -> float:
    """Full criterion F(theta, gamma) at the given parameters."""
    gamma = check_responsibilities(gamma)
    return objective_from_scores(log_component_scores(X, theta), gamma, lam)


def surrogate_value(
    theta: MixtureParams,
    gamma: np.ndarray,
    pi_anchor: np.ndarray,
    X: np.ndarray,
    lam: float,
) -> float:
    """Surrogate criterion at fixed theta, anchored at pi_anchor."""
    gamma = check_responsibilities(gamma)
    pi_anchor = np.asarray(pi_anchor, dtype=np.float64)
    if pi_anchor.shape != (gamma.shape[1],):
        raise SizeMismatchError(f"anchor shape {pi_anchor.shape} vs k={gamma.shape[1]}")
    return surrogate_from_scores(log_component_scores(X, theta), gamma, pi_anchor, lam)
