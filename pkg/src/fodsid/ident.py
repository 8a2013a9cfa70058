"""Least-squares estimation of the block-companion matrix from a trajectory.

The regression stacks the lag-augmented states as rows and solves the
one-step prediction problem with an SVD-based factorization, so
rank-deficient windows fall back to the minimum-norm solution instead of
blowing up.  Gram matrices are never formed for the solve itself; the
normal equations only appear in tests as an independent check.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import AugmentedSystem
from .errors import ConfigError, DomainError
from .sim import Trajectory

log = logging.getLogger(__name__)

_OPNORM_SEED = 1789


@dataclass(frozen=True)
class OlsEstimate:
    """Result of one least-squares fit."""

    Atilde_hat: np.ndarray
    p: int
    mode: str  # autonomous | with_inputs | structured
    residual_rss: float
    regressor_min_singular_value: float
    K_used: int
    degenerate: bool

    @property
    def d(self) -> int:
        return self.Atilde_hat.shape[0]


def build_regressors(states: np.ndarray, p: int, drop_initial: bool = False):
    """Lag-augmented regressor/target rows for a state sequence.

    Row k of the regressor matrix is [x[k]; x[k-1]; ...; x[k-p+1]] with
    zeros standing in for pre-initial samples (the causality convention);
    ``drop_initial`` discards the first p-1 partially padded rows instead.

    Returns (X, Y, offset) where offset is the transition index of row 0.
    """
    states = np.asarray(states, dtype=float)
    if states.ndim == 1:
        states = states[:, None]
    K1, n = states.shape
    if p < 1:
        raise DomainError("truncation length p must be at least 1")
    d = n * p
    xtil = np.zeros((K1, d))
    for b in range(p):
        xtil[b:, b * n:(b + 1) * n] = states[:K1 - b]
    X, Y = xtil[:-1], xtil[1:]
    offset = 0
    if drop_initial and p > 1:
        offset = p - 1
        X, Y = X[offset:], Y[offset:]
    if X.shape[0] < 1:
        raise DomainError("no regression rows left after dropping initial samples")
    return X, Y, offset


def _companion_from_top(top: np.ndarray, n: int, p: int) -> np.ndarray:
    d = n * p
    A = np.zeros((d, d))
    A[:n] = top
    for b in range(1, p):
        A[b * n:(b + 1) * n, (b - 1) * n:b * n] = np.eye(n)
    return A


def _lstsq(X: np.ndarray, T: np.ndarray):
    sol, _, rank, svals = np.linalg.lstsq(X, T, rcond=None)
    rss = float(((T - X @ sol) ** 2).sum())
    min_sv = float(svals.min()) if svals.size else 0.0
    degenerate = bool(rank < X.shape[1])
    return sol, rss, min_sv, degenerate


def fit_states(states: np.ndarray, p: int, *, structured: bool = False,
               drop_initial: bool = False, input_shift: np.ndarray | None = None,
               mode: str | None = None) -> OlsEstimate:
    """Fit the companion matrix directly from a state array.

    ``input_shift`` (one row per transition) is subtracted from the targets
    before solving; it carries the known Btilde @ u[k] contribution.
    """
    states = np.asarray(states, dtype=float)
    if states.ndim == 1:
        states = states[:, None]
    K = states.shape[0] - 1
    if K < 2:
        raise DomainError("need at least two transitions to fit")
    n = states.shape[1]
    d = n * p
    if K < d:
        log.warning("trajectory has K=%d transitions, below the augmented dimension d=%d; "
                    "expect a degenerate fit", K, d)
    X, Y, offset = build_regressors(states, p, drop_initial)
    if input_shift is not None:
        Y = Y - input_shift[offset:]
    if structured:
        sol, rss, min_sv, degenerate = _lstsq(X, Y[:, :n])
        Atilde_hat = _companion_from_top(sol.T, n, p)
        mode = mode or "structured"
    else:
        sol, rss, min_sv, degenerate = _lstsq(X, Y)
        Atilde_hat = sol.T
        mode = mode or "autonomous"
    if degenerate:
        log.warning("rank-deficient regressors (min singular value %.3e); "
                    "returning the minimum-norm solution", min_sv)
    return OlsEstimate(Atilde_hat=Atilde_hat, p=p, mode=mode, residual_rss=rss,
                       regressor_min_singular_value=min_sv, K_used=X.shape[0],
                       degenerate=degenerate)


def ols_fit(traj: Trajectory, p: int, *, structured: bool = False,
            drop_initial: bool = False) -> OlsEstimate:
    """Minimize the summed squared one-step residuals over all d x d matrices.

    The default estimates the full companion matrix, known shift blocks
    included; ``structured`` restricts the unknowns to the top block row
    and fills the rest with the exact companion structure.
    """
    return fit_states(traj.states, p, structured=structured, drop_initial=drop_initial)


def ols_fit_with_inputs(traj: Trajectory, p: int, Btilde: np.ndarray,
                        *, drop_initial: bool = False) -> OlsEstimate:
    """Same regression after removing the known input contribution Btilde u[k]."""
    if traj.inputs is None:
        raise ConfigError("trajectory carries no inputs; use ols_fit instead")
    Btilde = np.asarray(Btilde, dtype=float)
    if Btilde.ndim == 1:
        Btilde = Btilde[:, None]
    d = traj.n * p
    if Btilde.shape != (d, traj.inputs.shape[1]):
        raise DomainError(f"Btilde must be {d}x{traj.inputs.shape[1]}, got {Btilde.shape}")
    shift = traj.inputs @ Btilde.T
    return fit_states(traj.states, p, drop_initial=drop_initial,
                      input_shift=shift, mode="with_inputs")


def operator_norm(M: np.ndarray, rel_tol: float = 1e-10, max_iter: int = 500_000) -> float:
    """Largest singular value via power iteration on the (smaller) Gram matrix.

    The start vector is a fixed pseudo-random draw, which is generically
    non-orthogonal to the leading singular space; iteration stops when the
    Rayleigh quotient is stationary and the eigen-residual is below
    ``rel_tol`` relative to the current estimate.
    """
    M = np.asarray(M, dtype=float)
    if M.size == 0 or not M.any():
        return 0.0
    G = M @ M.T if M.shape[0] <= M.shape[1] else M.T @ M
    rng = np.random.default_rng(_OPNORM_SEED)
    v = rng.standard_normal(G.shape[0])
    v /= np.linalg.norm(v)
    lam_prev = 0.0
    lam = 0.0
    for _ in range(max_iter):
        w = G @ v
        lam = float(v @ w)
        resid = float(np.linalg.norm(w - lam * v))
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            # v landed in the null space; restart from a fresh direction
            v = rng.standard_normal(G.shape[0])
            v /= np.linalg.norm(v)
            continue
        v = w / norm_w
        if resid <= rel_tol * max(lam, 1e-300) and abs(lam - lam_prev) <= rel_tol * lam:
            break
        lam_prev = lam
    return float(np.sqrt(max(lam, 0.0)))


def operator_norm_error(estimate: OlsEstimate, truth: AugmentedSystem) -> float:
    """Operator-norm distance between the estimate and the true companion matrix."""
    if estimate.Atilde_hat.shape != truth.Atilde.shape:
        raise DomainError(
            f"estimate is {estimate.Atilde_hat.shape}, truth is {truth.Atilde.shape}")
    return operator_norm(estimate.Atilde_hat - truth.Atilde)


def submatrix_error_report(estimate: OlsEstimate, truth: AugmentedSystem) -> np.ndarray:
    """Per-lag errors ||Ahat_j - A_j||_op for the top block row.

    Every block of a matrix has operator norm at most that of the whole
    matrix, so each entry is checked against the full-matrix error.
    """
    if estimate.Atilde_hat.shape != truth.Atilde.shape:
        raise DomainError(
            f"estimate is {estimate.Atilde_hat.shape}, truth is {truth.Atilde.shape}")
    n, p = truth.n, truth.p
    full = operator_norm_error(estimate, truth)
    errors = np.empty(p)
    for j in range(p):
        cols = slice(j * n, (j + 1) * n)
        diff = estimate.Atilde_hat[:n, cols] - truth.Atilde[:n, cols]
        errors[j] = operator_norm(diff)
    # both sides come from the same iterative estimator, hence the slack
    assert np.all(errors <= full * (1.0 + 1e-9) + 1e-300), \
        "submatrix operator norm exceeded the full-matrix norm"
    return errors
