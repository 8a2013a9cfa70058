"""Fractional-calculus primitives shared by every other module.

A discrete-time fractional-order system couples each state to its entire
past through binomial weights that decay like a power law.  This module
computes those weights, the per-lag system matrices they induce, and the
block-companion realization obtained by truncating the memory to the last
``p`` lags.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Orders above 2 would void the marginal-stability assumption the error
# certificates rest on, so they are rejected at construction time.
ALPHA_MAX = 2.0

A0_CONVENTIONS = ("derivation", "as_printed")


def _frozen(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class FracSystem:
    """Ground-truth fractional-order system.

    Attributes
    ----------
    alpha : (n,) array
        Fractional order of each state channel, 0 < alpha_i <= 2.
    A : (n, n) array
        System matrix acting on the current state.
    B : (n, m) array or None
        Input matrix; None for autonomous systems.
    sigma : float
        Standard deviation of the i.i.d. Gaussian process noise.
    """

    alpha: np.ndarray
    A: np.ndarray
    B: np.ndarray | None = None
    sigma: float = 0.0

    def __post_init__(self):
        alpha = _frozen(np.atleast_1d(self.alpha))
        A = _frozen(np.atleast_2d(self.A))
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "A", A)
        n = alpha.shape[0]
        if alpha.ndim != 1:
            raise DomainError("alpha must be a vector")
        if np.any(alpha <= 0.0):
            raise DomainError("every fractional order must be positive")
        if np.any(alpha > ALPHA_MAX):
            raise DomainError(
                f"fractional orders above {ALPHA_MAX} are rejected: the error "
                "certificates assume a marginally stable realization"
            )
        if A.shape != (n, n):
            raise DomainError(f"A must be {n}x{n}, got {A.shape}")
        if self.B is not None:
            B = _frozen(np.atleast_2d(self.B))
            object.__setattr__(self, "B", B)
            if B.shape[0] != n:
                raise DomainError(f"B must have {n} rows, got {B.shape}")
        if self.sigma < 0.0:
            raise DomainError("sigma must be non-negative")

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    @property
    def m(self) -> int:
        return 0 if self.B is None else self.B.shape[1]


@dataclass(frozen=True)
class GlWeights:
    """Binomial memory weights psi(alpha, 0..J) of one channel."""

    alpha_i: float
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))

    @property
    def J(self) -> int:
        return self.values.shape[0] - 1


@dataclass(frozen=True)
class AugmentedSystem:
    """Block-companion LTI realization with memory truncated at ``p`` lags.

    The top block row holds the lag matrices [A_0 ... A_{p-1}], the
    subdiagonal holds identity blocks that shift the state history, and the
    noise (and optional input) enters through the first block only.
    """

    p: int
    n: int
    Atilde: np.ndarray
    Btilde: np.ndarray | None
    Btilde_w: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Atilde", _frozen(self.Atilde))
        object.__setattr__(self, "Btilde_w", _frozen(self.Btilde_w))
        object.__setattr__(self, "alpha", _frozen(self.alpha))
        if self.Btilde is not None:
            object.__setattr__(self, "Btilde", _frozen(self.Btilde))

    @property
    def d(self) -> int:
        return self.n * self.p

    def top_blocks(self) -> list[np.ndarray]:
        """The lag matrices A_0..A_{p-1} read back out of the top block row."""
        n = self.n
        return [self.Atilde[:n, j * n:(j + 1) * n] for j in range(self.p)]


def gl_weights(alpha_i: float, J: int) -> GlWeights:
    """Memory weights psi(alpha_i, j) = (-1)^j C(alpha_i, j) for j = 0..J.

    Computed by the multiplicative recurrence

        psi(a, 0) = 1,   psi(a, j) = psi(a, j-1) * (j - 1 - a) / j,

    which is algebraically identical to the Gamma-ratio form but free of
    the poles and overflow that direct Gamma evaluation hits.
    """
    if alpha_i <= 0.0:
        raise DomainError("alpha_i must be positive")
    if J < 0:
        raise DomainError("J must be non-negative")
    values = np.empty(J + 1)
    values[0] = 1.0
    for j in range(1, J + 1):
        values[j] = values[j - 1] * (j - 1 - alpha_i) / j
    return GlWeights(alpha_i=float(alpha_i), values=values)


def gl_weight_table(alpha: np.ndarray, J: int) -> np.ndarray:
    """Per-channel weights as a (J+1, n) table; row j holds psi(alpha_i, j)."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if np.any(alpha <= 0.0):
        raise DomainError("every fractional order must be positive")
    if J < 0:
        raise DomainError("J must be non-negative")
    table = np.empty((J + 1, alpha.shape[0]))
    table[0] = 1.0
    for j in range(1, J + 1):
        table[j] = table[j - 1] * (j - 1 - alpha) / j
    return table


def build_aj(system: FracSystem, j: int, a0_convention: str = "derivation") -> np.ndarray:
    """Lag matrix A_j of the expanded state recursion.

    A_0 combines the system matrix with the first memory weight; every
    deeper lag contributes a pure diagonal -diag(psi(alpha_i, j+1)).

    The printed form of the paper-equation chain disagrees with its own
    derivation on the sign of the diagonal in A_0.  ``derivation`` (the
    default) uses A_0 = A + diag(alpha), which also reproduces the classic
    x[k+1] = (A + I) x[k] recursion at alpha = 1; ``as_printed`` gives
    A_0 = A - diag(alpha).
    """
    if j < 0:
        raise DomainError("lag index must be non-negative")
    if a0_convention not in A0_CONVENTIONS:
        raise DomainError(f"a0_convention must be one of {A0_CONVENTIONS}")
    if j == 0:
        sign = 1.0 if a0_convention == "derivation" else -1.0
        return system.A + sign * np.diag(system.alpha)
    psi = gl_weight_table(system.alpha, j + 1)[j + 1]
    return np.diag(-psi)


def augment(system: FracSystem, p: int, a0_convention: str = "derivation") -> AugmentedSystem:
    """Stack the last ``p`` lags into a block-companion LTI system.

    Returns the d x d matrix (d = n*p) whose top block row is
    [A_0 ... A_{p-1}] with identity shift blocks below, together with the
    input and noise injection matrices [B; 0; ...] and [I; 0; ...].
    """
    if p < 1:
        raise DomainError("truncation length p must be at least 1")
    n = system.n
    d = n * p
    Atilde = np.zeros((d, d))
    # The lag diagonals all come from one weight table so that every
    # consumer (simulators included) sees identical floating-point values.
    psi = gl_weight_table(system.alpha, p)
    sign = 1.0 if a0_convention == "derivation" else -1.0
    Atilde[:n, :n] = system.A + sign * np.diag(system.alpha)
    for j in range(1, p):
        Atilde[:n, j * n:(j + 1) * n] = np.diag(-psi[j + 1])
    for b in range(1, p):
        rows = slice(b * n, (b + 1) * n)
        cols = slice((b - 1) * n, b * n)
        Atilde[rows, cols] = np.eye(n)

    Btilde_w = np.zeros((d, n))
    Btilde_w[:n, :n] = np.eye(n)
    Btilde = None
    if system.B is not None:
        Btilde = np.zeros((d, system.B.shape[1]))
        Btilde[:n] = system.B
    return AugmentedSystem(p=p, n=n, Atilde=Atilde, Btilde=Btilde,
                           Btilde_w=Btilde_w, alpha=system.alpha)
