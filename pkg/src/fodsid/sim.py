"""Trajectory generation for the exact and truncated-memory recursions.

Noise contract
--------------
All randomness comes from the counter-based Philox generator keyed as
``(seed << 64) | stream``, where each trajectory owns two streams:
``2*index`` for process noise and ``2*index + 1`` for exogenous inputs.
Uniform draws are 53-bit integers mapped to the open interval (0, 1) via
``(raw + 0.5) * 2**-53`` and pushed through the inverse normal CDF, so any
implementation with the same uniform stream reproduces the same Gaussians.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .core import AugmentedSystem, FracSystem, gl_weight_table
from .errors import ConfigError, DomainError

_MASK64 = (1 << 64) - 1


def _philox(seed: int, stream: int) -> np.random.Generator:
    if seed < 0:
        raise DomainError("seed must be a non-negative integer")
    key = ((seed & _MASK64) << 64) | (stream & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def gaussian_draws(seed: int, stream: int, shape, scale: float = 1.0) -> np.ndarray:
    """Deterministic N(0, scale^2) draws from the (seed, stream) Philox lane."""
    gen = _philox(seed, stream)
    raw = gen.integers(0, 1 << 53, size=shape, dtype=np.int64)
    u = (raw.astype(float) + 0.5) * 2.0 ** -53
    return scale * ndtri(u)


def process_noise(seed: int, K: int, n: int, sigma: float,
                  trajectory_index: int = 0) -> np.ndarray:
    """The w[0..K-1] realization a trajectory with this seed/index will see."""
    return gaussian_draws(seed, 2 * trajectory_index, (K, n), sigma)


def gaussian_inputs(seed: int, K: int, m: int, sigma_u: float,
                    trajectory_index: int = 0) -> np.ndarray:
    """I.i.d. N(0, sigma_u^2 I_m) input sequence from the input stream."""
    return gaussian_draws(seed, 2 * trajectory_index + 1, (K, m), sigma_u)


@dataclass(frozen=True)
class TrajectoryMeta:
    seed: int | None
    generator: str
    sigma: float | None = None
    sigma_u: float | None = None
    stream: int = 0


@dataclass(frozen=True)
class Trajectory:
    """States x[0..K] plus the realized inputs/noises that produced them."""

    states: np.ndarray
    inputs: np.ndarray | None
    noises: np.ndarray | None
    meta: TrajectoryMeta

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        object.__setattr__(self, "states", states)
        K = states.shape[0] - 1
        if K < 1:
            raise DomainError("a trajectory needs at least one transition")
        for name in ("inputs", "noises"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=float)
                if arr.ndim == 1:
                    arr = arr[:, None]
                object.__setattr__(self, name, arr)
                if arr.shape[0] != K:
                    raise DomainError(f"{name} must have K={K} rows, got {arr.shape[0]}")

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def K(self) -> int:
        return self.states.shape[0] - 1


def _check_shapes(n: int, x0, K: int, inputs, B) -> tuple[np.ndarray, np.ndarray | None]:
    if K < 1:
        raise DomainError("horizon K must be at least 1")
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape != (n,):
        raise DomainError(f"x0 must have length {n}, got {x0.shape}")
    if (inputs is None) != (B is None):
        raise ConfigError("inputs and an input matrix B must be supplied together")
    if inputs is not None:
        inputs = np.asarray(inputs, dtype=float)
        if inputs.ndim == 1:
            inputs = inputs[:, None]
        if inputs.shape != (K, B.shape[1]):
            raise DomainError(f"inputs must be {K}x{B.shape[1]}, got {inputs.shape}")
    return x0, inputs


def _propagate(A0, lag_weights, x0, K, noises, inputs, B, max_lag):
    """Shared stepping kernel: x[k+1] = A0 x[k] + sum_j lag_j * x[k-j] (+ Bu + w).

    Both simulators run through here with identical lag-weight values, so
    their states agree exactly wherever the lag windows coincide.
    """
    n = A0.shape[0]
    states = np.zeros((K + 1, n))
    states[0] = x0
    for k in range(K):
        J = min(k, max_lag)
        acc = A0 @ states[k]
        if J >= 1:
            # rows k-1 .. k-J paired with lag weights 1 .. J
            acc = acc + (lag_weights[1:J + 1] * states[k - J:k][::-1]).sum(axis=0)
        if B is not None:
            acc = acc + B @ inputs[k]
        if noises is not None:
            acc = acc + noises[k]
        states[k + 1] = acc
    return states


def simulate_exact(system: FracSystem, x0, K: int, noise_seed: int,
                   inputs=None, *, stream: int = 0,
                   a0_convention: str = "derivation") -> Trajectory:
    """Run the full-memory recursion: every past state contributes.

    States and disturbances before time zero are taken to be zero, so the
    lag sum at step k runs over j = 0..k.  Cost grows as O(K^2 n) because
    the convolution window widens with k.
    """
    n = system.n
    x0, inputs = _check_shapes(n, x0, K, inputs, system.B)
    if a0_convention not in ("derivation", "as_printed"):
        raise DomainError("a0_convention must be 'derivation' or 'as_printed'")
    psi = gl_weight_table(system.alpha, K)
    sign = 1.0 if a0_convention == "derivation" else -1.0
    A0 = system.A + sign * np.diag(system.alpha)
    lag_weights = -psi[1:]  # row j holds the diagonal of A_j for j >= 1
    noises = process_noise(noise_seed, K, n, system.sigma, stream)
    states = _propagate(A0, lag_weights, x0, K, noises, inputs, system.B, max_lag=K - 1)
    meta = TrajectoryMeta(seed=noise_seed, generator="exact", sigma=system.sigma,
                          sigma_u=None, stream=stream)
    return Trajectory(states=states, inputs=inputs, noises=noises, meta=meta)


def simulate_augmented(aug: AugmentedSystem, x0, K: int, noise_seed: int,
                       inputs=None, *, sigma: float = 0.0,
                       stream: int = 0) -> Trajectory:
    """Propagate the block-companion realization and record its first block.

    Starting from the causal augmented state [x0; 0; ...; 0], the shift
    blocks make the lower blocks exact copies of past states, so the top
    block obeys the same convolution as the exact recursion with the lag
    window clipped at p-1.  The lag values are read back out of the
    companion matrix, which keeps the two simulators bit-compatible over
    any horizon the truncation window covers.
    """
    n = aug.n
    x0, inputs = _check_shapes(n, x0, K, inputs, aug.Btilde)
    if sigma < 0.0:
        raise DomainError("sigma must be non-negative")
    blocks = aug.top_blocks()
    A0 = blocks[0]
    lag_weights = np.zeros((aug.p, n))
    for j in range(1, aug.p):
        block = blocks[j]
        if np.any(block != np.diag(np.diagonal(block))):
            raise DomainError(f"lag block {j} is not diagonal")
        lag_weights[j] = np.diagonal(block)
    B = None if aug.Btilde is None else aug.Btilde[:n]
    noises = process_noise(noise_seed, K, n, sigma, stream)
    states = _propagate(A0, lag_weights, x0, K, noises, inputs, B, max_lag=aug.p - 1)
    meta = TrajectoryMeta(seed=noise_seed, generator=f"augmented:{aug.p}",
                          sigma=sigma, sigma_u=None, stream=stream)
    return Trajectory(states=states, inputs=inputs, noises=noises, meta=meta)


def truncation_error_sweep(system: FracSystem, x0, K: int, p_list,
                           noise_seed: int, *, stream: int = 0) -> list[tuple[int, float]]:
    """Worst-case state deviation of each truncation length against full memory.

    The same noise realization drives every run, so the rows isolate the
    effect of the memory cutoff alone.
    """
    from .core import augment

    p_list = list(p_list)
    if not p_list:
        raise DomainError("p_list must not be empty")
    if any(p < 1 for p in p_list):
        raise DomainError("every truncation length must be at least 1")
    exact = simulate_exact(system, x0, K, noise_seed, stream=stream)
    rows = []
    for p in p_list:
        aug = augment(system, p)
        approx = simulate_augmented(aug, x0, K, noise_seed,
                                    sigma=system.sigma, stream=stream)
        err = float(np.max(np.linalg.norm(exact.states - approx.states, axis=1)))
        rows.append((int(p), err))
    return rows
