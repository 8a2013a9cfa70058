"""Sample-complexity certificates and their Monte-Carlo validation.

Evaluates the high-probability operator-norm error bounds for least-squares
identification of the companion realization: finite-time controllability
Gramians, the minimum-eigenvalue and log-determinant terms they feed, the
burn-in condition, and campaign tables that put empirical errors next to
the certified bound.

The universal constants are never pinned down by the theory itself; the
defaults here come from the proof-side small-ball machinery (excitation
probability 3/20), giving C = 90/(3/20) = 600 (scaled by the noise level
by default) and c = 10/(3/20)^2 = 444.4.  Both are overridable.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import AugmentedSystem, FracSystem, augment
from .errors import ConfigError, DomainError, FodsidError
from .ident import OlsEstimate, ols_fit, ols_fit_with_inputs, operator_norm_error
from .sim import gaussian_inputs, simulate_augmented, simulate_exact

log = logging.getLogger(__name__)

SMALL_BALL_P = 3.0 / 20.0
MARGINAL_STABILITY_TOL = 1e-8


@dataclass(frozen=True)
class BoundConstants:
    """Universal-constant choices entering the bound.

    gramian_index selects which Gramian the small-ball term uses: the
    theorem statement indexes it at k, the proof at floor(k/2).
    sigma_scaling controls whether C is multiplied by sigma (the proof
    carries an explicit sigma the theorem statement drops).
    """

    C_const: float = 90.0 / SMALL_BALL_P
    c_const: float = 10.0 / SMALL_BALL_P ** 2
    gramian_index: str = "k"       # "k" | "half_k"
    sigma_scaling: str = "sigma"   # "sigma" | "none"

    def __post_init__(self):
        if self.C_const <= 0 or self.c_const <= 0:
            raise DomainError("bound constants must be positive")
        if self.gramian_index not in ("k", "half_k"):
            raise DomainError("gramian_index must be 'k' or 'half_k'")
        if self.sigma_scaling not in ("sigma", "none"):
            raise DomainError("sigma_scaling must be 'sigma' or 'none'")

    def small_ball_index(self, k: int) -> int:
        return k if self.gramian_index == "k" else max(1, k // 2)


@dataclass(frozen=True)
class GramianSeries:
    """Partial-sum Gramians W_1..W_t_max (noise kind) or the input analogue."""

    kind: str
    values: tuple

    @property
    def t_max(self) -> int:
        return len(self.values)

    def __getitem__(self, t: int) -> np.ndarray:
        if not 1 <= t <= self.t_max:
            raise DomainError(f"Gramian index t={t} outside 1..{self.t_max}")
        return self.values[t - 1]


@dataclass(frozen=True)
class BoundCertificate:
    """One evaluated error certificate."""

    K: int
    k: int
    delta: float
    C_const: float
    c_const: float
    lambda_min_Wk: float
    logdet_ratio: float
    bound_value: float
    burn_in_satisfied: bool
    variant: str  # autonomous | with_inputs
    sigma: float
    sigma_u: float = 0.0
    d: int = 0
    gramian_index: str = "k"
    valid: bool = True


class SpectralRadius(NamedTuple):
    value: float
    marginally_stable: bool


def spectral_radius(Atilde: np.ndarray) -> SpectralRadius:
    """Largest eigenvalue magnitude plus the marginal-stability verdict."""
    Atilde = np.asarray(Atilde, dtype=float)
    if Atilde.ndim != 2 or Atilde.shape[0] != Atilde.shape[1]:
        raise DomainError("spectral radius needs a square matrix")
    rho = float(np.max(np.abs(np.linalg.eigvals(Atilde))))
    return SpectralRadius(rho, rho <= 1.0 + MARGINAL_STABILITY_TOL)


def gramian(Atilde: np.ndarray, t: int) -> np.ndarray:
    """Noise Gramian: sum of A^j (A^j)^T for j = 0..t-1, accumulated iteratively."""
    if t < 1:
        raise DomainError("Gramian horizon t must be at least 1")
    Atilde = np.asarray(Atilde, dtype=float)
    d = Atilde.shape[0]
    M = np.eye(d)
    W = np.eye(d)
    for _ in range(t - 1):
        M = Atilde @ M
        W = W + M @ M.T
    return W


def gramian_input(Atilde: np.ndarray, Btilde: np.ndarray, t: int) -> np.ndarray:
    """Input Gramian: sum of A^j B B^T (A^j)^T for j = 0..t-1."""
    if t < 1:
        raise DomainError("Gramian horizon t must be at least 1")
    Atilde = np.asarray(Atilde, dtype=float)
    Btilde = np.asarray(Btilde, dtype=float)
    if Btilde.ndim == 1:
        Btilde = Btilde[:, None]
    M = Btilde.copy()
    W = M @ M.T
    for _ in range(t - 1):
        M = Atilde @ M
        W = W + M @ M.T
    return W


def gramian_series(Atilde: np.ndarray, t_max: int, kind: str = "noise",
                   Btilde: np.ndarray | None = None) -> GramianSeries:
    """All partial sums W_1..W_t_max in one accumulation pass."""
    if t_max < 1:
        raise DomainError("t_max must be at least 1")
    if kind not in ("noise", "input"):
        raise DomainError("kind must be 'noise' or 'input'")
    Atilde = np.asarray(Atilde, dtype=float)
    if kind == "input":
        if Btilde is None:
            raise ConfigError("input Gramian series needs Btilde")
        M = np.asarray(Btilde, dtype=float)
        if M.ndim == 1:
            M = M[:, None]
        M = M.copy()
    else:
        M = np.eye(Atilde.shape[0])
    W = M @ M.T
    values = [W.copy()]
    for _ in range(t_max - 1):
        M = Atilde @ M
        W = W + M @ M.T
        values.append(W.copy())
    return GramianSeries(kind=kind, values=tuple(values))


def _symmetrize(W: np.ndarray) -> np.ndarray:
    return 0.5 * (W + W.T)


def _logdet_psd(W: np.ndarray) -> float:
    """log det via Cholesky; raises LinAlgError when W is not positive definite."""
    L = np.linalg.cholesky(W)
    return float(2.0 * np.sum(np.log(np.diagonal(L))))


def _atilde_of(obj) -> np.ndarray:
    if isinstance(obj, AugmentedSystem):
        return obj.Atilde
    if isinstance(obj, OlsEstimate):
        return obj.Atilde_hat
    return np.asarray(obj, dtype=float)


def _check_bound_args(K: int, k: int, delta: float):
    if not 0.0 < delta < 0.5:
        raise DomainError("delta must lie in (0, 1/2)")
    if not 1 <= k <= K:
        raise DomainError("need 1 <= k <= K")


def evaluate_bound(aug, K: int, k: int, delta: float, sigma: float,
                   constants: BoundConstants | None = None) -> BoundCertificate:
    """Evaluate the noise-driven error bound and its burn-in condition.

    bound = C / sqrt(K * lambda_min(W_k)) * sqrt(d log(d/delta) + log det(W_K W_k^-1))
    burn-in: K/k >= c * (d log(d/delta) + log det(W_K W_k^-1))

    An unsatisfied burn-in is reported, never raised; a numerically
    singular small-ball Gramian flags the certificate invalid instead.
    """
    constants = constants or BoundConstants()
    _check_bound_args(K, k, delta)
    Atilde = _atilde_of(aug)
    d = Atilde.shape[0]
    kstar = constants.small_ball_index(k)

    series = gramian_series(Atilde, K)
    W_k = _symmetrize(series[kstar])
    W_K = _symmetrize(series[K])

    lam_min = float(np.linalg.eigvalsh(W_k)[0])
    valid = lam_min > 0.0
    if valid:
        try:
            logdet_ratio = _logdet_psd(W_K) - _logdet_psd(W_k)
        except np.linalg.LinAlgError:
            valid = False
    if not valid:
        log.warning("small-ball Gramian numerically singular; certificate invalid")
        return BoundCertificate(K=K, k=k, delta=delta, C_const=constants.C_const,
                                c_const=constants.c_const, lambda_min_Wk=lam_min,
                                logdet_ratio=float("nan"), bound_value=float("nan"),
                                burn_in_satisfied=False, variant="autonomous",
                                sigma=sigma, d=d,
                                gramian_index=constants.gramian_index, valid=False)

    term = d * np.log(d / delta) + logdet_ratio
    C_eff = constants.C_const * sigma if constants.sigma_scaling == "sigma" \
        else constants.C_const
    bound = float(C_eff / np.sqrt(K * lam_min) * np.sqrt(term))
    burn_in = bool(K / k >= constants.c_const * term)
    return BoundCertificate(K=K, k=k, delta=delta, C_const=constants.C_const,
                            c_const=constants.c_const, lambda_min_Wk=lam_min,
                            logdet_ratio=float(logdet_ratio), bound_value=bound,
                            burn_in_satisfied=burn_in, variant="autonomous",
                            sigma=sigma, d=d, gramian_index=constants.gramian_index,
                            valid=True)


def evaluate_bound_with_inputs(aug: AugmentedSystem, K: int, k: int, delta: float,
                               sigma: float, sigma_u: float,
                               constants: BoundConstants | None = None) -> BoundCertificate:
    """Input-excited variant mixing noise and input Gramians.

    With M_t = sigma^2 W_t + sigma_u^2 W_t^B:

    bound = C sigma^2 / sqrt(K * lambda_min(M_k))
            * sqrt(d log( tr(M_K) / (delta * lambda_min(M_k)) ))
    burn-in: K/k >= c d log( tr(M_K) / (delta * lambda_min(M_k)) )

    The C sigma^2 prefactor is kept exactly as the with-inputs statement
    prints it, dimensional tension with the autonomous variant included.
    """
    constants = constants or BoundConstants()
    _check_bound_args(K, k, delta)
    if sigma_u < 0.0:
        raise DomainError("sigma_u must be non-negative")
    if not isinstance(aug, AugmentedSystem) or aug.Btilde is None:
        raise ConfigError("with-inputs bound needs an AugmentedSystem with Btilde")
    Atilde = aug.Atilde
    d = Atilde.shape[0]
    kstar = constants.small_ball_index(k)

    noise = gramian_series(Atilde, K)
    inp = gramian_series(Atilde, K, kind="input", Btilde=aug.Btilde)
    M_k = _symmetrize(sigma ** 2 * noise[kstar] + sigma_u ** 2 * inp[kstar])
    M_K = _symmetrize(sigma ** 2 * noise[K] + sigma_u ** 2 * inp[K])

    lam_min = float(np.linalg.eigvalsh(M_k)[0])
    valid = lam_min > 0.0
    logdet_ratio = float("nan")
    if valid:
        try:
            logdet_ratio = _logdet_psd(M_K) - _logdet_psd(M_k)
        except np.linalg.LinAlgError:
            pass  # mixed Gramian can be PSD-singular even when lam_min rounds positive
    if not valid:
        log.warning("mixed small-ball Gramian numerically singular; certificate invalid")
        return BoundCertificate(K=K, k=k, delta=delta, C_const=constants.C_const,
                                c_const=constants.c_const, lambda_min_Wk=lam_min,
                                logdet_ratio=float("nan"), bound_value=float("nan"),
                                burn_in_satisfied=False, variant="with_inputs",
                                sigma=sigma, sigma_u=sigma_u, d=d,
                                gramian_index=constants.gramian_index, valid=False)

    arg = float(np.trace(M_K)) / (delta * lam_min)
    bound = float(constants.C_const * sigma ** 2 / np.sqrt(K * lam_min)
                  * np.sqrt(d * np.log(arg)))
    burn_in = bool(K / k >= constants.c_const * d * np.log(arg))
    return BoundCertificate(K=K, k=k, delta=delta, C_const=constants.C_const,
                            c_const=constants.c_const, lambda_min_Wk=lam_min,
                            logdet_ratio=logdet_ratio, bound_value=bound,
                            burn_in_satisfied=burn_in, variant="with_inputs",
                            sigma=sigma, sigma_u=sigma_u, d=d,
                            gramian_index=constants.gramian_index, valid=True)


@dataclass(frozen=True)
class CampaignRow:
    K: int
    k: int
    median_err: float
    p90_err: float
    bound: float
    coverage: float
    burn_in: bool
    failed: int = 0


@dataclass(frozen=True)
class CampaignResult:
    rows: tuple[CampaignRow, ...]
    warnings: tuple[str, ...]


def select_k(aug_or_matrix, K: int, delta: float,
             constants: BoundConstants | None = None) -> tuple[int, bool]:
    """Smallest k >= d whose burn-in condition holds; falls back to k = d.

    Larger k tightens the bound (the small-ball Gramian grows and the
    log-det gap shrinks), so the first admissible k gives the loosest
    certified choice and the scan stops there.
    """
    constants = constants or BoundConstants()
    Atilde = _atilde_of(aug_or_matrix)
    d = Atilde.shape[0]
    if K < d:
        return d, False
    series = gramian_series(Atilde, K)
    logdets = np.empty(K + 1)
    try:
        for t in range(1, K + 1):
            logdets[t] = _logdet_psd(_symmetrize(series[t]))
    except np.linalg.LinAlgError:
        # Gramians too ill-conditioned to factor (blown-up dynamics);
        # no k can be certified
        return d, False
    base = d * np.log(d / delta)
    for k in range(d, K + 1):
        kstar = constants.small_ball_index(k)
        term = base + logdets[K] - logdets[kstar]
        if K / k >= constants.c_const * term:
            return k, True
    return d, False


def monte_carlo_campaign(system: FracSystem, p: int, K_list, trials: int,
                         delta: float, constants: BoundConstants | None = None,
                         master_seed: int = 0, *, threads: int | None = None,
                         generator: str = "augmented", sigma_u: float = 0.0,
                         structured: bool = False, x0=None,
                         a0_convention: str = "derivation") -> CampaignResult:
    """Empirical error quantiles next to the certified bound, per horizon.

    Each trial simulates an independent trajectory (noise stream derived
    from (master_seed, trial index)), fits the companion matrix, and
    records its operator-norm error.  Results are reduced by trial index,
    so the table is identical under any worker count.

    Trajectories default to the truncated-memory generator: the bound
    certifies least squares on the companion realization, and full-memory
    data would fold the truncation bias into the statistical error.
    ``x0`` defaults to the all-ones vector so noiseless campaigns still
    excite the dynamics.
    """
    constants = constants or BoundConstants()
    K_list = [int(K) for K in K_list]
    if trials < 1:
        raise DomainError("trials must be at least 1")
    if not K_list:
        raise DomainError("K_list must not be empty")
    if generator not in ("augmented", "exact"):
        raise DomainError("generator must be 'augmented' or 'exact'")
    if not 0.0 < delta < 0.5:
        raise DomainError("delta must lie in (0, 1/2)")
    if sigma_u < 0.0:
        raise DomainError("sigma_u must be non-negative")

    aug = augment(system, p, a0_convention)
    d = aug.d
    for K in K_list:
        if K < d + 1:
            raise DomainError(f"horizon K={K} below d+1={d + 1}")

    warnings: list[str] = []
    rho = spectral_radius(aug.Atilde)
    if not rho.marginally_stable:
        warnings.append(
            f"hypothesis violation: spectral radius {rho.value:.6f} exceeds 1; "
            "the certificate assumptions do not hold")

    use_inputs = system.B is not None
    x0 = np.ones(system.n) if x0 is None else np.asarray(x0, dtype=float)
    workers = threads if threads is not None else (os.cpu_count() or 1)

    def run_trial(K: int, stream: int) -> float:
        u = gaussian_inputs(master_seed, K, system.m, sigma_u, stream) \
            if use_inputs else None
        if generator == "augmented":
            traj = simulate_augmented(aug, x0, K, master_seed, inputs=u,
                                      sigma=system.sigma, stream=stream)
        else:
            traj = simulate_exact(system, x0, K, master_seed, inputs=u,
                                  stream=stream, a0_convention=a0_convention)
        if use_inputs:
            est = ols_fit_with_inputs(traj, p, aug.Btilde)
        else:
            est = ols_fit(traj, p, structured=structured)
        return operator_norm_error(est, aug)

    rows = []
    for K_index, K in enumerate(K_list):
        k, burn_in = select_k(aug, K, delta, constants)
        if use_inputs:
            cert = evaluate_bound_with_inputs(aug, K, k, delta, system.sigma,
                                              sigma_u, constants)
        else:
            cert = evaluate_bound(aug, K, k, delta, system.sigma, constants)

        streams = [K_index * trials + t for t in range(trials)]
        results: list[float | None] = [None] * trials
        if workers > 1 and trials > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(run_trial, K, s) for s in streams]
                for i, fut in enumerate(futures):
                    try:
                        results[i] = fut.result()
                    except (FodsidError, np.linalg.LinAlgError) as exc:
                        log.warning("trial %d at K=%d failed: %s", i, K, exc)
        else:
            for i, s in enumerate(streams):
                try:
                    results[i] = run_trial(K, s)
                except (FodsidError, np.linalg.LinAlgError) as exc:
                    log.warning("trial %d at K=%d failed: %s", i, K, exc)

        errs = np.array([r for r in results if r is not None])
        failed = trials - errs.size
        if failed:
            warnings.append(f"K={K}: {failed} of {trials} trial(s) failed")
        if errs.size == 0:
            rows.append(CampaignRow(K=K, k=k, median_err=float("nan"),
                                    p90_err=float("nan"), bound=cert.bound_value,
                                    coverage=float("nan"), burn_in=burn_in,
                                    failed=failed))
            continue
        rows.append(CampaignRow(
            K=K, k=k,
            median_err=float(np.median(errs)),
            p90_err=float(np.percentile(errs, 90)),
            bound=cert.bound_value,
            coverage=float(np.mean(errs <= cert.bound_value)),
            burn_in=burn_in,
            failed=failed,
        ))
    return CampaignResult(rows=tuple(rows), warnings=tuple(warnings))
