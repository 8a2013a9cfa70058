"""Windowed least-squares forecasting of multichannel time series.

The series is cut into consecutive disjoint windows; each window gets its
own companion-matrix fit (one optimization problem per window) and supplies
one-step-ahead predictions for its interior.  Forecast quality is judged
against the persistence baseline xhat[k+1] = x[k].

The fractional orders of real recordings are never known; they are carried
through as a declared modeling knob and recorded with the results, but the
unconstrained companion fit does not consume them.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DomainError
from .ident import OlsEstimate, build_regressors, fit_states

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WindowedForecast:
    """Per-window fits plus the aligned one-step-ahead predictions."""

    window_size: int
    p: int
    channels: int
    alpha: np.ndarray
    indices: np.ndarray        # absolute sample index of each prediction
    predictions: np.ndarray    # (len(indices), channels)
    per_window_estimates: tuple[OlsEstimate, ...]
    metrics: dict

    @property
    def num_windows(self) -> int:
        return self.metrics["num_windows"]


def load_series(path, *, delimiter: str = ",", channel_columns=None,
                max_rows: int | None = None) -> tuple[np.ndarray, list[str]]:
    """Read a delimited multichannel series into a T x n array.

    The first row is treated as a header whenever any of its cells fails to
    parse as a number; otherwise columns are named col0..col{n-1}.
    ``channel_columns`` selects columns by header name or integer position.
    Rows containing NaN/inf (or non-numeric cells) abort the load with an
    error report indexed by data row.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh, delimiter=delimiter) if row]
    except OSError as exc:
        raise DataError(f"cannot read series file {path}: {exc}") from exc
    if not rows:
        raise DataError(f"series file {path} is empty")

    def _numeric(cell: str) -> bool:
        try:
            float(cell)
        except ValueError:
            return False
        return True

    if all(_numeric(c) for c in rows[0]):
        names = [f"col{i}" for i in range(len(rows[0]))]
        data_rows = rows
    else:
        names = [c.strip() for c in rows[0]]
        data_rows = rows[1:]
    if not data_rows:
        raise DataError(f"series file {path} has a header but no data rows")

    if channel_columns is None:
        cols = list(range(len(names)))
    else:
        cols = []
        for c in channel_columns:
            if isinstance(c, int):
                if not 0 <= c < len(names):
                    raise DataError(f"column index {c} out of range in {path}")
                cols.append(c)
            else:
                if c not in names:
                    raise DataError(f"column {c!r} not found in {path}; "
                                    f"available: {names}")
                cols.append(names.index(c))

    if max_rows is not None:
        data_rows = data_rows[:max_rows]

    values = np.empty((len(data_rows), len(cols)))
    bad: list[str] = []
    for i, row in enumerate(data_rows):
        for out_j, j in enumerate(cols):
            if j >= len(row):
                bad.append(f"row {i}: missing column {names[j]!r}")
                break
            try:
                v = float(row[j])
            except ValueError:
                bad.append(f"row {i}: non-numeric value {row[j]!r} in column {names[j]!r}")
                break
            if not math.isfinite(v):
                bad.append(f"row {i}: non-finite value in column {names[j]!r}")
                break
            values[i, out_j] = v
    if bad:
        shown = "; ".join(bad[:10])
        more = f" (+{len(bad) - 10} more)" if len(bad) > 10 else ""
        raise DataError(f"invalid rows in {path}: {shown}{more}")
    return values, [names[j] for j in cols]


def _check_alpha(alpha, channels: int) -> np.ndarray:
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if alpha.size == 1:
        alpha = np.full(channels, float(alpha[0]))
    if alpha.shape != (channels,):
        raise DomainError(f"alpha must be scalar or length {channels}, got {alpha.shape}")
    if np.any(alpha <= 0.0):
        raise DomainError("every fractional order must be positive")
    return alpha


def windowed_fit_predict(series: np.ndarray, alpha, p: int, window_size: int,
                         *, sliding: bool = False, zscore: bool = False,
                         structured: bool = False, drop_initial: bool = False,
                         threads: int | None = None) -> WindowedForecast:
    """Fit one least-squares problem per window and predict one step ahead.

    Default windows are disjoint and consecutive, covering the longest
    prefix an integer number of windows fits in; each sample belongs to
    exactly one fit, and predictions inside a window never see data from
    any other window.  ``sliding`` switches to the strictly causal variant:
    a fit on every length-``window_size`` slice predicting only the sample
    right after it.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        series = series[:, None]
    T, n = series.shape
    if window_size > T:
        raise DomainError(f"window size {window_size} exceeds series length {T}")
    if window_size < p + 2:
        raise DomainError(f"window size {window_size} too small for p={p}; "
                          "need at least p + 2 samples")
    alpha = _check_alpha(alpha, n)

    if zscore:
        mu = series.mean(axis=0)
        sd = series.std(axis=0)
        sd = np.where(sd > 0, sd, 1.0)
        work = (series - mu) / sd
    else:
        mu = np.zeros(n)
        sd = np.ones(n)
        work = series

    if sliding:
        starts = list(range(0, T - window_size))
        num_windows = len(starts)
        if num_windows == 0:
            raise DomainError("series too short for a sliding one-step forecast")
    else:
        num_windows = T // window_size
        starts = [w * window_size for w in range(num_windows)]

    def fit_window(s: int) -> OlsEstimate:
        return fit_states(work[s:s + window_size], p, structured=structured,
                          drop_initial=drop_initial)

    if threads is not None and threads > 1 and num_windows > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            estimates = list(pool.map(fit_window, starts))
    else:
        estimates = [fit_window(s) for s in starts]

    idx_parts = []
    pred_parts = []
    for s, est in zip(starts, estimates):
        win = work[s:s + window_size]
        if sliding:
            # only the first out-of-window step is a true forecast
            idx_parts.append(np.array([s + window_size]))
            xlast = np.zeros(est.d)
            for b in range(p):
                xlast[b * n:(b + 1) * n] = win[window_size - 1 - b]
            pred_parts.append((est.Atilde_hat @ xlast)[None, :n])
        else:
            X, _, _ = build_regressors(win, p, drop_initial=False)
            idx_parts.append(np.arange(s + 1, s + window_size))
            pred_parts.append((X @ est.Atilde_hat.T)[:, :n])

    indices = np.concatenate(idx_parts)
    predictions = np.concatenate(pred_parts, axis=0) * sd + mu
    observed = series[indices]
    sq = (predictions - observed) ** 2
    metrics = {
        "rmse_total": float(np.sqrt(sq.mean())),
        "rmse_per_channel": np.sqrt(sq.mean(axis=0)).tolist(),
        "num_windows": num_windows,
    }
    if any(est.degenerate for est in estimates):
        log.warning("%d of %d window fits were rank-deficient",
                    sum(est.degenerate for est in estimates), num_windows)
    return WindowedForecast(window_size=window_size, p=p, channels=n, alpha=alpha,
                            indices=indices, predictions=predictions,
                            per_window_estimates=tuple(estimates), metrics=metrics)


def persistence_rmse(series: np.ndarray, window_size: int) -> float:
    """RMSE of the xhat[k+1] = x[k] baseline over the same predicted steps."""
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        series = series[:, None]
    T = series.shape[0]
    num_windows = T // window_size
    if num_windows == 0:
        raise DomainError(f"window size {window_size} exceeds series length {T}")
    idx = np.concatenate([np.arange(w * window_size + 1, (w + 1) * window_size)
                          for w in range(num_windows)])
    sq = (series[idx - 1] - series[idx]) ** 2
    return float(np.sqrt(sq.mean()))


def window_size_sweep(series: np.ndarray, alpha, p: int | None, window_sizes,
                      **kwargs) -> list[tuple[int, float]]:
    """One windowed fit-predict run per window size; failures record NaN.

    When ``p`` is None each size uses the largest memory the window
    supports, p = window_size - 2.
    """
    window_sizes = [int(w) for w in window_sizes]
    if not window_sizes:
        raise DomainError("window_sizes must not be empty")
    rows = []
    for ws in window_sizes:
        p_ws = (ws - 2) if p is None else p
        try:
            fc = windowed_fit_predict(series, alpha, p_ws, ws, **kwargs)
            rows.append((ws, fc.metrics["rmse_total"]))
        except (DomainError, DataError) as exc:
            log.warning("window size %d failed: %s", ws, exc)
            rows.append((ws, float("nan")))
    return rows
