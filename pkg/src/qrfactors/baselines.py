"""Spectral baselines: lag-covariance EVD and flat-covariance PCA.

Both produce FactorModelFit records shaped like the pivoted-QR fitter's
so downstream forecasting and Monte-Carlo code treats all three methods
uniformly. The EVD route eigendecomposes the accumulated outer products
of the lag covariances and picks the rank by the eigenvalue-ratio rule;
the PCA route eigendecomposes the lag-0 covariance and picks the rank by
an information criterion with a (K+N)/(KN)-type penalty (Bai & Ng 2002).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covariance import sample_autocov
from .factor_rrqr import FactorModelFit, _DEFAULT_RANK_CAP
from .tsdata import TimeSeries, demean


@dataclass(frozen=True)
class EvdSpectrum:
    """Descending eigenpairs of the lag-covariance outer-product sum.

    ratios[i-1] = eigenvalues[i-1] / eigenvalues[i]; a zero denominator
    under a nonzero numerator gives inf (an exact rank edge), and 0/0
    gives 0 so dead tails never win the argmax.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    ratios: np.ndarray

    def __post_init__(self):
        for name in ("eigenvalues", "eigenvectors", "ratios"):
            arr = np.array(getattr(self, name), dtype=float, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def _sym_eig_desc(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Descending eigendecomposition with PSD repair and fixed vector signs.

    Eigenvalues below the solver's noise floor (1e-12 of the largest,
    negatives included) are floating-point leakage from a
    PSD-by-construction matrix; they clamp to 0 so that exactly singular
    input yields exact zeros rather than round-off dust. Each eigenvector
    is flipped so its largest-magnitude entry is positive, making the
    decomposition reproducible across LAPACK builds.
    """
    lam, u = np.linalg.eigh((s + s.T) / 2.0)
    lam = lam[::-1].copy()
    u = u[:, ::-1].copy()
    lam[lam < 1e-12 * max(lam.max(), 0.0)] = 0.0
    for j in range(u.shape[1]):
        lead = int(np.argmax(np.abs(u[:, j])))
        if u[lead, j] < 0.0:
            u[:, j] = -u[:, j]
    return lam, u


def _eig_ratios(lam: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = lam[:-1] / lam[1:]
    return np.nan_to_num(ratios, nan=0.0, posinf=np.inf)


def evd_s_matrix(ts: TimeSeries, lag_lo: int = 1, lag_hi: int = 2) -> np.ndarray:
    """Sum over the lag range of autocov(l) @ autocov(l).T, symmetrized.

    Equals the Gram matrix of the horizontally stacked lag covariances,
    so its eigenvalues are the squared singular values the pivoted-QR
    route works from.
    """
    k = ts.K
    s = np.zeros((k, k))
    for lag in range(lag_lo, lag_hi + 1):
        cov = sample_autocov(ts, lag).matrix
        s += cov @ cov.T
    return (s + s.T) / 2.0


def evd_spectrum(ts: TimeSeries, lag_lo: int = 1, lag_hi: int = 2) -> EvdSpectrum:
    """Eigendecomposition of evd_s_matrix with the ratio curve attached."""
    lam, u = _sym_eig_desc(evd_s_matrix(ts, lag_lo, lag_hi))
    return EvdSpectrum(eigenvalues=lam, eigenvectors=u, ratios=_eig_ratios(lam))


def eigen_ratio_order(eigenvalues, p_cap: int) -> int:
    """Rank = argmax of consecutive eigenvalue ratios over 1..p_cap."""
    lam = np.asarray(eigenvalues, dtype=float)
    if not 1 <= p_cap <= lam.size - 1:
        raise ValueError(f"p_cap must be in [1, {lam.size - 1}], got {p_cap}")
    ratios = _eig_ratios(lam)[:p_cap]
    return int(np.argmax(ratios)) + 1


def fit_evd(ts: TimeSeries, lag_lo: int = 1, lag_hi: int = 2,
            p_override: int | None = None,
            p_cap: int | None = None) -> FactorModelFit:
    """Fit the factor model from the top eigenvectors of evd_s_matrix.

    The rank comes from eigen_ratio_order unless p_override pins it;
    the cap defaults to the same value the pivoted-QR scan uses so the
    two methods search the same range.
    """
    spectrum = evd_spectrum(ts, lag_lo, lag_hi)
    if p_override is not None:
        if not 1 <= p_override <= ts.K:
            raise ValueError(f"p_override must be in [1, {ts.K}], got {p_override}")
        p_hat = int(p_override)
    else:
        cap = min(ts.K - 1, _DEFAULT_RANK_CAP) if p_cap is None else p_cap
        p_hat = eigen_ratio_order(spectrum.eigenvalues, cap)
    q_hat = spectrum.eigenvectors[:, :p_hat]
    centered = demean(ts)
    lam = spectrum.eigenvalues
    diagnostics = {
        "lambda_top": float(lam[0]),
        "lambda_tail": float(lam[p_hat]) if p_hat < lam.size else 0.0,
    }
    return FactorModelFit(method="EVD", p_hat=p_hat, q_hat=q_hat,
                          factors=q_hat.T @ centered.values,
                          diagnostics=diagnostics)


def _lag0_spectrum(ts: TimeSeries) -> tuple[np.ndarray, np.ndarray]:
    return _sym_eig_desc(sample_autocov(ts, 0).matrix)


def _ic_from_eigs(lam: np.ndarray, p: int, k: int, n: int) -> float:
    """Information criterion at rank p from lag-0 eigenvalues.

    The mean squared residual of the best rank-p projection is the mean
    of the trailing eigenvalues; a resolved-to-zero residual makes the
    log -inf, a distinguished "perfect fit" value that argmin treats as
    an automatic winner.
    """
    v = float(lam[p:].sum()) / k
    penalty = p * ((k + n) / (k * n)) * math.log(k * n / (k + n))
    if v <= 0.0:
        return float("-inf")
    return math.log(v) + penalty


def ic_p(ts: TimeSeries, p: int) -> float:
    """Penalized log-residual of the rank-p PCA fit."""
    if not 1 <= p <= min(ts.K, ts.N):
        raise ValueError(f"p must be in [1, {min(ts.K, ts.N)}], got {p}")
    lam, _ = _lag0_spectrum(ts)
    return _ic_from_eigs(lam, p, ts.K, ts.N)


def fit_pca(ts: TimeSeries, p_max: int | None = None,
            p_override: int | None = None) -> FactorModelFit:
    """PCA factor fit with information-criterion rank selection.

    Eigendecomposes the lag-0 covariance, picks the rank minimizing the
    information criterion over 1..p_max (lowest rank on ties), and takes
    the top eigenvectors as loadings. The sigma2_hat diagnostic is the
    plain sum of the trailing eigenvalues (a total, not a per-coordinate
    average).
    """
    limit = min(ts.K, ts.N)
    if p_max is None:
        # Stay below min(K, N): at the full rank the residual is exactly
        # zero and its -inf criterion would win unconditionally.
        p_max = min(limit - 1, 40)
    if not 1 <= p_max <= limit:
        raise ValueError(f"p_max must be in [1, {limit}], got {p_max}")
    lam, u = _lag0_spectrum(ts)
    if p_override is not None:
        if not 1 <= p_override <= limit:
            raise ValueError(f"p_override must be in [1, {limit}], got {p_override}")
        p_hat = int(p_override)
        ic_at_p = _ic_from_eigs(lam, p_hat, ts.K, ts.N)
    else:
        scores = [_ic_from_eigs(lam, p, ts.K, ts.N) for p in range(1, p_max + 1)]
        p_hat = int(np.argmin(scores)) + 1
        ic_at_p = scores[p_hat - 1]
    q_hat = u[:, :p_hat]
    centered = demean(ts)
    diagnostics = {
        "sigma2_hat": float(lam[p_hat:].sum()),
        "ic": ic_at_p,
    }
    return FactorModelFit(method="PCA", p_hat=p_hat, q_hat=q_hat,
                          factors=q_hat.T @ centered.values,
                          diagnostics=diagnostics)
