"""POT and block-maxima estimators of the Pickands dependence function."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .copula import Copula, EvCopula

RANK_CONVENTIONS = ("k", "k1")


class TiedDataError(ValueError):
    """Raised when a column contains ties; the estimators assume continuous margins."""


def _matrix(data):
    data = getattr(data, "data", data)
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError("expected an n x 2 sample")
    return data


def column_ranks(data) -> np.ndarray:
    """Ranks 1..n per column; ties are rejected."""
    data = _matrix(data)
    order = np.argsort(data, axis=0, kind="stable")
    sorted_cols = np.take_along_axis(data, order, axis=0)
    if np.any(np.diff(sorted_cols, axis=0) == 0):
        raise TiedDataError("tie within a column")
    ranks = np.empty_like(order)
    n = data.shape[0]
    rows = np.arange(1, n + 1)
    for j in range(2):
        ranks[order[:, j], j] = rows
    return ranks


@dataclass(frozen=True)
class BlockMaximaSet:
    r: int
    maxima: np.ndarray

    @property
    def k(self) -> int:
        return self.maxima.shape[0]


def pot_pickands(data, k, t, ranks=None):
    """Empirical stdf at (1 - t, t): (1/k) #{i : R_i1 > n - (1-t)k or R_i2 > n - tk}.

    ``k`` may be an integer or an array of thresholds; precomputed ranks can
    be passed to share work across calls.
    """
    if ranks is None:
        ranks = column_ranks(data)
    n = ranks.shape[0]
    t = float(t)
    if not 0 <= t <= 1:
        raise ValueError("t must lie in [0, 1]")
    ks = np.atleast_1d(np.asarray(k))
    if np.any(ks < 1) or np.any(ks > n) or np.any(ks != np.floor(ks)):
        raise ValueError("k must be an integer in [1, n]")
    ks = ks.astype(float)
    hit = (ranks[None, :, 0] > n - (1.0 - t) * ks[:, None]) | (ranks[None, :, 1] > n - t * ks[:, None])
    out = hit.sum(axis=1) / ks
    return out[0] if np.ndim(k) == 0 else out


def pre_asymptotic_pickands(C: Copula, n, k, t):
    """A_n(t) = [1 - C(1 - (1-t)k/n, 1 - tk/n)] / (k/n)."""
    frac = k / n
    if not 0 < frac <= 1:
        raise ValueError("k/n must lie in (0, 1]")
    return C.one_minus_cdf_scaled(np.array([1.0 - t, t]), 1.0 / frac)


def block_maxima(data, r: int) -> BlockMaximaSet:
    """Componentwise maxima of the floor(n/r) disjoint blocks; the tail remainder is dropped."""
    data = _matrix(data)
    n = data.shape[0]
    if r != int(r) or not 1 <= r <= n:
        raise ValueError("block size r must be an integer in [1, n]")
    r = int(r)
    k = n // r
    return BlockMaximaSet(r, data[: k * r].reshape(k, r, 2).max(axis=1))


def madogram_pickands(maxima: BlockMaximaSet, t, rank_convention: str = "k", clamp: bool = False):
    """Madogram estimator nu/(1 - nu) with nu = mean max(U1^(1/(1-t)), U2^(1/t))."""
    if rank_convention not in RANK_CONVENTIONS:
        raise ValueError(f"rank convention must be one of {RANK_CONVENTIONS}")
    k = maxima.k
    if k < 2:
        raise ValueError("madogram needs at least two blocks")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any((t <= 0) | (t >= 1)):
        raise ValueError("t must lie in (0, 1)")
    ranks = column_ranks(maxima.maxima)
    u = ranks / (k if rank_convention == "k" else k + 1.0)
    nu = np.maximum(u[None, :, 0] ** (1.0 / (1.0 - t[:, None])), u[None, :, 1] ** (1.0 / t[:, None])).mean(axis=1)
    if np.any(nu >= 1):
        raise ValueError("degenerate madogram (nu = 1)")
    est = nu / (1.0 - nu)
    if clamp:
        est = np.clip(est, np.maximum(t, 1.0 - t), 1.0)
    return est if est.size > 1 else est[0]


def madogram_population(cinf: EvCopula, t, tol: float = 1e-10):
    """(nu(t), A(t)) with nu(t) = 1 - int_0^1 C_inf(y^(1-t), y^t) dy, by adaptive quadrature."""
    t = float(t)
    if not 0 < t < 1:
        raise ValueError("t must lie in (0, 1)")

    def integrand(y):
        return float(cinf.cdf(np.array([y ** (1.0 - t), y**t])))

    val, err = integrate.quad(integrand, 0.0, 1.0, epsabs=tol, epsrel=1e-12, limit=200)
    if err > 10 * tol:
        raise RuntimeError(f"quadrature did not converge (error estimate {err:g})")
    nu = 1.0 - val
    return nu, nu / (1.0 - nu)
