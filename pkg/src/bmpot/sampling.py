"""Exact bivariate sampling by inversion of the conditional distribution of U2 given U1."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .copula import Copula

_TINY = np.nextafter(0.0, 1.0)


@dataclass(frozen=True)
class RngStream:
    """Counter-based stream keyed by (seed, stream_id).

    The Philox key is the 128-bit integer ``stream_id * 2**64 + seed``, so
    distinct replication indices never share key material and each stream
    is reproducible on its own, in any order and in any process.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not 0 <= v < 2**64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer")

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=(self.stream_id << 64) | self.seed))

    def uniforms(self, shape) -> np.ndarray:
        """Uniforms on the open interval (0, 1)."""
        u = self.generator().random(shape)
        return np.where(u == 0.0, _TINY, u)


@dataclass
class SampleMatrix:
    data: np.ndarray
    model_id: str = ""
    seed: int = 0
    stream_id: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2 or self.data.shape[1] != 2:
            raise ValueError("sample must be an n x 2 array")

    @property
    def n(self) -> int:
        return self.data.shape[0]


class NonMonotoneConditional(RuntimeError):
    pass


def invert_conditional(C: Copula, u1, v, tol: float = 1e-12):
    """Generalized inverse inf{u2 : C(u2 | u1) >= v} by vectorised bisection.

    Returns the midpoint of the final bracket, which is strictly inside (0, 1).
    """
    u1, v = np.broadcast_arrays(np.asarray(u1, dtype=float), np.asarray(v, dtype=float))
    if np.any((v <= 0) | (v >= 1)) or np.any((u1 <= 0) | (u1 >= 1)):
        raise ValueError("u1 and v must lie in (0, 1)")
    if not 0 < tol < 1:
        raise ValueError("tol must lie in (0, 1)")
    lo = np.zeros(u1.shape)
    hi = np.ones(u1.shape)
    f_lo = np.zeros(u1.shape)
    f_hi = np.ones(u1.shape)
    steps = min(60, math.ceil(math.log2(1.0 / tol)))
    cond = C.conditional_cdf_given(u1)
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        f = cond(mid)
        if np.any(f < f_lo - 1e-12) or np.any(f > f_hi + 1e-12):
            raise NonMonotoneConditional(f"conditional cdf of {C.id} is not monotone")
        up = f >= v
        hi = np.where(up, mid, hi)
        f_hi = np.where(up, f, f_hi)
        lo = np.where(up, lo, mid)
        f_lo = np.where(up, f_lo, f)
    return 0.5 * (lo + hi)


def sample_bivariate(C: Copula, n: int, rng: RngStream, tol: float = 1e-12) -> SampleMatrix:
    """n i.i.d. pairs with copula C: U1 uniform, U2 = conditional quantile at an independent V."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if C.dim != 2:
        raise ValueError("sampling is bivariate only")
    w = rng.uniforms((n, 2))
    u2 = invert_conditional(C, w[:, 0], w[:, 1], tol)
    return SampleMatrix(np.column_stack([w[:, 0], u2]), C.id, rng.seed, rng.stream_id)
