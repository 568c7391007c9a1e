"""Archimax copulas, extreme-value copulas and their tail functionals.

Deep-tail quantities (``one_minus_cdf_scaled`` and ``block_copula``) are
computed from the generators' survival forms; ``1 - C`` is never formed by
subtraction.
"""
from __future__ import annotations

import numpy as np

from .generators import ArchimedeanGenerator, Exponential, parse_generator
from .stdf import MaxStdf, StableTailDepFn, SumStdf, attractor_stdf, parse_stdf


def _unit_points(u, dim):
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != dim:
        raise ValueError(f"expected points with last axis {dim}, got shape {u.shape}")
    if np.any((u < 0) | (u > 1)):
        raise ValueError("copula arguments must lie in [0, 1]")
    return u


class Copula:
    dim = 2
    id = ""

    def __repr__(self):
        return f"{type(self).__name__}({self.id!r})"

    def cdf(self, u):
        raise NotImplementedError

    def one_minus_cdf_scaled(self, x, t):
        """t * (1 - C(1 - x/t))."""
        raise NotImplementedError

    def log_cdf_root(self, u, r):
        """log C(u**(1/r)), for u with positive coordinates."""
        raise NotImplementedError

    def block_copula(self, u, r):
        """C_r(u) = C(u**(1/r))**r for real r >= 1."""
        u = _unit_points(u, self.dim)
        if np.any(u <= 0):
            raise ValueError("block_copula needs u with positive coordinates")
        r = float(r)
        if r < 1:
            raise ValueError("block size r must be >= 1")
        log_root = self.log_cdf_root(u, r)
        if np.any(np.isneginf(log_root)):
            raise ValueError("block_copula undefined where C(u^(1/r)) = 0")
        return np.exp(r * log_root)

    def conditional_cdf(self, u1, u2):
        """dC/du1 evaluated at (u1, u2), a cdf in u2."""
        raise NotImplementedError

    def conditional_cdf_given(self, u1):
        """u2 -> conditional_cdf(u1, u2) with the u1-only work done once."""
        return lambda u2: self.conditional_cdf(u1, u2)

    def attractor(self) -> "EvCopula":
        raise NotImplementedError

    def _check_scaled(self, x, t):
        x = np.asarray(x, dtype=float)
        t = float(t)
        if t <= 0:
            raise ValueError("t must be positive")
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected points with last axis {self.dim}")
        if np.any(x < 0) or np.any(x > t):
            raise ValueError("need x/t in [0, 1]^d")
        return x, t


class ArchimaxCopula(Copula):
    """C(u) = psi(L0(psi^{-1}(u_1), ..., psi^{-1}(u_d)))."""

    def __init__(self, generator: ArchimedeanGenerator, l0: StableTailDepFn):
        self.generator = generator
        self.l0 = l0
        self.dim = l0.dim
        self.id = f"archimax:{generator.id}:{l0.id}"

    def cdf(self, u):
        u = _unit_points(u, self.dim)
        g = self.generator
        with np.errstate(invalid="ignore"):
            x = g.inverse(u)
            z = self.l0.eval(np.where(np.isinf(x), 0.0, x))
        out = g.eval(z)
        return np.where(np.any(u == 0, axis=-1), 0.0, out)

    def one_minus_cdf_scaled(self, x, t):
        x, t = self._check_scaled(x, t)
        y = self.generator.inverse_survival(x / t)
        return t * self.generator.one_minus_eval(self.l0.eval(y))

    def log_cdf_root(self, u, r):
        g = self.generator
        y = g.inverse_neglog(-np.log(u) / r)
        with np.errstate(divide="ignore"):
            return -g.neg_log_eval(self.l0.eval(y))

    def conditional_cdf(self, u1, u2):
        u1, u2 = np.broadcast_arrays(np.asarray(u1, dtype=float), np.asarray(u2, dtype=float))
        return self.conditional_cdf_given(u1)(u2)

    def conditional_cdf_given(self, u1):
        if self.dim != 2:
            raise ValueError("conditional_cdf is bivariate only")
        g = self.generator
        u1 = np.asarray(u1, dtype=float)
        if np.any((u1 <= 0) | (u1 >= 1)):
            raise ValueError("u1 must lie in (0, 1)")
        x1 = g.inverse(u1)
        den = g.deriv(x1)
        if np.any(den == 0):
            raise ValueError("psi' vanishes at psi^{-1}(u1); conditional cdf undefined")

        def cond(u2):
            u2 = np.asarray(u2, dtype=float)
            x2 = g.inverse(np.clip(u2, 0.0, 1.0))
            dead = (u2 <= 0) | np.isinf(x2)
            x = np.stack(np.broadcast_arrays(x1, np.where(dead, 0.0, x2)), axis=-1)
            val = g.deriv(self.l0.eval(x)) * self.l0.partial(0, x) / den
            val = np.where(dead, 0.0, val)
            return np.clip(np.where(u2 >= 1, 1.0, val), 0.0, 1.0)

        return cond

    def attractor(self):
        if isinstance(self.generator, Exponential):
            return EvCopula(self.l0)
        meta = self.generator.meta
        if meta is None:
            raise ValueError(f"generator {self.generator.id} carries no regular-variation index")
        return EvCopula(attractor_stdf(self.l0, meta.alpha))


class EvCopula(Copula):
    """C(u) = exp(-L(-log u_1, ..., -log u_d))."""

    def __init__(self, l: StableTailDepFn):
        self.l = l
        self.dim = l.dim
        self.id = f"ev:{l.id}"

    def cdf(self, u):
        u = _unit_points(u, self.dim)
        with np.errstate(divide="ignore"):
            x = -np.log(u)
        out = np.exp(-self.l.eval(np.where(np.isinf(x), 0.0, x)))
        return np.where(np.any(u == 0, axis=-1), 0.0, out)

    def one_minus_cdf_scaled(self, x, t):
        x, t = self._check_scaled(x, t)
        with np.errstate(divide="ignore"):
            y = -np.log1p(-x / t)
        if np.any(np.isinf(y)):
            val = np.where(np.any(np.isinf(y), axis=-1), 1.0,
                           -np.expm1(-self.l.eval(np.where(np.isinf(y), 0.0, y))))
            return t * val
        return -t * np.expm1(-self.l.eval(y))

    def log_cdf_root(self, u, r):
        return -self.l.eval(-np.log(u) / r)

    def block_copula(self, u, r):
        # max-stability: C_r = C exactly
        u = _unit_points(u, self.dim)
        if np.any(u <= 0):
            raise ValueError("block_copula needs u with positive coordinates")
        if float(r) < 1:
            raise ValueError("block size r must be >= 1")
        return self.cdf(u)

    def conditional_cdf(self, u1, u2):
        if self.dim != 2:
            raise ValueError("conditional_cdf is bivariate only")
        u1, u2 = np.broadcast_arrays(np.asarray(u1, dtype=float), np.asarray(u2, dtype=float))
        if np.any((u1 <= 0) | (u1 >= 1)):
            raise ValueError("u1 must lie in (0, 1)")
        dead = u2 <= 0
        with np.errstate(divide="ignore"):
            x2 = -np.log(np.where(dead, 1.0, u2))
        x = np.stack([-np.log(u1), x2], axis=-1)
        val = np.exp(-self.l.eval(x)) * self.l.partial(0, x) / u1
        return np.clip(np.where(dead, 0.0, val), 0.0, 1.0)

    def attractor(self):
        return self

    def pickands(self, t):
        return self.l.pickands(t)


class ProductCopula(Copula):
    """Exact independence copula."""

    id = "product"

    def __init__(self, dim: int = 2):
        self.dim = dim
        self.l = SumStdf(dim)

    def cdf(self, u):
        return _unit_points(u, self.dim).prod(axis=-1)

    def one_minus_cdf_scaled(self, x, t):
        x, t = self._check_scaled(x, t)
        with np.errstate(divide="ignore"):
            return -t * np.expm1(np.log1p(-x / t).sum(axis=-1))

    def log_cdf_root(self, u, r):
        return np.log(u).sum(axis=-1) / r

    def conditional_cdf(self, u1, u2):
        u1, u2 = np.broadcast_arrays(np.asarray(u1, dtype=float), np.asarray(u2, dtype=float))
        if np.any((u1 <= 0) | (u1 >= 1)):
            raise ValueError("u1 must lie in (0, 1)")
        return np.clip(u2, 0.0, 1.0).copy()

    def attractor(self):
        return self

    def pickands(self, t):
        return self.l.pickands(t)


def comonotone(dim: int = 2) -> EvCopula:
    """Upper Frechet bound min(u), as the extreme-value copula of L = max."""
    return EvCopula(MaxStdf(dim))


_STDF_HEADS = ("logistic:", "max", "sum")


def parse_copula(spec: str) -> Copula:
    """Model ids: ``product``, ``comonotone``, ``ev:<stdf>`` or ``archimax:<generator>:<stdf>``.

    A bare generator id is accepted as shorthand for ``archimax:<generator>:sum``.
    """
    if spec == "product":
        return ProductCopula()
    if spec == "comonotone":
        return comonotone()
    if spec.startswith("ev:"):
        return EvCopula(parse_stdf(spec[3:]))
    if spec.startswith("archimax:"):
        body = spec[len("archimax:"):]
        cut = max(body.rfind(":" + head) for head in _STDF_HEADS)
        if cut < 0:
            raise ValueError(f"model id {spec!r} lacks a trailing stdf id")
        return ArchimaxCopula(parse_generator(body[:cut]), parse_stdf(body[cut + 1:]))
    try:
        return ArchimaxCopula(parse_generator(spec), SumStdf())
    except ValueError:
        raise ValueError(
            f"unknown model id {spec!r}; available: product, comonotone, ev:<stdf>, "
            "archimax:<generator>:<stdf>, or a bare generator id "
            "(generators: opc:theta=<f>:beta=<f>, psi1, psi2, psi3, exp; "
            "stdfs: logistic:theta=<f>, max, sum)"
        ) from None
