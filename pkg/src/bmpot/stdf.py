"""Stable tail dependence functions, Pickands functions and the Gamma functional.

Points are passed as arrays whose last axis has length ``dim``.
"""
from __future__ import annotations

import numpy as np


def _as_points(x, dim):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != dim:
        raise ValueError(f"expected points with last axis {dim}, got shape {x.shape}")
    if np.any(x < 0):
        raise ValueError("stdf arguments must be nonnegative")
    return x


class StableTailDepFn:
    dim: int = 2
    id: str = ""

    def __repr__(self):
        return f"{type(self).__name__}({self.id!r})"

    def __eq__(self, other):
        return type(self) is type(other) and self.id == other.id and self.dim == other.dim

    def __hash__(self):
        return hash((self.id, self.dim))

    def eval(self, x):
        raise NotImplementedError

    def partial(self, j: int, x):
        """dL/dx_j; at x_j = 0 the right-sided limsup convention applies."""
        raise NotImplementedError

    def __call__(self, x):
        return self.eval(x)

    def pickands(self, t):
        return pickands(self, t)

    def gamma(self, x):
        return gamma_fn(self, x)


class Logistic(StableTailDepFn):
    """L(x) = (sum_j x_j**theta)**(1/theta), theta >= 1."""

    def __init__(self, theta: float, dim: int = 2):
        if not theta >= 1:
            raise ValueError("logistic theta must be >= 1")
        self.theta = float(theta)
        self.dim = dim
        self.id = f"logistic:theta={self.theta!r}"

    def eval(self, x):
        x = _as_points(x, self.dim)
        if self.theta == 1.0:
            return x.sum(axis=-1)
        top = x.max(axis=-1)
        safe = np.where(top > 0, top, 1.0)
        scaled = (x / safe[..., None]) ** self.theta
        out = top * scaled.sum(axis=-1) ** (1.0 / self.theta)
        return np.where(np.isinf(top), np.inf, out)

    def partial(self, j, x):
        x = _as_points(x, self.dim)
        if self.theta == 1.0:
            return np.ones(x.shape[:-1])
        lval = self.eval(x)
        safe = np.where(lval > 0, lval, 1.0)
        return np.where(lval > 0, (x[..., j] / safe) ** (self.theta - 1.0), 0.0)


class MaxStdf(StableTailDepFn):
    """Perfect tail dependence, L(x) = max_j x_j."""

    def __init__(self, dim: int = 2):
        self.dim = dim
        self.id = "max"

    def eval(self, x):
        return _as_points(x, self.dim).max(axis=-1)

    def partial(self, j, x):
        # ties resolved towards 1 so that conditional cdfs are right-continuous
        x = _as_points(x, self.dim)
        return (x[..., j] >= x.max(axis=-1)).astype(float)


class SumStdf(StableTailDepFn):
    """Tail independence, L(x) = sum_j x_j."""

    def __init__(self, dim: int = 2):
        self.dim = dim
        self.id = "sum"

    def eval(self, x):
        return _as_points(x, self.dim).sum(axis=-1)

    def partial(self, j, x):
        return np.ones(_as_points(x, self.dim).shape[:-1])


class PowerStdf(StableTailDepFn):
    """x -> L0(x**(1/alpha))**alpha, the attractor stdf of an Archimax copula."""

    def __init__(self, l0: StableTailDepFn, alpha: float):
        if not 0 < alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        self.l0 = l0
        self.alpha = float(alpha)
        self.dim = l0.dim
        self.id = f"power:alpha={self.alpha!r}:{l0.id}"

    def eval(self, x):
        x = _as_points(x, self.dim)
        return self.l0.eval(x ** (1.0 / self.alpha)) ** self.alpha

    def partial(self, j, x):
        x = _as_points(x, self.dim)
        a = self.alpha
        z = x ** (1.0 / a)
        base = self.l0.eval(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = base ** (a - 1.0) * self.l0.partial(j, z) * x[..., j] ** (1.0 / a - 1.0)
        return np.where(np.isfinite(val), val, 0.0)


def attractor_stdf(l0: StableTailDepFn, alpha: float) -> StableTailDepFn:
    """Stdf of exp{-L0^alpha((-log u)^(1/alpha))}, simplified where a closed family exists."""
    if alpha == 1.0:
        return l0
    if isinstance(l0, SumStdf):
        return Logistic(1.0 / alpha, l0.dim)
    if isinstance(l0, Logistic):
        return Logistic(l0.theta / alpha, l0.dim)
    if isinstance(l0, MaxStdf):
        return l0
    return PowerStdf(l0, alpha)


def parse_stdf(spec: str, dim: int = 2) -> StableTailDepFn:
    if spec == "max":
        return MaxStdf(dim)
    if spec == "sum":
        return SumStdf(dim)
    name, _, rest = spec.partition(":")
    if name == "logistic":
        key, sep, value = rest.partition("=")
        if key == "theta" and sep:
            return Logistic(float(value), dim)
    raise ValueError(f"unknown stdf id {spec!r}; available: logistic:theta=<f>, max, sum")


def pickands(l: StableTailDepFn, t):
    """A(t) = L(1 - t, t)."""
    if l.dim != 2:
        raise ValueError("Pickands function needs a bivariate stdf")
    t = np.asarray(t, dtype=float)
    if np.any((t < 0) | (t > 1)):
        raise ValueError("t must lie in [0, 1]")
    return l.eval(np.stack([1.0 - t, t], axis=-1))


def gamma_fn(l: StableTailDepFn, x):
    """Gamma(x) = sum over positive coordinates of x_j**2 * dL/dx_j(x)."""
    x = _as_points(x, l.dim)
    total = np.zeros(x.shape[:-1])
    for j in range(l.dim):
        xj = x[..., j]
        total = total + np.where(xj > 0, xj**2 * l.partial(j, x), 0.0)
    return total


def gamma_difference_quotient(l: StableTailDepFn, x, r, side: int = 1):
    """r{L(x + x^2/r) - L(x)} (side 1) or r{L(x) - L(x - x^2/r)} (side 2)."""
    if side not in (1, 2):
        raise ValueError("side must be 1 or 2")
    x = _as_points(x, l.dim)
    r = float(r)
    if r < 1:
        raise ValueError("r must be >= 1")
    step = x**2 / r
    if side == 1:
        return r * (l.eval(x + step) - l.eval(x))
    return r * (l.eval(x) - l.eval(np.maximum(x - step, 0.0)))
