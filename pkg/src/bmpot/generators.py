"""Archimedean generators and the tail functions kappa / lambda built on them.

Every generator exposes vectorised numpy evaluations plus survival forms
(``one_minus_eval``, ``neg_log_eval``) and matching inverses
(``inverse_survival``, ``inverse_neglog``) that never subtract two numbers
close to one.  The scalar ``*_mp`` methods repeat the survival forms in
mpmath arithmetic for the high-precision second-order diagnostics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import mpmath
import numpy as np

APPROACHES = ("pot", "bm")


def check_approach(m: str) -> str:
    if m not in APPROACHES:
        raise ValueError(f"approach must be one of {APPROACHES}, got {m!r}")
    return m


@dataclass(frozen=True)
class ApproachMeta:
    """Second-order constants of kappa_m for one approach.

    ``rate(t) = t**rho_prime`` is the auxiliary function B_m; the limit of
    ``(kappa(tx)/kappa(t) - x**-alpha) / rate(t)`` is
    ``c * x**-alpha * (x**rho_prime - 1) / rho_prime``.
    """

    rho_prime: float
    c: float

    def rate(self, t):
        return np.asarray(t, dtype=float) ** self.rho_prime


@dataclass(frozen=True)
class GeneratorSecondOrderMeta:
    alpha: float
    pot: Optional[ApproachMeta] = None
    bm: Optional[ApproachMeta] = None

    def approach(self, m: str) -> ApproachMeta:
        entry = getattr(self, check_approach(m))
        if entry is None:
            raise ValueError(f"no second-order expansion recorded for approach {m!r}")
        return entry


class ArchimedeanGenerator:
    """Base class.  Subclasses fill in the elementwise formulas."""

    id: str = ""
    support_end: float = math.inf
    meta: Optional[GeneratorSecondOrderMeta] = None

    def __repr__(self):
        return f"{type(self).__name__}({self.id!r})"

    def __eq__(self, other):
        return type(self) is type(other) and self.id == other.id

    def __hash__(self):
        return hash((type(self).__name__, self.id))

    # -- evaluations -------------------------------------------------------
    def eval(self, x):
        return 1.0 - self.one_minus_eval(x)

    def one_minus_eval(self, x):
        raise NotImplementedError

    def neg_log_eval(self, x):
        return -np.log1p(-self.one_minus_eval(x))

    def deriv(self, x):
        raise NotImplementedError

    # -- inverses ----------------------------------------------------------
    def inverse(self, u):
        u = np.asarray(u, dtype=float)
        if np.any((u < 0) | (u > 1)):
            raise ValueError("generator inverse needs u in [0, 1]")
        return self.inverse_survival(1.0 - u)

    def inverse_survival(self, s):
        """psi^{-1}(1 - s) for s in [0, 1]."""
        raise NotImplementedError

    def inverse_neglog(self, y):
        """psi^{-1}(exp(-y)) for y in [0, inf]."""
        return self.inverse_survival(-np.expm1(-np.asarray(y, dtype=float)))

    # -- multiprecision survival forms (scalar) ----------------------------
    def one_minus_eval_mp(self, x):
        raise NotImplementedError

    def neg_log_eval_mp(self, x):
        return -mpmath.log1p(-self.one_minus_eval_mp(x))


class Exponential(ArchimedeanGenerator):
    """psi(x) = exp(-x); the resulting Archimax copula is extreme-value."""

    id = "exp"
    meta = GeneratorSecondOrderMeta(alpha=1.0, pot=ApproachMeta(-1.0, 0.5), bm=None)

    def eval(self, x):
        return np.exp(-np.asarray(x, dtype=float))

    def one_minus_eval(self, x):
        return -np.expm1(-np.asarray(x, dtype=float))

    def neg_log_eval(self, x):
        return np.asarray(x, dtype=float) * 1.0

    def deriv(self, x):
        return -np.exp(-np.asarray(x, dtype=float))

    def inverse_survival(self, s):
        with np.errstate(divide="ignore"):
            return -np.log1p(-np.asarray(s, dtype=float))

    def inverse_neglog(self, y):
        return np.asarray(y, dtype=float) * 1.0

    def one_minus_eval_mp(self, x):
        return -mpmath.expm1(-mpmath.mpf(x))

    def neg_log_eval_mp(self, x):
        return mpmath.mpf(x)


class OuterPowerClayton(ArchimedeanGenerator):
    """psi(x) = (1 + theta * x**(1/beta))**(-1/theta), theta > 0, beta >= 1."""

    def __init__(self, theta: float, beta: float):
        if not theta > 0:
            raise ValueError("theta must be positive")
        if not beta >= 1:
            raise ValueError("beta must be >= 1")
        self.theta = float(theta)
        self.beta = float(beta)
        self.id = f"opc:theta={self.theta:g}:beta={self.beta:g}"
        a = 1.0 / self.beta
        self.meta = GeneratorSecondOrderMeta(
            alpha=a,
            pot=ApproachMeta(-a, a * (1.0 + self.theta) / 2.0),
            bm=ApproachMeta(-a, a * self.theta / 2.0),
        )

    def _inner(self, x):
        return np.log1p(self.theta * np.asarray(x, dtype=float) ** (1.0 / self.beta)) / self.theta

    def eval(self, x):
        return np.exp(-self._inner(x))

    def one_minus_eval(self, x):
        return -np.expm1(-self._inner(x))

    def neg_log_eval(self, x):
        return self._inner(x)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        s = x ** (1.0 / self.beta)
        with np.errstate(divide="ignore"):
            return -(s / x) / self.beta * (1.0 + self.theta * s) ** (-1.0 / self.theta - 1.0)

    def inverse_survival(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            return self.inverse_neglog(-np.log1p(-s))

    def inverse_neglog(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(over="ignore"):
            return (np.expm1(self.theta * y) / self.theta) ** self.beta

    def one_minus_eval_mp(self, x):
        x = mpmath.mpf(x)
        th = mpmath.mpf(self.theta)
        return -mpmath.expm1(-mpmath.log1p(th * x ** (1 / mpmath.mpf(self.beta))) / th)

    def neg_log_eval_mp(self, x):
        x = mpmath.mpf(x)
        th = mpmath.mpf(self.theta)
        return mpmath.log1p(th * x ** (1 / mpmath.mpf(self.beta))) / th


class PiecewiseGenerator(ArchimedeanGenerator):
    """psi(x) = 1 - x + a*x**p on [0, 1/2], b0 - b1*x on (1/2, x_max].

    The pieces join in value and slope at the knot x = 1/2.
    """

    knot = 0.5

    def __init__(self, name, a, p, b0, b1, meta):
        self.id = name
        self.a = a
        self.p = p
        self.b0 = b0
        self.b1 = b1
        self.support_end = b0 / b1
        self.meta = meta
        # 1 - psi at the knot: s-threshold between the two inverse branches
        self._s_knot = self.knot - a * self.knot**p

    def one_minus_eval(self, x):
        x = np.asarray(x, dtype=float)
        head = x * (1.0 - self.a * x ** (self.p - 1))
        tail = (1.0 - self.b0) + self.b1 * np.minimum(x, self.support_end)
        return np.where(x <= self.knot, head, tail)

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        head = 1.0 - x + self.a * x**self.p
        tail = np.maximum(self.b0 - self.b1 * x, 0.0)
        return np.where(x <= self.knot, head, tail)

    def neg_log_eval(self, x):
        with np.errstate(divide="ignore"):
            return -np.log1p(-self.one_minus_eval(x))

    def deriv(self, x):
        # left derivative at x_max, zero beyond it
        x = np.asarray(x, dtype=float)
        head = -1.0 + self.a * self.p * x ** (self.p - 1)
        tail = np.where(x <= self.support_end, -self.b1, 0.0)
        return np.where(x <= self.knot, head, tail)

    def _head_inverse(self, s):
        if self.p == 2:
            # root of a x^2 - x + s = 0 on [0, 1/2], written without cancellation
            return 2.0 * s / (1.0 + np.sqrt(np.maximum(1.0 - 4.0 * self.a * s, 0.0)))
        # x - a x^p = s is increasing on [0, 1/2]; guarded Newton from x = s
        lo = s.copy()
        hi = np.full_like(s, self.knot)
        x = s.copy()
        for _ in range(60):
            f = x - self.a * x**self.p - s
            df = 1.0 - self.a * self.p * x ** (self.p - 1)
            lo = np.where(f < 0, x, lo)
            hi = np.where(f > 0, x, hi)
            step = f / df
            x_new = x - step
            outside = (x_new < lo) | (x_new > hi)
            x_new = np.where(outside, 0.5 * (lo + hi), x_new)
            if np.all(np.abs(x_new - x) <= 1e-14 * np.maximum(x_new, 1e-300)):
                return x_new
            x = x_new
        return x

    def inverse_survival(self, s):
        s = np.asarray(s, dtype=float)
        if np.any((s < 0) | (s > 1)):
            raise ValueError("inverse_survival needs s in [0, 1]")
        scalar = s.ndim == 0
        s = np.atleast_1d(s)
        out = np.empty_like(s)
        head = s <= self._s_knot
        out[head] = self._head_inverse(s[head])
        out[~head] = (s[~head] - (1.0 - self.b0)) / self.b1
        return out[0] if scalar else out

    def one_minus_eval_mp(self, x):
        x = mpmath.mpf(x)
        if x <= self.knot:
            return x * (1 - mpmath.mpf(self.a) * x ** (self.p - 1))
        if x >= self.support_end:
            return mpmath.mpf(1)
        return (1 - mpmath.mpf(self.b0)) + mpmath.mpf(self.b1) * x


def psi1():
    return PiecewiseGenerator(
        "psi1", 1 / 4, 2, 15 / 16, 3 / 4,
        GeneratorSecondOrderMeta(1.0, pot=ApproachMeta(-1.0, 1 / 4), bm=ApproachMeta(-1.0, -1 / 4)),
    )


def psi2():
    return PiecewiseGenerator(
        "psi2", 1 / 2, 2, 7 / 8, 1 / 2,
        GeneratorSecondOrderMeta(1.0, pot=ApproachMeta(-1.0, 1 / 2), bm=ApproachMeta(-2.0, 1 / 3)),
    )


def psi3():
    return PiecewiseGenerator(
        "psi3", 1 / 6, 3, 23 / 24, 7 / 8,
        GeneratorSecondOrderMeta(1.0, pot=ApproachMeta(-2.0, 1 / 3), bm=ApproachMeta(-1.0, -1 / 2)),
    )


def parse_generator(spec: str) -> ArchimedeanGenerator:
    """Build a generator from its config id, e.g. ``"opc:theta=1:beta=2"``."""
    named = {"psi1": psi1, "psi2": psi2, "psi3": psi3, "exp": Exponential}
    if spec in named:
        return named[spec]()
    parts = spec.split(":")
    if parts[0] == "opc":
        params = _parse_params(parts[1:], spec)
        try:
            return OuterPowerClayton(params["theta"], params["beta"])
        except KeyError as exc:
            raise ValueError(f"generator id {spec!r} is missing {exc.args[0]}") from None
    raise ValueError(
        f"unknown generator id {spec!r}; available: opc:theta=<f>:beta=<f>, psi1, psi2, psi3, exp"
    )


def _parse_params(items, spec):
    params = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"malformed parameter {item!r} in {spec!r}")
        params[key] = float(value)
    return params


# -- kappa / lambda --------------------------------------------------------

def kappa(g: ArchimedeanGenerator, m: str, w, dps: Optional[int] = None):
    """kappa_p(w) = 1 - psi(1/w) or kappa_b(w) = -log psi(1/w).

    With ``dps`` set, a scalar ``w`` is evaluated in mpmath at that many
    decimal digits and an ``mpf`` is returned.
    """
    check_approach(m)
    if dps is not None:
        with mpmath.workdps(dps):
            w = mpmath.mpf(w)
            if w <= 0:
                raise ValueError("kappa needs w > 0")
            if m == "bm" and 1 / w >= g.support_end:
                raise ValueError("kappa_b undefined where psi(1/w) = 0")
            if m == "pot":
                return +g.one_minus_eval_mp(1 / w)
            return +g.neg_log_eval_mp(1 / w)
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0):
        raise ValueError("kappa needs w > 0")
    if m == "bm" and np.any(1.0 / w >= g.support_end):
        raise ValueError("kappa_b undefined where psi(1/w) = 0")
    if m == "pot":
        return g.one_minus_eval(1.0 / w)
    return g.neg_log_eval(1.0 / w)


def h_kappa(meta: GeneratorSecondOrderMeta, m: str, x):
    """Second-order limit c x^-alpha (x^rho' - 1)/rho' (log x when rho' = 0)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("h_kappa needs x > 0")
    am = meta.approach(m)
    if am.rho_prime == 0:
        shape = np.log(x)
    else:
        shape = np.expm1(am.rho_prime * np.log(x)) / am.rho_prime
    return am.c * x ** (-meta.alpha) * shape


@dataclass(frozen=True)
class KappaResidual:
    t: float
    x: float
    value: float
    limit: float
    precision_flag: bool


def verify_kappa_so(g, meta, m, x_grid, t_list, dps: Optional[int] = None):
    """Table of D(t, x) = [kappa(tx)/kappa(t) - x^-alpha] / B_m(t).

    In double precision a row is flagged when the bracket falls below 1e3
    machine epsilons.  Passing ``dps`` evaluates kappa in mpmath instead.
    """
    check_approach(m)
    am = meta.approach(m)
    rows = []
    for t in t_list:
        for x in x_grid:
            if x <= 0:
                raise ValueError("x grid must be positive")
            if dps is None:
                ratio = float(kappa(g, m, t * x) / kappa(g, m, t))
                num = ratio - x ** (-meta.alpha)
                flag = 0 < abs(num) < 1e3 * np.finfo(float).eps or (num == 0 and x != 1)
                value = num / float(am.rate(t))
            else:
                with mpmath.workdps(dps):
                    tt, xx = mpmath.mpf(t), mpmath.mpf(x)
                    num = kappa(g, m, tt * xx, dps=dps) / kappa(g, m, tt, dps=dps) - xx ** (-meta.alpha)
                    value = float(num / tt ** am.rho_prime)
                flag = False
            rows.append(KappaResidual(float(t), float(x), value,
                                      float(h_kappa(meta, m, x)), bool(flag)))
    return rows


def estimate_kappa_so(g: ArchimedeanGenerator, m: str, t: float = 1e6, x: float = 2.0,
                      dps: int = 80, alpha_scale: float = 1e60):
    """Recover (alpha, rho', c) from kappa alone, without using ``g.meta``.

    alpha comes from the decay of kappa far out (at ``alpha_scale``, where the
    second-order error is negligible at ``dps`` digits), rho' from the decay
    of the second-order bracket between t/10 and t, and c from the bracket at
    t under the normalisation B_m(t) = t**rho'.
    """
    check_approach(m)
    with mpmath.workdps(dps):
        t, x = mpmath.mpf(t), mpmath.mpf(x)
        k = lambda w: kappa(g, m, w, dps=dps)  # noqa: E731
        big = mpmath.mpf(alpha_scale)
        alpha = -mpmath.log(k(big) / k(big / 10)) / mpmath.log(10)
        bracket = lambda s: k(s * x) / k(s) - x ** (-alpha)  # noqa: E731
        rho = mpmath.log(abs(bracket(t) / bracket(t / 10))) / mpmath.log(10)
        shape = x ** (-alpha) * mpmath.expm1(rho * mpmath.log(x)) / rho
        c = bracket(t) / (t**rho * shape)
        return float(alpha), float(rho), float(c)


def kappa_constant(g: ArchimedeanGenerator, m: str, t: float = 1e8, q: float = 10.0,
                   dps: int = 50):
    """C_m = lim t^alpha kappa_m(t), Richardson-extrapolated with rho' from the metadata."""
    meta = g.meta
    am = meta.approach(m)
    with mpmath.workdps(dps):
        t, q = mpmath.mpf(t), mpmath.mpf(q)
        f1 = t**meta.alpha * kappa(g, m, t, dps=dps)
        f2 = (q * t) ** meta.alpha * kappa(g, m, q * t, dps=dps)
        w = q ** am.rho_prime
        return float((f2 - w * f1) / (1 - w))


def lambda_fn(g: ArchimedeanGenerator, m: str, t):
    """lambda_p(t) = psi^{-1}(1 - 1/t) or lambda_b(t) = psi^{-1}(exp(-1/t))."""
    check_approach(m)
    t = np.asarray(t, dtype=float)
    if m == "pot":
        if np.any(t < 1):
            raise ValueError("lambda_p needs t >= 1 so that 1 - 1/t lies in [0, 1)")
        return g.inverse_survival(1.0 / t)
    if np.any(t <= 0):
        raise ValueError("lambda_b needs t > 0")
    return g.inverse_neglog(1.0 / t)


def lambda_expansion(g: ArchimedeanGenerator, m: str, t, C: Optional[float] = None):
    """Leading two terms of lambda_m(t) for large t."""
    meta = g.meta
    am = meta.approach(m)
    if C is None:
        C = kappa_constant(g, m)
    a = meta.alpha
    t = np.asarray(t, dtype=float)
    corr = (1.0 / a) * (am.c / am.rho_prime) * C ** (am.rho_prime / a) * am.rate(t ** (1.0 / a))
    return (C * t) ** (-1.0 / a) * (1.0 - corr)
