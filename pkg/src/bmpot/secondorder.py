"""Second-order limits for the BM and POT domain-of-attraction conditions.

A rate function alpha_m is only determined up to asymptotic proportionality,
so every stored limit carries a normalisation tag and cross-checks compare
``rate * surface`` rather than surfaces alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .copula import ArchimaxCopula, Copula, EvCopula, ProductCopula
from .generators import GeneratorSecondOrderMeta, check_approach, kappa_constant
from .stdf import Logistic, MaxStdf, StableTailDepFn, SumStdf

CASE_ZERO_BELOW = 1e-6
CASE_INF_ABOVE = 1e6
NULL_TOL = 1e-10


@dataclass(frozen=True)
class SecondOrderLimit:
    """(alpha_m, rho_m, S_m) for one approach.

    ``surface`` takes x-points for POT and u-points for BM; it is ``None``
    when no closed form is available.
    """

    approach: str
    rate: Callable
    rho: float
    surface: Optional[Callable]
    normalization: str

    def c(self, probe: float = 1e8) -> float:
        """lim 2r alpha_m(r)."""
        if self.rho > -1:
            return math.inf
        if self.rho < -1:
            return 0.0
        return float(2.0 * probe * self.rate(probe))


@dataclass(frozen=True)
class SecondOrderModel:
    pot: Optional[SecondOrderLimit] = None
    bm: Optional[SecondOrderLimit] = None

    def limit(self, m: str) -> SecondOrderLimit:
        entry = getattr(self, check_approach(m))
        if entry is None:
            raise ValueError(f"model has no second-order limit for approach {m!r}")
        return entry


def _xy(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise ValueError("bivariate points expected")
    return x[..., 0], x[..., 1]


def _opc_parts(beta, x, y):
    lval = Logistic(beta).eval(np.stack([x, y], axis=-1))
    den = x**beta + y**beta
    safe = np.where(den > 0, den, 1.0)
    mean = np.where(den > 0, (x ** (beta + 1) + y ** (beta + 1)) / safe, 0.0)
    return lval, mean


def opc_s_pot(theta: float, beta: float, x):
    """POT limit of the outer-power Clayton copula under alpha_p(t) = 1/t."""
    x1, x2 = _xy(x)
    lval, mean = _opc_parts(beta, x1, x2)
    return 0.5 * (1.0 + theta) * lval * (mean - lval)


def opc_s_bm(theta: float, beta: float, u):
    """BM limit theta * Lambda_b(u; beta) of the outer-power Clayton copula, alpha_b(r) = 1/(2r)."""
    u1, u2 = _xy(u)
    if np.any((u1 <= 0) | (u2 <= 0) | (u1 > 1) | (u2 > 1)):
        raise ValueError("u must lie in (0, 1]^2")
    x1, x2 = -np.log(u1), -np.log(u2)
    lval, mean = _opc_parts(beta, x1, x2)
    return theta * np.exp(-lval) * lval * (lval - mean)


def opc_model(theta: float, beta: float) -> SecondOrderModel:
    return SecondOrderModel(
        pot=SecondOrderLimit("pot", lambda t: 1.0 / np.asarray(t, dtype=float), -1.0,
                             lambda x: opc_s_pot(theta, beta, x), "t^-1"),
        bm=SecondOrderLimit("bm", lambda r: 0.5 / np.asarray(r, dtype=float), -1.0,
                            lambda u: opc_s_bm(theta, beta, u), "(2r)^-1"),
    )


def product_model() -> SecondOrderModel:
    """Independence: POT limit -2xy at rate 1/(2t); the BM numerator vanishes identically."""
    def s_pot(x):
        x1, x2 = _xy(x)
        return -2.0 * x1 * x2
    return SecondOrderModel(
        pot=SecondOrderLimit("pot", lambda t: 0.5 / np.asarray(t, dtype=float), -1.0, s_pot, "(2t)^-1"),
    )


def prop31_alpha(meta: GeneratorSecondOrderMeta, m: str, t):
    """alpha_m(t) = B_m(t**(1/alpha)), regularly varying with index rho'_m / alpha."""
    am = meta.approach(m)
    if am.rho_prime == 0:
        raise ValueError("rate construction needs rho' < 0")
    return am.rate(np.asarray(t, dtype=float) ** (1.0 / meta.alpha))


def _archimax_bracket(C: ArchimaxCopula, m: str, x, const: Optional[float] = None):
    """C^{rho'/a} h_kappa(1/L0(x^{1/a})) + a L0^{a-1}(x^{1/a}) sum_j dL0_j(x^{1/a}) h_lambda(1/x_j)."""
    g, l0 = C.generator, C.l0
    meta = g.meta
    am = meta.approach(m)
    a, rp, c = meta.alpha, am.rho_prime, am.c
    if const is None:
        const = kappa_constant(g, m)
    x = np.asarray(x, dtype=float)
    z = x ** (1.0 / a)
    lz = l0.eval(z)
    # h_kappa(w) at w = 1/lz, written in lz to keep lz = 0 finite
    term1 = const ** (rp / a) * c * lz**a * np.expm1(-rp * np.log(np.where(lz > 0, lz, 1.0))) / rp
    term1 = np.where(lz > 0, term1, 0.0)
    # h_lambda(w) at w = 1/x_j
    k = rp / a
    total = np.zeros(x.shape[:-1])
    for j in range(l0.dim):
        xj = x[..., j]
        safe = np.where(xj > 0, xj, 1.0)
        hl = -c / a**2 * const ** (rp / a) * xj ** (1.0 / a) * np.expm1(-k * np.log(safe)) / k
        total = total + l0.partial(j, z) * np.where(xj > 0, hl, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(lz > 0, a * lz ** (a - 1.0), 0.0)
    return term1 + scale * total


def archimax_s_pot(C: ArchimaxCopula, x, const: Optional[float] = None):
    """POT limit of an Archimax copula under alpha_p(t) = B_p(t^(1/alpha))."""
    return _archimax_bracket(C, "pot", x, const)


def archimax_s_bm(C: ArchimaxCopula, u, const: Optional[float] = None):
    """BM limit of an Archimax copula under alpha_b(r) = B_b(r^(1/alpha))."""
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u > 1)):
        raise ValueError("u must lie in (0, 1]^d")
    x = -np.log(u)
    cinf = C.attractor().cdf(u)
    return -cinf * _archimax_bracket(C, "bm", x, const)


def archimax_model(C: ArchimaxCopula) -> SecondOrderModel:
    """Rates from the generator's kappa expansions; surfaces from the matching limit formula."""
    meta = C.generator.meta
    if meta is None:
        raise ValueError("generator has no second-order metadata")
    limits = {}
    for m in ("pot", "bm"):
        am = getattr(meta, m)
        if am is None or am.rho_prime >= 0:
            continue
        const = kappa_constant(C.generator, m)
        surf = (lambda x, _c=const: archimax_s_pot(C, x, _c)) if m == "pot" else \
               (lambda u, _c=const: archimax_s_bm(C, u, _c))
        limits[m] = SecondOrderLimit(
            m, lambda t, _meta=meta, _m=m: prop31_alpha(_meta, _m, t),
            am.rho_prime / meta.alpha, surf, f"B_{m}(t^(1/alpha)) = t^({am.rho_prime / meta.alpha:g})",
        )
    return SecondOrderModel(**limits)


def model_for(C: Copula) -> SecondOrderModel:
    """Default second-order model for a shipped copula."""
    from .generators import OuterPowerClayton
    if isinstance(C, ProductCopula):
        return product_model()
    if isinstance(C, ArchimaxCopula):
        if isinstance(C.generator, OuterPowerClayton) and isinstance(C.l0, SumStdf):
            return opc_model(C.generator.theta, C.generator.beta)
        return archimax_model(C)
    if isinstance(C, EvCopula):
        return SecondOrderModel()
    raise ValueError(f"no second-order model for {C!r}")


# -- conversion between the two conditions ---------------------------------

@dataclass(frozen=True)
class Conversion:
    """Converted limit surface at the requested points.

    ``case`` is "inf", "zero" or "finite" (the branch chosen from c), ``lam``
    the weight 1/(1+c), and ``rate_rule`` describes the target rate in terms
    of the source rate.  ``degenerate`` is set when the converted surface is
    below ``NULL_TOL`` on the whole probe grid, in which case no second-order
    statement follows and ``values`` must not be used as a limit.
    """

    values: np.ndarray
    case: str
    lam: float
    rate_rule: str
    degenerate: bool


def _case(c):
    if c < 0:
        raise ValueError("c must be nonnegative")
    if c > CASE_INF_ABOVE:
        return "inf", 0.0
    if c < CASE_ZERO_BELOW:
        return "zero", 1.0
    return "finite", 1.0 / (1.0 + c)


def _probe_grid(dim=2):
    g = np.linspace(0.0, 2.0, 21)
    mesh = np.stack(np.meshgrid(*([g] * dim), indexing="ij"), axis=-1)
    return mesh.reshape(-1, dim)


def _pot_to_bm_raw(s_pot, gamma2, l, case, lam, x):
    x = np.asarray(x, dtype=float)
    cinf = np.exp(-l.eval(x))
    if case == "inf":
        return -cinf * s_pot(x)
    if case == "zero":
        return cinf * (gamma2(x) - l.eval(x) ** 2)
    return cinf * (lam * (gamma2(x) - l.eval(x) ** 2) - (1.0 - lam) * s_pot(x))


def _bm_to_pot_raw(s_bm, gamma1, l, case, lam, x):
    x = np.asarray(x, dtype=float)
    lx = l.eval(x)
    if case == "inf":
        return -s_bm(np.exp(-x)) / np.exp(-lx)
    if case == "zero":
        return gamma1(x) - lx**2
    return lam * (gamma1(x) - lx**2) - (1.0 - lam) * s_bm(np.exp(-x)) / np.exp(-lx)


def convert_pot_to_bm(s_pot: Callable, gamma2: Callable, l: StableTailDepFn, c_p: float, x) -> Conversion:
    """S_b(exp(-x)) from a POT limit with c_p = lim 2r alpha_p(r)."""
    case, lam = _case(c_p)
    if case == "zero" and isinstance(l, MaxStdf):
        raise ValueError("the c_p = 0 branch excludes L = max")
    rule = {"inf": "alpha_b = alpha_p", "zero": "alpha_b(r) = 1/(2r)",
            "finite": "alpha_b(r) = alpha_p(r) + 1/(2r)"}[case]
    probe = _pot_to_bm_raw(s_pot, gamma2, l, case, lam, _probe_grid(l.dim))
    values = _pot_to_bm_raw(s_pot, gamma2, l, case, lam, x)
    return Conversion(values, case, lam, rule, bool(np.max(np.abs(probe)) < NULL_TOL))


def convert_bm_to_pot(s_bm: Callable, gamma1: Callable, l: StableTailDepFn, c_b: float, x) -> Conversion:
    """S_p(x) from a BM limit with c_b = lim 2r alpha_b(r)."""
    case, lam = _case(c_b)
    if case == "zero" and isinstance(l, MaxStdf):
        raise ValueError("the c_b = 0 branch excludes L = max")
    rule = {"inf": "alpha_p = alpha_b", "zero": "alpha_p(t) = 1/(2t)",
            "finite": "alpha_p(t) = alpha_b(t) + 1/(2t)"}[case]
    probe = _bm_to_pot_raw(s_bm, gamma1, l, case, lam, _probe_grid(l.dim))
    values = _bm_to_pot_raw(s_bm, gamma1, l, case, lam, x)
    return Conversion(values, case, lam, rule, bool(np.max(np.abs(probe)) < NULL_TOL))


# -- residual diagnostics ----------------------------------------------------

@dataclass(frozen=True)
class Residual:
    approach: str
    scale: float
    p1: float
    p2: float
    residual: float
    closed_form: float
    abs_err: float
    precision_flag: bool


def so_residual(C: Copula, m: str, scale: float, points, model: Optional[SecondOrderModel] = None):
    """Rescaled second-order residuals D_m at the given points.

    POT points are x-values and D_p = [t(1 - C(1 - x/t)) - L(x)] / alpha_p(t);
    BM points are u-values and D_b = [C_r(u) - C_inf(u)] / alpha_b(r).  A row is
    flagged when the numerator sits within 1e3 machine epsilons of the
    quantity it was subtracted from.
    """
    check_approach(m)
    if model is None:
        model = model_for(C)
    lim = model.limit(m)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    cinf = C.attractor()
    eps = np.finfo(float).eps
    if m == "pot":
        ref = cinf.l.eval(pts)
        num = C.one_minus_cdf_scaled(pts, scale) - ref
    else:
        ref = cinf.cdf(pts)
        num = C.block_copula(pts, scale) - ref
    flags = (np.abs(num) < 1e3 * eps * np.abs(ref)) & (ref != 0)
    resid = num / float(lim.rate(scale))
    closed = lim.surface(pts) if lim.surface is not None else np.full(len(pts), np.nan)
    rows = []
    for i, p in enumerate(pts):
        rows.append(Residual(m, float(scale), float(p[0]), float(p[1]), float(resid[i]),
                             float(closed[i]), float(abs(resid[i] - closed[i])), bool(flags[i])))
    return rows
