"""Property-based checks of the structural laws (hypothesis)."""
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from bmpot.copula import parse_copula
from bmpot.estimators import block_maxima, madogram_pickands, pot_pickands
from bmpot.harness import BENCH_THETA
from bmpot.sampling import RngStream, sample_bivariate
from bmpot.secondorder import archimax_s_bm, archimax_s_pot, opc_s_bm, opc_s_pot
from bmpot.stdf import Logistic, MaxStdf, PowerStdf, SumStdf

STDFS = [Logistic(1.0), Logistic(BENCH_THETA), Logistic(2.0), Logistic(5.0), MaxStdf(), SumStdf(),
         PowerStdf(Logistic(1.5), 0.5)]
ARCHIMAX = {m: parse_copula(f"archimax:{m}:logistic:theta={BENCH_THETA!r}") for m in ("psi1", "psi2", "psi3")}
RHO = {"psi1": (-1, -1), "psi2": (-1, -2), "psi3": (-2, -1)}  # (rho_p, rho_b)

coord = st.floats(0.0, 5.0, allow_nan=False)
pos = st.floats(1e-3, 5.0, allow_nan=False)
unit = st.floats(1e-6, 1.0, allow_nan=False)
scale = st.floats(0.1, 10.0, allow_nan=False)
stdf_idx = st.integers(0, len(STDFS) - 1)


@given(stdf_idx, coord, coord, scale)
def test_stdf_homogeneity_and_bounds(i, x, y, s):
    l = STDFS[i]
    p = np.array([x, y])
    v = float(l.eval(p))
    assert max(x, y) - 1e-12 <= v <= x + y + 1e-12
    assert abs(float(l.eval(s * p)) - s * v) <= 1e-12 * max(1.0, s * v)


@given(stdf_idx, coord, coord, coord, coord, st.floats(0, 1))
def test_stdf_convex_and_lipschitz(i, a, b, c, d, lam):
    l = STDFS[i]
    p, q = np.array([a, b]), np.array([c, d])
    mid = float(l.eval(lam * p + (1 - lam) * q))
    assert mid <= lam * float(l.eval(p)) + (1 - lam) * float(l.eval(q)) + 1e-12
    assert abs(float(l.eval(p)) - float(l.eval(q))) <= np.abs(p - q).sum() + 1e-12


@given(pos, pos, scale, st.floats(0.1, 3.0), st.floats(1.0, 4.0))
def test_opc_s_pot_homogeneity(x, y, s, theta, beta):
    p = np.array([x, y])
    lhs = float(opc_s_pot(theta, beta, s * p))
    rhs = s**2 * float(opc_s_pot(theta, beta, p))
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))


@given(unit, unit, scale, st.floats(0.1, 3.0), st.floats(1.0, 4.0))
def test_opc_s_bm_scaling_law(u, v, s, theta, beta):
    p = np.array([u, v])
    l = Logistic(beta)
    cinf = np.exp(-float(l.eval(-np.log(p))))
    cinf_s = np.exp(-float(l.eval(-s * np.log(p))))
    if cinf_s < 1e-250:
        return
    lhs = float(opc_s_bm(theta, beta, p**s)) / cinf_s
    rhs = s**2 * float(opc_s_bm(theta, beta, p)) / cinf
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(rhs))


@settings(max_examples=60)
@given(st.sampled_from(sorted(ARCHIMAX)), pos, pos, scale)
def test_archimax_surface_homogeneity(m, x, y, s):
    c = ARCHIMAX[m]
    rho_p, rho_b = RHO[m]
    p = np.array([x, y])
    lhs, rhs = float(archimax_s_pot(c, s * p)), s ** (1 - rho_p) * float(archimax_s_pot(c, p))
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(rhs))
    u = np.exp(-p)
    cinf = c.attractor()
    cs = float(cinf.cdf(u**s))
    if cs < 1e-250:
        return
    lhs = float(archimax_s_bm(c, u**s)) / cs
    rhs = s ** (1 - rho_b) * float(archimax_s_bm(c, u)) / float(cinf.cdf(u))
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(rhs))


def _k_b(f):
    v = np.exp(-np.linspace(0, 1, 101))
    grid = np.stack(np.meshgrid(v, v, indexing="ij"), axis=-1).reshape(-1, 2)
    return np.e**2 * np.max(np.abs(f(grid)))


SURFACES_B = {"opc": (lambda u: opc_s_bm(1.0, 2.0, u), -1)}
SURFACES_B.update({m: ((lambda c: (lambda u: archimax_s_bm(c, u)))(ARCHIMAX[m]), RHO[m][1]) for m in ARCHIMAX})
K_B = {name: _k_b(f) for name, (f, _) in SURFACES_B.items()}


@given(st.sampled_from(sorted(SURFACES_B)), st.floats(1e-12, 1.0), st.floats(1e-12, 1.0))
def test_growth_bound(name, u, v):
    f, rho = SURFACES_B[name]
    umin = min(u, v)
    bound = K_B[name] * umin * (-np.log(umin)) ** (1 + abs(rho))
    assert abs(float(f(np.array([u, v])))) <= bound * (1 + 1e-9) + 1e-300


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.integers(50, 400), st.floats(0.05, 0.95),
       st.sampled_from(["exp", "cube", "logit"]))
def test_estimators_rank_invariant(seed, n, t, transform):
    s = sample_bivariate(ARCHIMAX["psi2"], n, RngStream(seed)).data
    g = {"exp": np.exp, "cube": lambda a: a**3 - 7, "logit": lambda a: np.log(a / (1 - a))}[transform]
    moved = np.column_stack([g(s[:, 0]), 2 * s[:, 1] + 1])
    ks = np.arange(1, n + 1, 7)
    assert np.array_equal(pot_pickands(s, ks, t), pot_pickands(moved, ks, t))
    for r in (1, 3, n // 10):
        assert madogram_pickands(block_maxima(s, r), t, "k1") == madogram_pickands(block_maxima(moved, r), t, "k1")
