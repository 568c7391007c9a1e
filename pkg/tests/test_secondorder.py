import math

import numpy as np
import pytest

from bmpot.copula import ArchimaxCopula, EvCopula, ProductCopula, parse_copula
from bmpot.generators import OuterPowerClayton, psi1, psi2, psi3
from bmpot.harness import BENCH_THETA
from bmpot.secondorder import (archimax_model, archimax_s_bm, archimax_s_pot, convert_bm_to_pot,
                               convert_pot_to_bm, model_for, opc_model, opc_s_bm, opc_s_pot,
                               prop31_alpha, so_residual)
from bmpot.stdf import Logistic, MaxStdf, SumStdf, gamma_fn

SQ2 = math.sqrt(2)
L0 = Logistic(BENCH_THETA)


def grid(lo, hi, n):
    g = np.linspace(lo, hi, n)
    return np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)


def test_opc_s_pot_examples():
    assert opc_s_pot(1, 2, [1.0, 1.0]) == pytest.approx(SQ2 - 2, rel=1e-14)
    assert opc_s_pot(0.7, 3, [1.3, 0.0]) == pytest.approx(0.0, abs=1e-15)
    x = grid(0.0, 2.0, 21)
    assert np.allclose(opc_s_pot(1, 2, 2 * x), 4 * opc_s_pot(1, 2, x), rtol=1e-13, atol=1e-15)
    for theta, beta in ((1, 2), (0.5, 1.5), (3, 4)):
        assert np.all(opc_s_pot(theta, beta, x) <= 1e-15)


def test_opc_s_bm_examples():
    u = [math.exp(-1), math.exp(-1)]
    assert opc_s_bm(1, 2, u) == pytest.approx(math.exp(-SQ2) * SQ2 * (SQ2 - 1), rel=1e-14)
    assert opc_s_bm(1, 2, u) == pytest.approx(0.14242, abs=1e-5)
    assert opc_s_bm(0.8, 2.5, [0.4, 1.0]) == 0.0
    pts = grid(0.05, 1.0, 20)
    for theta, beta in ((1, 2), (0.5, 1.5)):
        s = opc_s_bm(theta, beta, pts)
        assert np.all(s >= -1e-16)
        cinf = np.exp(-Logistic(beta).eval(-np.log(pts)))
        cinf2 = np.exp(-Logistic(beta).eval(-2 * np.log(pts)))
        # homogeneity scaling with s = 2 and rho_b = -1: ratio scales by 2**2
        lhs = opc_s_bm(theta, beta, pts**2) / cinf2
        assert np.allclose(lhs, 4 * s / cinf, rtol=0, atol=1e-12)
    with pytest.raises(ValueError):
        opc_s_bm(1, 2, [0.0, 0.5])


def test_prop31_alpha_examples():
    t = np.array([10.0, 1e3])
    assert np.allclose(prop31_alpha(psi2().meta, "bm", t), t**-2.0, rtol=1e-15)
    assert np.allclose(prop31_alpha(psi2().meta, "pot", t), 1 / t, rtol=1e-15)
    assert prop31_alpha(psi1().meta, "pot", 10.0) == pytest.approx(0.1, rel=1e-15)
    rho_b = [g().meta.bm.rho_prime / g().meta.alpha for g in (psi1, psi2, psi3)]
    rho_p = [g().meta.pot.rho_prime / g().meta.alpha for g in (psi1, psi2, psi3)]
    assert rho_b == [-1, -2, -1] and rho_p == [-1, -1, -2]


def test_model_constants():
    m = opc_model(1, 2)
    assert m.limit("pot").c() == pytest.approx(2.0, rel=1e-12)
    assert m.limit("bm").c() == pytest.approx(1.0, rel=1e-12)
    am = archimax_model(ArchimaxCopula(psi2(), L0))
    assert am.limit("bm").c() == 0.0
    assert am.limit("pot").rho == -1.0 and am.limit("bm").rho == -2.0
    assert model_for(EvCopula(L0)).pot is None


def test_conversion_closure_opc():
    x = grid(0.0, 2.0, 21)[1:]  # {0, 0.1, ..., 2}^2 without the origin
    for theta, beta in ((1, 2), (0.5, 1.5), (2, 3)):
        l = Logistic(beta)
        conv = convert_bm_to_pot(lambda u: opc_s_bm(theta, beta, u), lambda y: gamma_fn(l, y), l, 1.0, x)
        assert conv.case == "finite" and conv.lam == 0.5 and not conv.degenerate
        assert np.max(np.abs(conv.values - opc_s_pot(theta, beta, x))) < 1e-10


def test_pot_to_bm_opc_normalization():
    # c_p = 2 gives S_b under alpha_b(r) = 3/(2r); the invariant product alpha_b * S_b
    # must equal the (2r)^-1 * theta * Lambda_b pair, i.e. S_b = theta * Lambda_b / 3
    x = grid(0.0, 2.0, 21)[1:]
    theta, beta = 1.0, 2.0
    l = Logistic(beta)
    conv = convert_pot_to_bm(lambda y: opc_s_pot(theta, beta, y), lambda y: gamma_fn(l, y), l, 2.0, x)
    assert conv.lam == pytest.approx(1 / 3)
    assert conv.rate_rule == "alpha_b(r) = alpha_p(r) + 1/(2r)"
    r = 1e4
    alpha_b = 1 / r + 1 / (2 * r)
    assert np.allclose(alpha_b * conv.values, opc_s_bm(theta, beta, np.exp(-x)) / (2 * r), rtol=0, atol=1e-16)


def test_product_conversion_is_degenerate():
    x = grid(0.0, 2.0, 19)
    l = SumStdf()

    def s_pot(y):
        return -2 * y[..., 0] * y[..., 1]

    conv = convert_pot_to_bm(s_pot, lambda y: gamma_fn(l, y), l, 1.0, x)
    assert conv.degenerate and np.max(np.abs(conv.values)) < 1e-10


def test_conversion_limit_cases():
    x = grid(0.1, 2.0, 10)
    l = Logistic(2.0)
    conv = convert_pot_to_bm(lambda y: opc_s_pot(1, 2, y), lambda y: gamma_fn(l, y), l, np.inf, x)
    assert conv.case == "inf" and np.all(conv.values >= 0)
    assert np.allclose(conv.values, -np.exp(-l.eval(x)) * opc_s_pot(1, 2, x))
    conv = convert_bm_to_pot(lambda u: opc_s_bm(1, 2, u), lambda y: gamma_fn(l, y), l, 1e9, x)
    assert conv.case == "inf"
    assert np.allclose(conv.values, -opc_s_bm(1, 2, np.exp(-x)) / np.exp(-l.eval(x)))
    conv = convert_bm_to_pot(lambda u: 0 * u[..., 0], lambda y: gamma_fn(l, y), l, 0.0, x)
    assert conv.case == "zero"
    assert np.allclose(conv.values, gamma_fn(l, x) - l.eval(x) ** 2)
    with pytest.raises(ValueError):
        convert_bm_to_pot(lambda u: 0 * u[..., 0], lambda y: gamma_fn(MaxStdf(), y), MaxStdf(), 0.0, x)
    with pytest.raises(ValueError):
        convert_pot_to_bm(lambda u: 0 * u[..., 0], lambda y: y[..., 0], l, -1.0, x)


def test_so_residual_examples():
    c = parse_copula("opc:theta=1:beta=2")
    row = so_residual(c, "pot", 1e4, [[1.0, 1.0]])[0]
    assert row.residual == pytest.approx(-0.5858, abs=1e-2)
    u = math.exp(-1)
    row = so_residual(c, "bm", 1e4, [[u, u]])[0]
    assert row.residual == pytest.approx(0.1424, abs=1e-2)
    assert not row.precision_flag
    ev = EvCopula(L0)
    from bmpot.secondorder import SecondOrderLimit, SecondOrderModel
    model = SecondOrderModel(bm=SecondOrderLimit("bm", lambda r: 1 / r, -1.0, None, "r^-1"))
    rows = so_residual(ev, "bm", 1e3, grid(0.1, 1, 5), model=model)
    assert all(r.residual == 0.0 for r in rows)


def test_so_residual_product():
    rows = so_residual(ProductCopula(), "pot", 1e3, grid(0.2, 2, 10))
    assert max(r.abs_err for r in rows) < 1e-9


@pytest.mark.parametrize("gen", [psi1, psi2, psi3])
def test_archimax_surfaces_match_residuals(gen):
    c = ArchimaxCopula(gen(), L0)
    xs = grid(0.2, 2.0, 10)
    us = np.exp(-xs)
    for m, pts in (("pot", xs), ("bm", us)):
        errs = [max(r.abs_err for r in so_residual(c, m, s, pts)) for s in (1e2, 1e3, 1e4)]
        assert errs[0] > errs[1] > errs[2]
        # rate 1/t for all six pairs: ratio of successive errors near 10
        assert errs[1] / errs[2] > 5


def test_archimax_surface_homogeneity():
    for gen in (psi1, psi2, psi3):
        c = ArchimaxCopula(gen(), L0)
        rho_p = gen().meta.pot.rho_prime
        x = grid(0.1, 2.0, 8)
        assert np.allclose(archimax_s_pot(c, 1.7 * x), 1.7 ** (1 - rho_p) * archimax_s_pot(c, x),
                           rtol=1e-10, atol=1e-14)
        rho_b = gen().meta.bm.rho_prime
        u = np.exp(-x)
        cinf = c.attractor()
        lhs = archimax_s_bm(c, u**1.7) / cinf.cdf(u**1.7)
        rhs = 1.7 ** (1 - rho_b) * archimax_s_bm(c, u) / cinf.cdf(u)
        assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-14)


def test_opc_archimax_surface_agrees_with_closed_form():
    # the general archimax surface specialised to the outer-power Clayton model
    c = ArchimaxCopula(OuterPowerClayton(1.0, 2.0), SumStdf())
    x = grid(0.2, 2.0, 10)
    lim = archimax_model(c).limit("pot")
    ref = opc_model(1.0, 2.0).limit("pot")
    t = 1e5
    assert np.allclose(lim.rate(t) * lim.surface(x), ref.rate(t) * ref.surface(x), rtol=1e-8, atol=1e-16)
