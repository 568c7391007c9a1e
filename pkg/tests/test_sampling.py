import numpy as np
import pytest

from bmpot.copula import Copula, ProductCopula, parse_copula
from bmpot.sampling import NonMonotoneConditional, RngStream, SampleMatrix, invert_conditional, sample_bivariate


def test_invert_conditional_examples():
    v = np.linspace(0.01, 0.99, 99)
    u2 = invert_conditional(ProductCopula(), np.full_like(v, 0.3), v)
    assert np.max(np.abs(u2 - v)) <= 1e-12
    c = parse_copula("opc:theta=1:beta=1")
    assert invert_conditional(c, 0.5, 4 / 9) == pytest.approx(0.5, abs=1e-12)
    tiny = invert_conditional(c, 0.5, 1e-12)
    assert 0 < tiny < 1e-5


@pytest.mark.parametrize("model", ["product", "opc:theta=1:beta=2", "archimax:psi1:logistic:theta=1.7",
                                   "archimax:psi3:logistic:theta=1.7", "comonotone"])
def test_inverse_is_monotone_and_consistent(model):
    c = parse_copula(model)
    v = np.linspace(0.001, 0.999, 400)
    for u1 in (0.05, 0.5, 0.95):
        u2 = invert_conditional(c, np.full_like(v, u1), v)
        assert np.all(np.diff(u2) >= 0)
        assert np.all((u2 > 0) & (u2 < 1))
        # generalized inverse: F(u2 + tol) >= v
        f = c.conditional_cdf(u1, np.minimum(u2 + 1e-11, 1.0))
        assert np.all(f >= v - 1e-9)


def test_invert_conditional_validation():
    with pytest.raises(ValueError):
        invert_conditional(ProductCopula(), 0.5, 1.0)
    with pytest.raises(ValueError):
        invert_conditional(ProductCopula(), 0.0, 0.5)
    with pytest.raises(ValueError):
        invert_conditional(ProductCopula(), 0.5, 0.5, tol=0)


class _Broken(Copula):
    id = "broken"

    def conditional_cdf(self, u1, u2):
        return np.sin(8 * np.asarray(u2)) ** 2


def test_non_monotone_conditional_aborts():
    with pytest.raises(NonMonotoneConditional):
        invert_conditional(_Broken(), 0.5, 0.5)


def test_rng_stream():
    a = RngStream(7, 3).uniforms(1000)
    assert np.array_equal(a, RngStream(7, 3).uniforms(1000))
    assert not np.array_equal(a, RngStream(7, 4).uniforms(1000))
    assert not np.array_equal(a, RngStream(8, 3).uniforms(1000))
    assert np.all((a > 0) & (a < 1))
    # distinct streams look independent
    b = RngStream(7, 4).uniforms(20000)
    assert abs(np.corrcoef(RngStream(7, 3).uniforms(20000), b)[0, 1]) < 0.03
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(0, 2**64)


def test_sample_reproducible_and_order_free():
    c = parse_copula("archimax:psi2:logistic:theta=1.7")
    s1 = sample_bivariate(c, 500, RngStream(11, 5))
    _ = sample_bivariate(c, 500, RngStream(11, 4))
    s2 = sample_bivariate(c, 500, RngStream(11, 5))
    assert np.array_equal(s1.data, s2.data)
    assert s1.model_id == c.id and s1.seed == 11 and s1.stream_id == 5 and s1.n == 500


def test_first_margin_is_raw_stream():
    c = parse_copula("opc:theta=1:beta=2")
    s = sample_bivariate(c, 300, RngStream(2, 9))
    assert np.array_equal(s.data[:, 0], RngStream(2, 9).uniforms((300, 2))[:, 0])


def test_sample_invariants():
    for model in ("product", "opc:theta=1:beta=2", "archimax:psi2:logistic:theta=1.7"):
        s = sample_bivariate(parse_copula(model), 5000, RngStream(1, 0))
        assert np.all((s.data > 0) & (s.data < 1))
        for j in range(2):
            assert np.unique(s.data[:, j]).size == s.n


def test_product_sample_distribution():
    s = sample_bivariate(ProductCopula(), 20000, RngStream(5))
    g = np.linspace(0, 1, 11)
    emp = np.array([[np.mean((s.data[:, 0] <= a) & (s.data[:, 1] <= b)) for b in g] for a in g])
    assert np.max(np.abs(emp - np.outer(g, g))) < 0.015


def test_sample_validation():
    with pytest.raises(ValueError):
        sample_bivariate(ProductCopula(), 0, RngStream(0))
    with pytest.raises(ValueError):
        SampleMatrix(np.zeros((3, 3)))
