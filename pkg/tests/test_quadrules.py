import numpy as np
import pytest

from fracfem.quadrules import duffy_triangle, gauss01, simplex_rule, triangle_rule


def test_gauss01_exactness():
    x, w = gauss01(6)
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    # degree-11 polynomials integrate exactly
    for k in range(12):
        assert np.dot(w, x ** k) == pytest.approx(1.0 / (k + 1), rel=1e-13)


def test_triangle_rule_polynomial_exactness():
    # reference triangle (0,0)-(1,0)-(0,1), integral of x^a y^b is
    # a! b! / (a+b+2)!
    from math import factorial

    for degree in (2, 4, 5, 8):
        pts, w = triangle_rule(degree)
        assert w.sum() == pytest.approx(0.5, rel=1e-13)
        assert (w > 0).all()
        for a in range(degree + 1):
            for b in range(degree + 1 - a):
                exact = factorial(a) * factorial(b) / factorial(a + b + 2)
                got = np.dot(w, pts[:, 0] ** a * pts[:, 1] ** b)
                assert got == pytest.approx(exact, rel=1e-9), (degree, a, b)


def test_triangle_rule_points_inside():
    for degree in (2, 4, 5, 8):
        pts, _ = triangle_rule(degree)
        assert (pts >= -1e-14).all()
        assert (pts.sum(axis=1) <= 1 + 1e-14).all()


def test_simplex_rule_dispatch():
    pts1, w1 = simplex_rule(1, 4)
    assert pts1.shape[1] == 1
    assert w1.sum() == pytest.approx(1.0)
    pts2, w2 = simplex_rule(2, 4)
    assert pts2.shape[1] == 2
    assert w2.sum() == pytest.approx(0.5)
    with pytest.raises(ValueError):
        simplex_rule(3, 2)


def test_duffy_triangle_integrates_weak_singularity():
    # int over reference triangle of |x|^(-1/2) with the singularity at the
    # origin vertex: exact value via polar wedge integration
    from scipy.integrate import quad

    # boundary opposite the origin is x+y=1, radius rho(t)=1/(cos t + sin t)
    exact = quad(lambda t: (1.0 / (np.cos(t) + np.sin(t))) ** 1.5 / 1.5,
                 0.0, np.pi / 2)[0]
    errs = []
    for p in (6, 12, 24):
        pts, w = duffy_triangle(p)
        got = np.dot(w, np.linalg.norm(pts, axis=1) ** -0.5)
        errs.append(abs(got - exact) / exact)
    assert errs[-1] < 1e-4
    # refinement helps (the map regularizes the kernel but leaves a sqrt)
    assert errs[2] < errs[1] < errs[0]


def test_duffy_triangle_weights_positive():
    pts, w = duffy_triangle(8)
    assert (w > 0).all()
    assert w.sum() == pytest.approx(0.5, rel=1e-12)
