import numpy as np
import pytest

from eisenlift.geometry import (
    christoffel_derivatives_fd,
    christoffel_fd,
    geodesic_acceleration,
    geodesic_field_fd,
    riemann_from_christoffel,
)


class Sphere:
    dim = 2

    def matrix(self, p):
        return np.diag([1.0, np.sin(p[0]) ** 2])


class Flat:
    dim = 3

    def matrix(self, p):
        return np.diag([1.0, 2.0, 3.0])


class TestChristoffelFD:
    def test_flat_zero(self):
        assert np.max(np.abs(christoffel_fd(Flat(), np.array([0.1, 0.2, 0.3])))) <= 1e-12

    def test_sphere_symbols(self):
        th = 0.7
        G = christoffel_fd(Sphere(), np.array([th, 0.0]))
        assert G[0, 1, 1] == pytest.approx(-np.sin(th) * np.cos(th), abs=1e-9)
        assert G[1, 0, 1] == pytest.approx(np.cos(th) / np.sin(th), abs=1e-9)
        np.testing.assert_allclose(G, np.swapaxes(G, 1, 2), atol=1e-14)


class TestCurvature:
    def test_sphere_riemann(self):
        th = 0.9
        gam, dgam = christoffel_derivatives_fd(Sphere(), np.array([th, 0.3]))
        R = riemann_from_christoffel(gam, dgam)
        assert R[0, 1, 0, 1] == pytest.approx(np.sin(th) ** 2, abs=1e-6)
        np.testing.assert_allclose(R, -np.swapaxes(R, 2, 3), atol=1e-10)


class TestGeodesicField:
    def test_sphere_equator_is_geodesic(self):
        rhs = geodesic_field_fd(Sphere())
        y = np.array([np.pi / 2, 0.0, 0.0, 1.0])
        np.testing.assert_allclose(rhs(0.0, y), [0.0, 1.0, 0.0, 0.0], atol=1e-9)

    def test_acceleration_contraction(self):
        gam = np.zeros((2, 2, 2))
        gam[0, 1, 1] = 2.0
        np.testing.assert_allclose(geodesic_acceleration(gam, np.array([0.0, 3.0])), [-18.0, 0.0])
