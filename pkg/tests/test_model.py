import math

import numpy as np
import pytest

from src.errors import DomainError, ResolutionError
from src.model import (ModelManifold, ScaledFrame, colored_ball_net, gk_distance, grid_points_complex,
                       real_grid, real_lattice, to_complex, to_real)


def test_interleaved_coordinates():
    z = np.array([[1 + 2j, 3 - 4j]])
    assert to_real(z).tolist() == [[1.0, 2.0, 3.0, -4.0]]
    assert np.array_equal(to_complex(to_real(z)), z)


def test_torus_involution_wraps(torus1):
    w = torus1.involution(np.array([[0.3 + 0.2j]]))
    assert np.allclose(w, [[0.3 + 0.8j]])
    assert np.allclose(torus1.involution(w), [[0.3 + 0.2j]])


def test_torus_displacement_takes_short_way(torus1):
    assert np.isclose(torus1.displacement(0.95, 0.05), 0.1)
    assert np.isclose(torus1.displacement(0.1j, 0.9j), -0.2j)


def test_gk_distance_scales_with_sqrt_k(torus1, frame100):
    assert np.isclose(gk_distance(torus1, frame100, np.array([0.95]), np.array([0.05])), 1.0)


def test_gk_distance_to_the_conjugate_point(frame100, rng):
    m = ModelManifold.flat(2, 1.0)
    z = 0.35 * (rng.random((1000, 2)) - 0.5 + 1j * (rng.random((1000, 2)) - 0.5))
    d = gk_distance(m, frame100, z, m.involution(z))
    assert np.allclose(d, 2 * frame100.sqrt_k * np.linalg.norm(z.imag, axis=1))


def test_flat_ball_domain(flat1):
    flat1.check_domain(np.array([0.6 + 0.8j]))
    with pytest.raises(DomainError):
        flat1.check_domain(np.array([0.8 + 0.8j]))


def test_real_volumes():
    assert ModelManifold.torus(2).real_volume() == 1.0
    assert math.isclose(ModelManifold.flat(1, 0.5).real_volume(), 1.0)
    assert math.isclose(ModelManifold.flat(2, 1.0).real_volume(), math.pi)


@pytest.mark.parametrize("n", [0, 4])
def test_dimension_range(n):
    with pytest.raises(DomainError):
        ModelManifold.torus(n)


def test_scaled_frame_rejects_nonpositive_k():
    with pytest.raises(DomainError):
        ScaledFrame(0)


def test_real_grid_cell_diameter(torus1, frame100):
    g = real_grid(torus1, frame100, per_gk_unit=8)
    assert g.shape == (80,)
    assert math.isclose(g.cell_diameter_gk, 0.125)
    assert g.require(0.2) is g
    assert g.refined(2).shape == (160,)


def test_coarse_grid_reports_hint(torus1, frame100):
    g = real_grid(torus1, frame100, per_gk_unit=2)
    with pytest.raises(ResolutionError) as info:
        g.require(0.2)
    assert "factor" in info.value.hint


def test_flat_grid_points_stay_in_ball():
    m = ModelManifold.flat(2, 1.0)
    g = real_grid(m, ScaledFrame(25), per_gk_unit=4)
    z = grid_points_complex(m, g, real_only=True)
    assert np.all(np.sqrt(np.sum(np.abs(z) ** 2, axis=1)) <= 1.0 + 1e-12)
    assert len(z) < len(g.points())


def test_torus_lattice_sites(torus1, frame100):
    lattice = real_lattice(torus1, frame100, 2.0)
    assert lattice.per_axis == 5
    assert np.allclose(lattice.points[:, 0].real, [0.1, 0.3, 0.5, 0.7, 0.9])
    assert np.all(lattice.points.imag == 0)


def test_oversized_mesh_gives_single_site(torus1, frame100):
    lattice = real_lattice(torus1, frame100, 20.0)
    assert lattice.degenerate
    assert len(lattice.points) == 1


def test_flat_lattice_is_symmetric_about_origin(flat1, frame100):
    pts = real_lattice(flat1, frame100, 2.0).points[:, 0].real
    assert np.allclose(np.sort(pts), np.sort(-pts))
    assert np.min(np.diff(np.sort(pts))) * 10 >= 2.0 - 1e-9


def test_ball_net_colors_are_closed_and_separated(torus1, frame100):
    net = colored_ball_net(torus1, frame100, 5.0)
    for color in net.colors:
        c = color.centers[:, 0]
        assert np.allclose(torus1.wrap(np.conj(c)), c[color.partner])
        for i in range(len(c)):
            for j in range(i + 1, len(c)):
                if color.partner[i] == j:
                    continue
                d = abs(torus1.displacement(c[i], c[j])) * frame100.sqrt_k
                assert d >= 5.0 - 1e-9


def test_ball_net_covers_torus(torus1, frame100, rng):
    centers = colored_ball_net(torus1, frame100, 5.0).all_centers()[:, 0]
    z = rng.random(500) + 1j * rng.random(500)
    d = np.abs(torus1.displacement(z[:, None], centers[None, :])).min(axis=1) * frame100.sqrt_k
    assert np.all(d <= 1.0)


def test_only_real_centers_touch_the_real_locus(torus1, frame100):
    centers = colored_ball_net(torus1, frame100, 5.0).all_centers()[:, 0]
    im = np.abs(torus1.displacement(0.0, 1j * centers.imag))
    near = im * frame100.sqrt_k < 1.0
    assert np.all(centers.imag[near] == 0)


def test_ball_net_too_small_k(torus1):
    with pytest.raises(DomainError):
        colored_ball_net(torus1, ScaledFrame(4), 5.0)


@pytest.mark.parametrize("D", [3.0, 5.0])
def test_color_count_does_not_grow_with_k(torus1, D):
    assert colored_ball_net(torus1, ScaledFrame(100), D).n_colors == \
        colored_ball_net(torus1, ScaledFrame(400), D).n_colors


def test_flat_ball_net_pairs_conjugates(flat1, frame100):
    net = colored_ball_net(flat1, frame100, 5.0)
    for color in net.colors:
        c = color.centers[:, 0]
        assert np.allclose(np.conj(c), c[color.partner])
        assert np.all(c[color.fixed].imag == 0)
