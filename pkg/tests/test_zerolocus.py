import math

import numpy as np
import pytest

from src.constructions import (LatticeConfig, build_concentrated_control, build_full_torus_section,
                               build_nonvanishing_section, build_spheres_section)
from src.errors import DegenerateVertexError, SymmetryError
from src.fields import QUADRIC, UNIT, bump_field, tau
from src.model import ModelManifold, ScaledFrame, real_grid
from src.transversality import eta_transversality
from src.zerolocus import (_cell_shares, complex_zero_count, equidistribution, export_segments, packing_check,
                           polish_zeros, real_components)


def test_lattice_roots_on_the_circle(torus1, frame100):
    s = build_spheres_section(torus1, frame100)
    inv = real_components(s, torus1, real_grid(torus1, frame100, per_gk_unit=8))
    assert inv.count == 10
    roots = np.sort(np.concatenate([c.points[:, 0] for c in inv.components]))
    # two roots per site, mirrored about it; neighbours pull them inward from 1/sqrt(2k)
    half = 0.5 * (roots[1::2] - roots[0::2])
    assert np.allclose(0.5 * (roots[1::2] + roots[0::2]), np.arange(5) * 0.2 + 0.1, atol=1e-3)
    assert np.allclose(half, half[0], atol=1e-3)
    assert 0.04 < half[0] < 0.1 / math.sqrt(2)


def test_inradius_of_lattice_components(torus1, frame100):
    s = build_spheres_section(torus1, frame100)
    g = real_grid(torus1, frame100, per_gk_unit=8)
    inv = real_components(s, torus1, g)
    # each root owns the half-gap between its site and the next midpoint
    for c in inv.components:
        assert 0.05 - 1e-12 <= c.inradius <= 0.05 + g.spacing[0] + 1e-12
    eta = eta_transversality(s, g, 0.25, restrict_real=True).eta
    cert = packing_check(inv, torus1, frame100, eta)
    assert cert.ok and cert.eta_ok
    assert math.isclose(cert.implied_C, 1.0)
    assert cert.lhs <= 1.0


def _assert_balls_disjoint(inv, m, slack):
    comps = inv.components
    for i in range(len(comps)):
        for j in range(i + 1, len(comps)):
            d = np.linalg.norm(m.displacement(comps[i].ball_center, comps[j].ball_center).real)
            assert d >= comps[i].inradius + comps[j].inradius - slack


def test_component_balls_are_disjoint_on_the_circle(torus1, frame100):
    g = real_grid(torus1, frame100, per_gk_unit=8)
    inv = real_components(build_spheres_section(torus1, frame100), torus1, g)
    assert all(c.ball_center is not None for c in inv.components)
    _assert_balls_disjoint(inv, torus1, 2 * g.spacing[0] + 1e-12)


def test_count_is_stable_under_refinement(torus1, frame100):
    s = build_spheres_section(torus1, frame100)
    g = real_grid(torus1, frame100, per_gk_unit=8)
    assert real_components(s, torus1, g.refined(2)).count == real_components(s, torus1, g).count


def test_nonvanishing_section_has_no_real_zeros(torus1, frame100):
    s = build_nonvanishing_section(torus1, frame100)
    inv = real_components(s, torus1)
    assert inv.count == 0
    assert packing_check(inv, torus1, frame100).ok


def test_single_pseudo_circle_in_the_plane():
    m = ModelManifold.flat(2, 0.1)
    f = ScaledFrame(100)
    inv = real_components(tau(m, f, [0.0, 0.0]), m, real_grid(m, f, per_gk_unit=8))
    assert inv.count == 1
    radii = np.sqrt(np.sum(inv.components[0].points ** 2, axis=1))
    assert np.allclose(radii, 0.1 / math.sqrt(2), atol=2e-3)
    assert inv.segments is not None


@pytest.mark.slow
def test_planar_lattice_gives_one_circle_per_site(torus2):
    f = ScaledFrame(64)
    s = build_spheres_section(torus2, f, LatticeConfig(4.0))
    g = real_grid(torus2, f, per_gk_unit=8)
    inv = real_components(s, torus2, g)
    assert inv.count == 4
    assert all(c.size >= 8 for c in inv.components)
    _assert_balls_disjoint(inv, torus2, 2 * np.linalg.norm(g.spacing))


def test_asymmetric_section_is_refused(torus1, frame100):
    s = bump_field(torus1, frame100, [0.3], 1j, QUADRIC)
    with pytest.raises(SymmetryError):
        real_components(s, torus1)


def test_identically_zero_region_cannot_be_marched(torus1, frame100):
    s = bump_field(torus1, frame100, [0.5], 1.0, QUADRIC, cutoff=2.0)
    with pytest.raises(DegenerateVertexError):
        real_components(s, torus1)


def test_export_writes_crossing_points(torus1, frame100, tmp_path):
    inv = real_components(build_spheres_section(torus1, frame100), torus1)
    lines = export_segments(inv, tmp_path / 'zeros.txt').read_text().splitlines()
    assert lines[0].startswith('#')
    assert len(lines) == 1 + 10


def test_export_writes_segments_in_the_plane(tmp_path):
    m = ModelManifold.flat(2, 0.1)
    f = ScaledFrame(100)
    inv = real_components(tau(m, f, [0.0, 0.0]), m, real_grid(m, f, per_gk_unit=8))
    lines = export_segments(inv, tmp_path / 'seg.txt').read_text().splitlines()
    assert len(lines) == 1 + len(inv.segments)
    assert len(lines[1].split()) == 4


def test_winding_counts_quadric_roots(frame100):
    m = ModelManifold.flat(1, 0.15)
    s = bump_field(m, frame100, [0.0], 1.0, QUADRIC, rate=1.0, cutoff=4.0, holomorphic_gauge=True)
    census = complex_zero_count(s, m, cells=3)
    assert census.total == 2
    assert census.negative == 0


def test_unit_bump_has_no_complex_zeros(frame100):
    m = ModelManifold.flat(1, 0.15)
    s = bump_field(m, frame100, [0.0], 1.0, UNIT, rate=1.0, cutoff=4.0, holomorphic_gauge=True)
    assert int(complex_zero_count(s, m, cells=3)) == 0


def test_zero_census_needs_one_dimension(torus2):
    with pytest.raises(ValueError):
        complex_zero_count(build_nonvanishing_section(torus2, ScaledFrame(25)), torus2)


@pytest.mark.slow
def test_full_torus_zero_count_grows_linearly(torus1):
    counts = []
    for k in (100, 400):
        census = complex_zero_count(build_full_torus_section(torus1, ScaledFrame(k)), torus1)
        counts.append(census.positive + census.negative)
    assert counts[0] > 0
    assert abs(counts[1] / counts[0] - 4.0) < 0.5


@pytest.mark.slow
def test_equidistribution_flattens_and_control_does_not(torus1):
    f = ScaledFrame(400)
    spread = equidistribution(build_full_torus_section(torus1, f), torus1, cells=16)
    concentrated = equidistribution(build_concentrated_control(torus1, f), torus1, cells=16)
    assert spread.cells == 16
    assert spread.cv < 0.25
    assert concentrated.cv > 1.0
    assert np.all(spread.cell_measures > 0)


@pytest.mark.slow
def test_equidistribution_improves_from_k100_to_k1600(torus1):
    cv = {k: equidistribution(build_full_torus_section(torus1, ScaledFrame(k)), torus1, cells=16).cv
          for k in (100, 1600)}
    assert cv[1600] < cv[100]


def test_cell_shares_split_a_box_across_the_seam():
    shares = _cell_shares(np.array([0.0, 0.3]), 0.1, 4)
    assert np.allclose(shares, [[0.5, 0.0, 0.0, 0.5], [0.0, 1.0, 0.0, 0.0]])
    assert np.allclose(_cell_shares(np.array([0.3]), 0.0, 4), [[0.0, 1.0, 0.0, 0.0]])


def test_polished_zeros_of_a_quadric_bump(frame100):
    m = ModelManifold.flat(1, 0.15)
    s = bump_field(m, frame100, [0.0], 1.0, QUADRIC, rate=1.0, cutoff=4.0, holomorphic_gauge=True)
    zeros, weight = polish_zeros(s, complex_zero_count(s, m, cells=5))
    assert np.allclose(np.sort(zeros.real), [-1 / math.sqrt(200), 1 / math.sqrt(200)], atol=1e-10)
    assert np.allclose(zeros.imag, 0.0, atol=1e-10)
    assert np.array_equal(weight, [1.0, 1.0])


def test_equidistribution_needs_square_cell_count(torus1, frame100):
    with pytest.raises(ValueError):
        equidistribution(build_full_torus_section(torus1, frame100), torus1, cells=15)
