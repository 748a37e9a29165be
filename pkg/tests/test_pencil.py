import numpy as np
import pytest

from src.constructions import build_pencil_pair
from src.errors import PairTransversalityError, SymmetryError
from src.fields import QUADRIC, UNIT, bump_field, polynomial_model, tau
from src import config
from src.model import ModelManifold, ScaledFrame, ambient_grid, real_grid, to_complex
from src.pencil import (PencilData, base_locus, certify, critical_set, dF_transversality, hessian_certificate,
                        make_pencil, model_v_certificate, reality_sup, transversalize_dF)


@pytest.fixture
def flat_pencil():
    """F = u^2 - 1/2 exactly: both bumps share rate and gauge."""
    m = ModelManifold.flat(1, 0.5)
    s0, s1 = build_pencil_pair(m, ScaledFrame(100))
    return make_pencil(s0, s1, m, 0.1)


def test_single_real_critical_point(flat_pencil):
    crit = critical_set(flat_pencil, chi=0.2)
    assert len(crit) == 1
    c = crit[0]
    assert abs(c.point[0]) < 1e-8
    assert c.value == pytest.approx(-0.5, abs=1e-9)
    assert c.hessian_min_sv == pytest.approx(2.0, rel=1e-4)
    assert c.real
    assert flat_pencil.rho0 == np.inf
    assert len(flat_pencil.crit_frame()) == 1


def test_model_v_certificate(flat_pencil):
    cert = model_v_certificate(flat_pencil, np.array([0j]))
    assert cert.min_sv == pytest.approx(2.0, rel=1e-4)
    assert cert.residue < 1e-4
    assert not cert.degenerate


def test_dF_transversality_of_exact_model(flat_pencil):
    assert dF_transversality(flat_pencil, threshold=10.0) == pytest.approx(2.0, rel=1e-4)


def test_certify_passes_all_items(flat_pencil):
    items = certify(flat_pencil)
    assert [i.item for i in items] == [1, 2, 3, 4]
    assert all(i.passed for i in items)
    assert flat_pencil.pair_margin == np.inf


def test_hessian_certificate_on_polynomials():
    def separated(z):
        return np.column_stack([2 * z[:, 0], 6 * z[:, 1]])

    cert = hessian_certificate(separated, np.array([0.1j, 0.2]), 1e-3)
    assert cert.min_sv == pytest.approx(2.0)
    assert cert.max_sv == pytest.approx(6.0)
    assert cert.residue == pytest.approx(0.0, abs=1e-9)

    def rank_one(z):
        w = 2 * z[:, 0] + 2 * z[:, 1]
        return np.column_stack([w, w])

    assert hessian_certificate(rank_one, np.zeros(2, dtype=complex), 1e-3).degenerate


def test_non_real_s1_is_refused():
    m = ModelManifold.flat(1, 0.5)
    s0, s1 = build_pencil_pair(m, ScaledFrame(100))
    with pytest.raises(SymmetryError):
        make_pencil(s0, s0.scale(1j), m, 0.1)


def test_dependent_pair_is_refused():
    m = ModelManifold.flat(2, 0.5)
    s0 = tau(m, ScaledFrame(25), [0.0, 0.0])
    with pytest.raises(PairTransversalityError) as info:
        make_pencil(s0, s0.scale(2.0), m, 0.5)
    assert info.value.margin < 1e-3


def test_reality_sup_detects_asymmetric_s1():
    m = ModelManifold.flat(1, 0.5)
    f = ScaledFrame(100)
    s0, s1 = build_pencil_pair(m, f)
    bad = s1 + bump_field(m, f, [0.1 + 0.05j], 0.3, UNIT, 0.2, 10.0, holomorphic_gauge=True)
    z = to_complex(ambient_grid(m, f, per_gk_unit=2).points())
    z = z[np.abs(z[:, 0]) <= 0.5]
    assert reality_sup(PencilData(s0, bad, m, 0.1), z) > 1e-3
    assert reality_sup(PencilData(s0, s1, m, 0.1), z) < 1e-9


def test_base_locus_is_closed_under_conjugation():
    m = ModelManifold.flat(2, 0.5)
    f = ScaledFrame(25)
    s0 = bump_field(m, f, [0.0, 0.0], 1.0, QUADRIC, 0.2, 10.0)
    s1 = bump_field(m, f, [0.0, 0.0], 1.0, polynomial_model([(1, 0), (0, 0)], [1.0, -1.0]), 0.2, 10.0)
    p = make_pencil(s0, s1, m, 1.0, pair_eta=1e-6)
    points = sorted(base_locus(p), key=lambda b: b.point[1].imag)
    assert len(points) == 2
    # u1 = 1 and u2 = +-i/sqrt 2, in g units
    expected = np.array([[0.2, -0.2j / np.sqrt(2)], [0.2, 0.2j / np.sqrt(2)]])
    assert np.allclose([b.point for b in points], expected, atol=1e-8)
    assert np.allclose(points[0].point, np.conj(points[1].point))
    assert all(b.residual < 1e-10 for b in points)


def test_base_locus_needs_two_dimensions(flat_pencil):
    with pytest.raises(ValueError):
        base_locus(flat_pencil)


@pytest.mark.slow
def test_degenerate_critical_point_is_split():
    m = ModelManifold.flat(1, 0.5)
    f = ScaledFrame(100)
    s0 = bump_field(m, f, [0.0], 1.0, UNIT, 0.2, 10.0, holomorphic_gauge=True)
    s1 = bump_field(m, f, [0.0], 1.0, polynomial_model([(3,)], [1.0]), 0.2, 10.0, holomorphic_gauge=True)
    p = make_pencil(s0, s1, m, 0.1)
    before = critical_set(p, chi=0.2)
    assert len(before) == 1
    assert before[0].hessian_min_sv < 1e-3

    out, diagnostics = transversalize_dF(p, target=2.0)
    assert diagnostics['perturbed'] >= 1
    after = critical_set(out, chi=0.2)
    assert len(after) > len(before)
    assert all(c.hessian_min_sv > 1e-3 for c in after)
    assert certify(out)[3].passed


def _torus_pencil(k):
    m = ModelManifold.torus(2)
    f = ScaledFrame(k)
    s0, s1 = build_pencil_pair(m, f)
    C0 = float(np.max(np.abs(s0.evaluate(real_grid(m, f, per_gk_unit=4).points().astype(complex)))))
    chi = config.CHI_FRACTION * C0
    p = make_pencil(s0, s1, m, config.EPS_FRACTION * chi)
    critical_set(p, chi=chi)
    return p


@pytest.mark.slow
def test_torus_pencil_is_real_and_gamma_stays_local_in_k():
    spreads = []
    for k in (36, 64):
        p = _torus_pencil(k)
        assert p.reality_sup < 1e-8
        assert np.isfinite(p.gamma_stats.max_distance)
        spreads.append(p.gamma_stats.max_distance)
    assert spreads[1] == pytest.approx(spreads[0], rel=0.25)
