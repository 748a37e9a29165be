import numpy as np
import pytest

from src import fields
from src.errors import DomainError
from src.fields import (CHUNK, QUADRIC, UNIT, Bump, BumpModel, SectionField, bump_field, concentrated_sigma,
                        decay_envelope, empty_field, kappa, parse_field, polynomial_model, serialize_field, sigma_cutoff,
                        symmetrize, symmetry_certificate, tau)
from src.model import ModelManifold, ScaledFrame


def ring(center, radius, count=64):
    theta = 2 * np.pi * np.arange(count) / count
    return (center + radius * np.exp(1j * theta)).reshape(-1, 1)


def test_cutoff_is_floored_at_two():
    assert sigma_cutoff(25) == 2.0
    assert np.isclose(sigma_cutoff(4096), 4.0)


@pytest.mark.parametrize("k", [25, 100, 400])
def test_concentrated_sigma_floor_on_unit_ball(torus1, k):
    f = ScaledFrame(k)
    s = concentrated_sigma(torus1, f, [0.5])
    assert np.isclose(abs(s.evaluate(np.array([[0.5]]))[0]), 1.0)
    for r in (0.25, 0.5, 0.75, 1.0):
        values = np.abs(s.evaluate(ring(0.5, r / f.sqrt_k)))
        assert np.all(values >= 0.5 - 1e-12)


def test_concentrated_sigma_outside_ball(flat1, frame100):
    with pytest.raises(DomainError):
        concentrated_sigma(flat1, frame100, [1.5])


def test_periodic_evaluation(torus1, frame100, rng):
    s = bump_field(torus1, frame100, [0.02 + 0.97j], 0.7 - 0.2j, QUADRIC)
    z = (rng.random(50) + 1j * rng.random(50)).reshape(-1, 1)
    assert np.allclose(s.evaluate(z), s.evaluate(z + 1.0 - 2j))


def test_quadric_bump_at_center(flat1, frame100):
    assert np.isclose(tau(flat1, frame100, [0.0]).evaluate(np.array([[0.0]]))[0], -0.5)


def test_gradient_matches_central_differences(flat1, frame100, rng):
    model = polynomial_model([(2,), (1,), (0,)], [1.0, 0.3j, -0.5])
    s = bump_field(flat1, frame100, [0.1 + 0.05j], 0.8 + 0.3j, model, rate=1.0, cutoff=3.0)
    z = (0.1 + 0.05j + 0.15 * (rng.random(20) - 0.5 + 1j * (rng.random(20) - 0.5))).reshape(-1, 1)
    h = 1e-7
    fd_x = (s.evaluate(z + h) - s.evaluate(z - h)) / (2 * h)
    fd_y = (s.evaluate(z + 1j * h) - s.evaluate(z - 1j * h)) / (2 * h)
    grad = s.gradient(z)
    assert np.allclose(grad[:, 0], fd_x, atol=1e-5)
    assert np.allclose(grad[:, 1], fd_y, atol=1e-5)


def test_gauge_dbar_vanishes_on_plateau(flat1, frame100, rng):
    s = bump_field(flat1, frame100, [0.2], 1.0, QUADRIC, rate=1.0, cutoff=4.0)
    z = 0.2 + (rng.random(30) - 0.5 + 1j * (rng.random(30) - 0.5)) * 0.2   # d <= 1.5 < 2
    assert np.max(np.abs(s.gauge_dbar(z.reshape(-1, 1)))) < 1e-9


def test_holomorphic_gauge_phase_keeps_plateau_holomorphic(flat1, frame100, rng):
    s = bump_field(flat1, frame100, [0.2 + 0.1j], 1.0, QUADRIC, rate=1.0, cutoff=4.0, holomorphic_gauge=True)
    z = 0.2 + 0.1j + (rng.random(30) - 0.5 + 1j * (rng.random(30) - 0.5)) * 0.2
    assert np.max(np.abs(s.gauge_dbar(z.reshape(-1, 1)))) < 1e-9


def test_periodic_gauge_combination_rejected():
    with pytest.raises(ValueError):
        SectionField(100, 1, (), periodic=True, holomorphic_gauge=True)


def test_structural_algebra(torus1, frame100):
    s = bump_field(torus1, frame100, [0.3], 2.0)
    assert (s + s).merged().bumps[0].weight == 4.0
    assert (s - s).merged().bumps == ()
    assert (3 * s).bumps[0].weight == 6.0
    with pytest.raises(ValueError):
        s + empty_field(ModelManifold.torus(1), ScaledFrame(400))


def test_kappa_is_an_involution(torus1, frame100):
    model = polynomial_model([(1,), (0,)], [1.0 + 2j, 0.5j])
    s = bump_field(torus1, frame100, [0.3 + 0.2j], 1.0 - 1j, model)
    assert kappa(kappa(s)) == s
    assert kappa(s).bumps[0].center == (0.3 - 0.2j,)


def test_kappa_evaluates_as_conjugation(torus1, frame100, rng):
    s = bump_field(torus1, frame100, [0.3 + 0.2j], 1.0 - 1j, QUADRIC)
    z = (rng.random(40) + 1j * rng.random(40)).reshape(-1, 1)
    assert np.allclose(kappa(s).evaluate(z), np.conj(s.evaluate(np.conj(z))))


def test_symmetrized_field_is_real_on_real_locus(torus1, frame100, rng):
    s = bump_field(torus1, frame100, [0.4 + 0.05j], 0.3 + 0.9j, QUADRIC)
    sym = symmetrize(s)
    z = (rng.random(100) + 1j * rng.random(100)).reshape(-1, 1)
    assert symmetry_certificate(sym, z).symmetric
    assert not symmetry_certificate(s, z).symmetric
    assert np.max(np.abs(sym.evaluate(rng.random((50, 1)).astype(complex)).imag)) < 1e-12


def test_bump_model_conj_only_touches_polynomials():
    assert UNIT.conj() is UNIT
    p = polynomial_model([(1,)], [2j])
    assert p.conj().coefficients == (-2j,)
    assert BumpModel.from_tag(p.tag) == p


def test_serialized_field_reads_back(torus1, frame100):
    model = polynomial_model([(1,), (0,)], [1.0, -0.25])
    s = SectionField(100, 1, (Bump((0.1 + 0.3j,), 0.7 - 0.1j, model, 0.2, 3.0),
                              Bump((0.55 + 0j,), 1.0 + 0j, QUADRIC, 1.0, 2.1544)), periodic=True)
    assert parse_field(serialize_field(s)) == s


@pytest.mark.parametrize("k", [1000, 8000])
def test_concentrated_sigma_under_decay_envelope(k):
    m = ModelManifold.flat(1, 1.0)
    f = ScaledFrame(k)
    d = np.linspace(0.0, 4.6, 461)
    values = np.abs(concentrated_sigma(m, f, [0.0]).evaluate((d / f.sqrt_k).reshape(-1, 1).astype(complex)))
    assert np.all(values <= decay_envelope(d, k) * np.exp(-d ** 2) + 1e-15)


def test_decay_envelope_refuses_unvalidated_cutoffs():
    assert np.isclose(decay_envelope(3.0, 8000), 20.0)
    with pytest.raises(DomainError):
        decay_envelope(4.5, 10 ** 6)


def test_evaluation_past_one_chunk(torus1, frame100):
    s = concentrated_sigma(torus1, frame100, [0.5])
    values = s.evaluate(np.full((CHUNK + 1, 1), 0.5 + 0j))
    assert values.shape == (CHUNK + 1,)
    assert np.allclose(values, 1.0)


def test_chunked_evaluation_matches_single_pass(torus1, frame100, rng, monkeypatch):
    s = concentrated_sigma(torus1, frame100, [0.5]) + bump_field(torus1, frame100, [0.3 + 0.2j], 0.4 - 0.7j, QUADRIC)
    z = (rng.random(257) + 1j * rng.random(257)).reshape(-1, 1)
    value, grad = s.value_and_gradient(z)
    dbar = s.gauge_dbar(z)
    monkeypatch.setattr(fields, 'CHUNK', 50)
    chunked_value, chunked_grad = s.value_and_gradient(z)
    assert np.allclose(chunked_value, value, rtol=0, atol=1e-12)
    assert np.allclose(chunked_grad, grad, rtol=0, atol=1e-10)
    assert np.allclose(s.gauge_dbar(z), dbar, rtol=0, atol=1e-10)


def test_kappa_gradient_is_conjugate_pullback(torus1, frame100, rng):
    model = polynomial_model([(2,), (1,)], [1.0 - 0.5j, 0.3j])
    s = (bump_field(torus1, frame100, [0.3 + 0.2j], 1.0 - 1j, QUADRIC)
         + bump_field(torus1, frame100, [0.7 + 0.6j], 0.5j, model))
    z = (rng.random(100) + 1j * rng.random(100)).reshape(-1, 1)
    grad = kappa(s).gradient(z)
    mirrored = s.gradient(np.conj(z))
    # d/dx commutes with conjugation, d/dy picks up a sign
    assert np.allclose(grad[:, 0], np.conj(mirrored[:, 0]), rtol=1e-12, atol=1e-10)
    assert np.allclose(grad[:, 1], -np.conj(mirrored[:, 1]), rtol=1e-12, atol=1e-10)
    norms = np.sqrt(np.sum(np.abs(grad) ** 2, axis=1))
    assert np.allclose(norms, np.sqrt(np.sum(np.abs(mirrored) ** 2, axis=1)), rtol=1e-12, atol=1e-10)


def test_symmetrized_sigma_floor_off_the_real_locus(torus1):
    f = ScaledFrame(400)
    x = 0.5 + 0.15j                      # d_k(x, c(x)) = 6
    hat = symmetrize(concentrated_sigma(torus1, f, [x]))
    assert np.isclose(abs(hat.evaluate(np.array([[x]]))[0]), 0.5, atol=1e-9)
    for r in (0.25, 0.5, 0.75, 1.0):
        for center in (x, np.conj(x)):
            values = np.abs(hat.evaluate(ring(center, r / f.sqrt_k)))
            # half the 1/2 floor; the conjugate bump is cut off well before d_k = 5
            assert np.all(values >= 0.25 - 2.0 ** -25)


def test_symmetrize_keeps_real_centred_sigma(torus1, frame100, rng):
    s = concentrated_sigma(torus1, frame100, [0.3])
    hat = symmetrize(s)
    z = (rng.random(50) + 1j * rng.random(50)).reshape(-1, 1)
    assert len(hat.bumps) == 1
    assert np.allclose(hat.evaluate(z), s.evaluate(z), rtol=0, atol=1e-15)
