import math

import numpy as np
import pytest

from conftest import random_params
from qdecoh.errors import ConfigError
from qdecoh.model import ModelParams, analytic_spectrum, build_hamiltonian
from qdecoh.qmath import hermitian_eigendecompose


def example_params(**over):
    kw = dict(j_plus=1.0, j_minus=0.5, j_z=1.0, dm=1.0, field=1.0, inhomogeneity=0.5, gamma=0.0)
    kw.update(over)
    return ModelParams(**kw)


def test_hamiltonian_all_zero():
    h = build_hamiltonian(ModelParams(0, 0, 0, 0, 0, 0, 0))
    np.testing.assert_array_equal(h, np.zeros((4, 4)))


def test_hamiltonian_entries():
    h = build_hamiltonian(example_params())
    assert h[0, 0] == 1.5 and h[1, 1] == 0 and h[2, 2] == -1 and h[3, 3] == -0.5
    assert h[0, 3] == h[3, 0] == 0.5
    assert h[1, 2] == 1 + 1j and h[2, 1] == 1 - 1j
    np.testing.assert_array_equal(h, h.conj().T)


def test_from_couplings():
    p = ModelParams.from_couplings(1.5, 0.5, 1.0, dm=0.0, field=0.0, inhomogeneity=0.0, gamma=0.1)
    assert (p.j_plus, p.j_minus) == (1.0, 0.5)


def test_spectrum_example():
    sd = analytic_spectrum(example_params())
    assert sd.eta == pytest.approx(1.5)
    assert sd.mu == pytest.approx(1.1180339887, abs=1e-10)
    np.testing.assert_allclose(sd.energies, [1.0, -2.0, 1.6180339887, -0.6180339887], atol=1e-10)
    h = build_hamiltonian(example_params())
    for k in range(4):
        v = sd.vectors[:, k]
        assert np.linalg.norm(h @ v - sd.energies[k] * v) <= 1e-12


def test_xy_anisotropic_gives_bell_states():
    p = ModelParams.from_couplings(1.0, 0.5, 1.0, dm=0.0, field=0.0, inhomogeneity=0.0, gamma=0.0)
    sd = analytic_spectrum(p)
    s = 1 / math.sqrt(2)
    bells = [np.array(v) for v in ([0, s, s, 0], [0, s, -s, 0], [s, 0, 0, s], [s, 0, 0, -s])]
    for k in range(4):
        assert abs(np.vdot(bells[k], sd.vectors[:, k])) == pytest.approx(1.0)


def test_zero_j_minus_is_flagged():
    p = example_params(j_minus=0.0, field=0.0)
    sd = analytic_spectrum(p)
    assert sd.flags.mu_zero and sd.flags.outer
    h = build_hamiltonian(p)
    for k in range(4):
        v = sd.vectors[:, k]
        assert np.linalg.norm(h @ v - sd.energies[k] * v) <= 1e-10


def test_normalizers_match_closed_form_coefficients():
    sd = analytic_spectrum(example_params())
    # coefficient of |01> in the inner vectors and of |11> in the outer vectors
    assert abs(sd.vectors[1, 0]) == pytest.approx(sd.normalizers[0], abs=1e-12)
    assert abs(sd.vectors[1, 1]) == pytest.approx(sd.normalizers[1], abs=1e-12)
    assert abs(sd.vectors[3, 2]) == pytest.approx(sd.normalizers[2], abs=1e-12)
    assert abs(sd.vectors[3, 3]) == pytest.approx(sd.normalizers[3], abs=1e-12)


@pytest.mark.parametrize("zeroed", [(), ("j_minus", "field"), ("j_plus", "dm"),
                                    ("j_plus", "dm", "inhomogeneity"), ("j_minus",),
                                    ("dm", "inhomogeneity", "field")])
def test_random_spectra_match_numeric(rng, zeroed):
    for _ in range(1000 // 6 + 1):
        p = random_params(rng).replace(**{k: 0.0 for k in zeroed})
        sd = analytic_spectrum(p)
        h = build_hamiltonian(p)
        np.testing.assert_allclose(np.sort(sd.energies),
                                   np.sort(hermitian_eigendecompose(h).eigenvalues), atol=1e-10)
        for k in range(4):
            v = sd.vectors[:, k]
            assert np.linalg.norm(h @ v - sd.energies[k] * v) <= 1e-10
        assert np.max(np.abs(sd.vectors.conj().T @ sd.vectors - np.eye(4))) <= 1e-10


def test_field_and_inhomogeneity_reflection(rng):
    for _ in range(50):
        p = random_params(rng)
        q = p.replace(field=-p.field, inhomogeneity=-p.inhomogeneity)
        np.testing.assert_allclose(np.sort(analytic_spectrum(p).energies),
                                   np.sort(analytic_spectrum(q).energies), atol=1e-12)


def test_invalid_params():
    with pytest.raises(ConfigError):
        example_params(gamma=-0.1)
    with pytest.raises(ConfigError):
        example_params(field=float("nan"))
