import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from plasmon.errors import NearSingularError
from plasmon.geometry import make_ellipse, make_star, make_system, place_pair, transform
from plasmon.npop import assemble, resolve, spectral_distance, spectrum
from plasmon.polarization import ellipse_eigenvalues


def _matrix(*curves):
    return assemble(make_system(curves))


def test_circle_matrix_is_rank_one(unit_circle):
    m = _matrix(unit_circle)
    expected = np.outer(np.ones(128), unit_circle.weights) / (4 * math.pi)
    assert_allclose(m.entries, expected, atol=1e-15)


def test_circle_spectrum_half_and_zeros(unit_circle):
    spec = spectrum(_matrix(unit_circle))
    values = spec.real_sorted()
    assert values[0] == pytest.approx(0.5, abs=1e-11)
    assert_allclose(values[1:], 0.0, atol=1e-11)
    assert spec.imag_defect <= 1e-11
    assert spec.n_nodes == 128


def test_ellipse_spectrum_contains_twin_pairs(ellipse):
    values = spectrum(_matrix(ellipse)).eigenvalues
    for target in (0.5, 1 / 6, -1 / 6, 1 / 18, -1 / 18):
        assert np.min(np.abs(values - target)) <= 1e-6


def test_ellipse_spectrum_converges_with_resolution(ellipse):
    coarse = spectrum(_matrix(ellipse)).real_sorted()[:6]
    fine = spectrum(_matrix(make_ellipse(1.0, 0.5, n_nodes=512))).real_sorted()[:6]
    assert_allclose(coarse, fine, atol=1e-8)


def test_ellipse_spectrum_matches_analytic_catalog(ellipse):
    values = spectrum(_matrix(ellipse)).real_sorted()
    catalog = ellipse_eigenvalues(1.0, 0.5, n_terms=4)
    assert_allclose(values[:5], catalog[:5], atol=1e-8)


def test_star_spectrum_bounded_by_half(star):
    spec = spectrum(_matrix(star))
    assert spec.max_real == pytest.approx(0.5, abs=1e-8)
    assert np.all(spec.eigenvalues.real <= 0.5 + 1e-8)


def test_spectrum_invariant_under_rigid_motion_and_scaling(ellipse):
    base = spectrum(_matrix(ellipse)).real_sorted()[:10]
    moved = transform(ellipse, rotation=0.7, translation=(2.0, -3.0), scale=3.5)
    other = spectrum(_matrix(moved)).real_sorted()[:10]
    assert_allclose(other, base, atol=1e-9)


def test_spectral_distance(unit_circle):
    spec = spectrum(_matrix(unit_circle))
    assert spectral_distance(0.5 + 0.1j, spec) == pytest.approx(0.1, abs=1e-11)
    assert spectral_distance(-0.2j, spec) == pytest.approx(0.2, abs=1e-11)


def test_resolve_disk_normals(unit_circle):
    m = _matrix(unit_circle)
    lam = 0.3 + 0.1j
    result = resolve(m, lam, m.normals)
    # K*[ν_j] = 0 для диска
    assert_allclose(result.solutions, m.normals / lam, atol=1e-12)
    assert np.all(result.residuals < 1e-12)
    assert result.rcond > 1e-2


def test_resolve_keeps_vector_shape(unit_circle):
    m = _matrix(unit_circle)
    result = resolve(m, 0.2 + 0.05j, m.normals[:, 0])
    assert result.solutions.shape == (128,)
    assert result.residuals.shape == (1,)


def test_resolve_rejects_exact_eigenvalue(unit_circle):
    m = _matrix(unit_circle)
    with pytest.raises(NearSingularError) as info:
        resolve(m, 0.5, m.normals)
    assert info.value.nearest_eigenvalue == pytest.approx(0.5, abs=1e-11)


def test_resolve_rejects_ill_conditioned_system(unit_circle):
    m = _matrix(unit_circle)
    with pytest.raises(NearSingularError) as info:
        resolve(m, 0.01j, m.normals, rcond_min=0.5)
    assert info.value.rcond < 0.5


def test_resolve_reads_threshold_from_environment(monkeypatch, unit_circle):
    m = _matrix(unit_circle)
    monkeypatch.setenv("PLASMON_RCOND_MIN", "0.5")
    with pytest.raises(NearSingularError):
        resolve(m, 0.01j, m.normals)


def test_block_structure_of_pair(unit_circle, ellipse):
    left, right = place_pair(unit_circle, ellipse, 1.0)
    m = assemble(make_system([left, right]))
    assert m.n_total == 128 + 256
    assert m.n_particles == 2
    assert m.block(0, 0).shape == (128, 128)
    assert m.block(0, 1).shape == (128, 256)
    assert m.block(1, 0).shape == (256, 128)
    # диагональные блоки совпадают с матрицами отдельных частиц
    assert_allclose(m.block(0, 0), _matrix(left).entries, atol=1e-15)


def test_pair_far_apart_decouples(unit_circle):
    left, right = place_pair(unit_circle, unit_circle, 10.0)
    values = spectrum(assemble(make_system([left, right]))).real_sorted()
    assert_allclose(values[:2], 0.5, atol=2e-2)
    assert_allclose(values[2:], 0.0, atol=2e-2)


def test_spectrum_is_cached(unit_circle):
    m = _matrix(unit_circle)
    assert m.cached_spectrum() is m.cached_spectrum()


def test_star_with_more_nodes_keeps_leading_values():
    coarse = spectrum(_matrix(make_star(1.0, 0.3, 5, n_nodes=256))).real_sorted()[:4]
    fine = spectrum(_matrix(make_star(1.0, 0.3, 5, n_nodes=384))).real_sorted()[:4]
    assert_allclose(coarse, fine, atol=1e-6)


def _unpaired(values, tol=1e-8):
    """Собственные значения вне {0, 1/2} без партнёра −λ."""
    values = np.asarray(values).real
    candidates = values[(np.abs(values) > tol) & (np.abs(values - 0.5) > tol)]
    return [v for v in candidates if np.min(np.abs(values + v)) > tol]


@pytest.mark.parametrize("shape", ["ellipse", "star"])
def test_spectrum_is_twin_symmetric(shape, request):
    curve = request.getfixturevalue(shape)
    assert _unpaired(spectrum(_matrix(curve)).eigenvalues) == []


@pytest.mark.parametrize(
    "build",
    [lambda n: make_ellipse(1.0, 0.5, n_nodes=n), lambda n: make_star(1.0, 0.3, 5, n_nodes=n)],
    ids=["ellipse", "star"],
)
def test_leading_eigenvalues_converge_geometrically(build):
    leading = [spectrum(_matrix(build(n))).real_sorted()[:6] for n in (64, 128, 256, 512)]
    changes = [float(np.max(np.abs(b - a))) for a, b in zip(leading, leading[1:])]
    for earlier, later in zip(changes, changes[1:]):
        assert later <= max(earlier, 1e-12)
    assert changes[-1] <= 1e-8
