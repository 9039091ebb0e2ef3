"""
Модуль для работы с оператором Неймана–Пуанкаре K*_D.

Сборка плотной матрицы Нистрёма (правило трапеций), спектр через вещественное
разложение Шура и решение резольвентных систем (λI − K*)φ = g.
"""
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import scipy.linalg
from numba import njit, prange
from scipy.linalg import LinAlgError, LinAlgWarning
from scipy.linalg.lapack import get_lapack_funcs

from plasmon.errors import NearSingularError, SpectrumError
from plasmon.geometry import ParticleSystem
from plasmon.settings import get_settings

TWO_PI = 2.0 * math.pi
FOUR_PI = 4.0 * math.pi


@njit(parallel=True, cache=True)
def _kernel_matrix(nodes, normals, weights, curvatures):
    """Ядро ((x−y)·ν_x)/(2π|x−y|²)·w_j; на диагонали предел κ/(4π)·w_i."""
    n = nodes.shape[0]
    out = np.empty((n, n))
    for i in prange(n):
        x0 = nodes[i, 0]
        x1 = nodes[i, 1]
        n0 = normals[i, 0]
        n1 = normals[i, 1]
        for j in range(n):
            if i == j:
                out[i, j] = curvatures[i] / FOUR_PI * weights[i]
            else:
                d0 = x0 - nodes[j, 0]
                d1 = x1 - nodes[j, 1]
                out[i, j] = (d0 * n0 + d1 * n1) / (d0 * d0 + d1 * d1) / TWO_PI * weights[j]
    return out


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Собственные значения, отсортированные по убыванию вещественной части."""

    eigenvalues: np.ndarray
    n_nodes: int

    @property
    def imag_defect(self) -> float:
        return float(np.max(np.abs(self.eigenvalues.imag))) if self.eigenvalues.size else 0.0

    @property
    def max_real(self) -> float:
        return float(self.eigenvalues.real[0])

    def real_sorted(self) -> np.ndarray:
        return np.sort(self.eigenvalues.real)[::-1]

    def nearest(self, lam: complex) -> complex:
        idx = int(np.argmin(np.abs(self.eigenvalues - lam)))
        return complex(self.eigenvalues[idx])


@dataclass(eq=False)
class NPMatrix:
    """Плотная матрица Нистрёма оператора K*_D (или блочного оператора системы)."""

    entries: np.ndarray
    block_offsets: Tuple[Tuple[int, int], ...]
    weights: np.ndarray
    nodes: np.ndarray
    normals: np.ndarray
    labels: Tuple[str, ...] = ()
    _spectrum: Optional[Spectrum] = field(default=None, repr=False)

    @property
    def n_total(self) -> int:
        return int(self.entries.shape[0])

    @property
    def n_particles(self) -> int:
        return len(self.block_offsets)

    def block(self, i: int, j: int) -> np.ndarray:
        r0, r1 = self.block_offsets[i]
        c0, c1 = self.block_offsets[j]
        return self.entries[r0:r1, c0:c1]

    def cached_spectrum(self) -> Spectrum:
        if self._spectrum is None:
            self._spectrum = spectrum(self)
        return self._spectrum


@dataclass(frozen=True, eq=False)
class ResolventSolution:
    solutions: np.ndarray
    residuals: np.ndarray
    rcond: float


def assemble(system: ParticleSystem) -> NPMatrix:
    """
    Собирает матрицу Нистрёма для системы частиц.

    Внедиагональные блоки — то же ядро между разными границами (оно гладкое,
    поскольку частицы не пересекаются).
    """
    nodes = np.ascontiguousarray(np.vstack([c.points for c in system.curves]))
    normals = np.ascontiguousarray(np.vstack([c.normals for c in system.curves]))
    weights = np.ascontiguousarray(np.concatenate([c.weights for c in system.curves]))
    curvatures = np.ascontiguousarray(np.concatenate([c.curvatures for c in system.curves]))

    entries = _kernel_matrix(nodes, normals, weights, curvatures)
    return NPMatrix(
        entries=entries,
        block_offsets=system.block_offsets,
        weights=weights,
        nodes=nodes,
        normals=normals,
        labels=system.labels,
    )


def _schur_eigenvalues(t: np.ndarray) -> np.ndarray:
    """Собственные значения квазитреугольной матрицы вещественной формы Шура."""
    n = t.shape[0]
    values = np.empty(n, dtype=complex)
    i = 0
    while i < n:
        if i + 1 < n and t[i + 1, i] != 0.0:
            a, b = t[i, i], t[i, i + 1]
            c, d = t[i + 1, i], t[i + 1, i + 1]
            half_trace = 0.5 * (a + d)
            disc = (0.5 * (a - d)) ** 2 + b * c
            root = np.sqrt(complex(disc))
            values[i] = half_trace + root
            values[i + 1] = half_trace - root
            i += 2
        else:
            values[i] = t[i, i]
            i += 1
    return values


def spectrum(m: NPMatrix) -> Spectrum:
    """
    Вычисляет все собственные значения матрицы через вещественное разложение Шура.

    Raises:
        SpectrumError: QR-итерации не сошлись
    """
    try:
        t, _ = scipy.linalg.schur(m.entries, output="real")
    except (LinAlgError, ValueError) as e:
        condition = float(np.linalg.cond(m.entries, 1)) if np.all(np.isfinite(m.entries)) else None
        raise SpectrumError(f"Разложение Шура не сошлось: {e}", condition) from e

    values = _schur_eigenvalues(t)
    order = np.lexsort((-values.imag, -values.real))
    return Spectrum(eigenvalues=values[order], n_nodes=m.n_total)


def spectral_distance(lam: complex, spec: Spectrum) -> float:
    """Расстояние от контраста λ до вычисленного спектра."""
    return float(np.min(np.abs(spec.eigenvalues - lam)))


def resolve(
    m: NPMatrix,
    lam: complex,
    rhs: np.ndarray,
    eps_sing: Optional[float] = None,
    rcond_min: Optional[float] = None,
) -> ResolventSolution:
    """
    Решает (λI − A)φ = rhs одним LU-разложением для всех правых частей.

    Args:
        m: матрица Нистрёма
        lam: спектральный параметр (контраст)
        rhs: вектор (n,) или матрица (n, k) правых частей

    Returns:
        Решения той же формы, что rhs, относительные невязки и оценку rcond

    Raises:
        NearSingularError: rcond < rcond_min или вещественное λ ближе eps_sing
            к собственному значению
    """
    settings = get_settings()
    eps_sing = settings.eps_sing if eps_sing is None else eps_sing
    rcond_min = settings.rcond_min if rcond_min is None else rcond_min

    lam = complex(lam)
    if lam.imag == 0.0:
        spec = m.cached_spectrum()
        nearest = spec.nearest(lam)
        if abs(nearest - lam) < eps_sing:
            raise NearSingularError(lam, nearest, 0.0)

    system = -m.entries.astype(complex)
    system[np.diag_indices_from(system)] += lam

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(system, check_finite=False)
    gecon, = get_lapack_funcs(("gecon",), (lu,))
    anorm = float(np.linalg.norm(system, 1))
    rcond, info = gecon(lu, anorm, norm="1")
    rcond = float(rcond)
    if info != 0 or not np.isfinite(rcond) or rcond < rcond_min:
        nearest = m.cached_spectrum().nearest(lam)
        raise NearSingularError(lam, nearest, rcond if np.isfinite(rcond) else 0.0)

    rhs = np.asarray(rhs)
    single = rhs.ndim == 1
    columns = rhs[:, None] if single else rhs
    phi = scipy.linalg.lu_solve((lu, piv), columns.astype(complex), check_finite=False)

    norms = np.linalg.norm(columns, axis=0)
    norms[norms == 0] = 1.0
    residuals = np.linalg.norm(system @ phi - columns, axis=0) / norms
    return ResolventSolution(
        solutions=phi[:, 0] if single else phi,
        residuals=residuals,
        rcond=rcond,
    )
