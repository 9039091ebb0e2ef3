"""
Модуль тензоров поляризации M(λ, D).

Численный тензор строится по матрице Нистрёма:
m_ij = Σ y_i·(λI − K*)⁻¹[ν_j](y)·w(y) по всем частицам системы.
Аналитические тензоры (диск, эллипс, шар) служат независимыми оракулами.
"""
import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from plasmon.errors import ConfigError, PoleError
from plasmon.npop import NPMatrix, resolve

POLE_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class PolarizationTensor:
    """Тензор поляризации d×d с контрастом и происхождением."""

    entries: np.ndarray
    lam: complex
    source: str
    rcond: Optional[float] = None

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    @property
    def frobenius(self) -> float:
        return float(np.linalg.norm(self.entries))

    @property
    def symmetry_defect(self) -> float:
        """‖M − Mᵀ‖_F / ‖M‖_F."""
        norm = self.frobenius
        if norm == 0:
            return 0.0
        return float(np.linalg.norm(self.entries - self.entries.T) / norm)

    def rotated(self, rotation: np.ndarray) -> "PolarizationTensor":
        """R·M·Rᵀ."""
        return PolarizationTensor(
            entries=rotation @ self.entries @ rotation.T,
            lam=self.lam,
            source=self.source,
            rcond=self.rcond,
        )

    def flat(self) -> np.ndarray:
        """Элементы по строкам."""
        return self.entries.reshape(-1)


def pt_numeric(m: NPMatrix, lam: complex) -> PolarizationTensor:
    """
    Численный тензор поляризации (для одной частицы или их объединения).

    Raises:
        NearSingularError: λ попадает в спектр (точный плазмонный резонанс)
    """
    solution = resolve(m, lam, m.normals)
    moments = m.nodes.T @ (solution.solutions * m.weights[:, None])
    return PolarizationTensor(
        entries=moments,
        lam=complex(lam),
        source="numeric",
        rcond=solution.rcond,
    )


def _is_infinite(lam: complex) -> bool:
    return cmath.isinf(complex(lam))


def _isotropic(dim: int, value: complex, lam: complex, source: str) -> PolarizationTensor:
    return PolarizationTensor(
        entries=value * np.eye(dim, dtype=complex),
        lam=complex(lam),
        source=source,
    )


def _check_pole(lam: complex, pole: float, what: str) -> None:
    if abs(complex(lam) - pole) <= POLE_TOLERANCE * max(1.0, abs(pole)):
        raise PoleError(f"{what}: λ={complex(lam):.12g} совпадает с полюсом {pole:.12g}")


def pt_disk(lam: complex, radius: float = 1.0) -> PolarizationTensor:
    """
    M = (π·radius²/λ)·I для диска.

    Raises:
        PoleError: λ = 0 (резонанс диска)
    """
    if not radius > 0:
        raise ConfigError(f"Радиус должен быть положительным, получено {radius}")
    if _is_infinite(lam):
        return _isotropic(2, 0.0, lam, "analytic-disk")
    _check_pole(lam, 0.0, "Диск")
    return _isotropic(2, math.pi * radius**2 / complex(lam), lam, "analytic-disk")


def pt_ellipse(lam: complex, a: float, b: float) -> PolarizationTensor:
    """
    Эллипс с осями вдоль координат: m11 = πab/(λ − q/2), m22 = πab/(λ + q/2), q = (a−b)/(a+b).

    Raises:
        PoleError: λ = ±q/2
    """
    if not (a > 0 and b > 0):
        raise ConfigError(f"Полуоси должны быть положительными, получено a={a}, b={b}")
    area = math.pi * a * b
    entries = np.zeros((2, 2), dtype=complex)
    if not _is_infinite(lam):
        q = (a - b) / (a + b)
        _check_pole(lam, q / 2, "Эллипс, ось x")
        _check_pole(lam, -q / 2, "Эллипс, ось y")
        entries[0, 0] = area / (complex(lam) - q / 2)
        entries[1, 1] = area / (complex(lam) + q / 2)
    return PolarizationTensor(entries=entries, lam=complex(lam), source="analytic-ellipse")


def pt_sphere(lam: complex, radius: float = 1.0) -> PolarizationTensor:
    """
    M = ((4/3)π·radius³/(λ − 1/6))·I для шара (дипольное собственное значение 1/6).

    Raises:
        PoleError: λ = 1/6
    """
    if not radius > 0:
        raise ConfigError(f"Радиус должен быть положительным, получено {radius}")
    if _is_infinite(lam):
        return _isotropic(3, 0.0, lam, "analytic-sphere")
    _check_pole(lam, 1.0 / 6.0, "Шар")
    volume = 4.0 / 3.0 * math.pi * radius**3
    return _isotropic(3, volume / (complex(lam) - 1.0 / 6.0), lam, "analytic-sphere")


def ellipse_eigenvalues(a: float, b: float, n_terms: int = 8) -> np.ndarray:
    """
    Собственные значения K* для эллипса: 1/2 и ±q^i/2, i = 1..n_terms.

    Множитель 1/2 подтверждается численным спектром и полюсами pt_ellipse.
    """
    q = (a - b) / (a + b)
    powers = q ** np.arange(1, n_terms + 1) / 2.0
    values = np.concatenate(([0.5], powers, -powers))
    return np.sort(values)[::-1]


def sphere_eigenvalues(n_terms: int = 8) -> np.ndarray:
    """Собственные значения K* для шара: 1/(2(2i+1)), i = 0..n_terms−1."""
    i = np.arange(n_terms)
    return 1.0 / (2.0 * (2.0 * i + 1.0))
