"""
Модуль дальнего поля: падающая плоская волна, фундаментальное решение Γ^k,
диадная функция Грина и главный δ³-член рассеянного электрического поля

    E − E^i = −δ³ω²μ_m G(x,z) M^e E^i(z) − δ³(iωμ_m/ε_m) ∇×G(x,z) M^h H^i(z).

Все функции векторизованы: точки передаются массивом (..., 3).
"""
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from plasmon.errors import ConfigError, FarFieldDomainError
from plasmon.polarization import PolarizationTensor

UNIT_TOLERANCE = 1e-14

TensorLike = Union[PolarizationTensor, np.ndarray]


@dataclass(frozen=True, eq=False)
class PlaneWave:
    """Плоская волна E^i = p·e^{ik_m d·x} в однородной фоновой среде."""

    direction: np.ndarray
    polarization: np.ndarray
    omega: float
    eps_m: float
    mu_m: float

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        p = np.asarray(self.polarization, dtype=complex)
        if d.shape != (3,) or p.shape != (3,):
            raise ConfigError("Направление и поляризация должны быть 3-векторами")
        if abs(np.linalg.norm(d) - 1.0) > UNIT_TOLERANCE:
            raise ConfigError(f"Направление волны должно быть единичным, |d| = {np.linalg.norm(d):.17g}")
        if abs(np.dot(d, p)) > UNIT_TOLERANCE * max(np.linalg.norm(p), 1e-300):
            raise ConfigError("Поляризация должна быть ортогональна направлению (d·p = 0)")
        if not (self.omega > 0 and self.eps_m > 0 and self.mu_m > 0):
            raise ConfigError("omega, eps_m и mu_m должны быть положительными")
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "polarization", p)

    @property
    def k_m(self) -> float:
        return self.omega * math.sqrt(self.eps_m * self.mu_m)


def plane_wave(
    direction: Sequence[float],
    polarization: Sequence[complex],
    omega: float,
    eps_m: float,
    mu_m: float,
) -> PlaneWave:
    """Нормирует направление и убирает из поляризации продольную составляющую."""
    d = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(d)
    if norm == 0:
        raise ConfigError("Направление волны не может быть нулевым")
    d = d / norm
    p = np.asarray(polarization, dtype=complex)
    p = p - np.dot(d, p) * d
    if np.linalg.norm(p) == 0:
        raise ConfigError("Поляризация параллельна направлению волны")
    return PlaneWave(direction=d, polarization=p, omega=omega, eps_m=eps_m, mu_m=mu_m)


def incident_fields(wave: PlaneWave, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    E^i = p·e^{ik_m d·x}, H^i = (k_m/(ωμ_m))·(d×p)·e^{ik_m d·x}.

    Returns:
        (E, H) той же формы, что x
    """
    x = np.asarray(x, dtype=float)
    phase = np.exp(1j * wave.k_m * (x @ wave.direction))
    e_field = phase[..., None] * wave.polarization
    h_amplitude = wave.k_m / (wave.omega * wave.mu_m) * np.cross(wave.direction, wave.polarization)
    h_field = phase[..., None] * h_amplitude
    return e_field, h_field


def _radius(x: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0):
        raise ConfigError("Γ^k и функция Грина не определены в совпадающих точках")
    return r


def gamma_k(x: np.ndarray, k: complex) -> np.ndarray:
    """Γ^k(x) = −e^{ik|x|}/(4π|x|)."""
    r = _radius(np.asarray(x, dtype=float))
    return -np.exp(1j * k * r) / (4.0 * np.pi * r)


def grad_gamma_k(x: np.ndarray, k: complex) -> np.ndarray:
    """∇Γ^k(x) = e^{ikr}(1 − ikr)/(4πr²)·x̂."""
    x = np.asarray(x, dtype=float)
    r = _radius(x)
    radial = np.exp(1j * k * r) * (1.0 - 1j * k * r) / (4.0 * np.pi * r**2)
    return (radial / r)[..., None] * x


def hessian_gamma_k(x: np.ndarray, k: complex) -> np.ndarray:
    """
    Гессиан D²Γ^k в замкнутой форме:
    e^{ikr}/(4πr³)·[(k²r² + 2ikr − 2)·x̂x̂ᵀ + (1 − ikr)·(I − x̂x̂ᵀ)].
    """
    x = np.asarray(x, dtype=float)
    r = _radius(x)
    unit = x / r[..., None]
    outer = unit[..., :, None] * unit[..., None, :]
    kr = k * r
    prefactor = np.exp(1j * kr) / (4.0 * np.pi * r**3)
    radial = (kr**2 + 2j * kr - 2.0)[..., None, None]
    transverse = np.asarray(1.0 - 1j * kr)[..., None, None]
    return prefactor[..., None, None] * (radial * outer + transverse * (np.eye(3) - outer))


def dyadic_green(x: np.ndarray, z: np.ndarray, k_m: complex, eps_m: float) -> np.ndarray:
    """
    G(x, z) = ε_m(Γ^{k_m}(x−z)·I + D²Γ^{k_m}(x−z)/k_m²).

    Raises:
        ConfigError: x = z или k_m = 0
    """
    if k_m == 0:
        raise ConfigError("Диадная функция Грина требует k_m ≠ 0")
    diff = np.asarray(x, dtype=float) - np.asarray(z, dtype=float)
    gamma = gamma_k(diff, k_m)
    return eps_m * (gamma[..., None, None] * np.eye(3) + hessian_gamma_k(diff, k_m) / k_m**2)


def cross_matrix(a: np.ndarray) -> np.ndarray:
    """Матрица [a]_× с [a]_× v = a × v."""
    a = np.asarray(a)
    out = np.zeros(a.shape[:-1] + (3, 3), dtype=a.dtype)
    out[..., 0, 1] = -a[..., 2]
    out[..., 0, 2] = a[..., 1]
    out[..., 1, 0] = a[..., 2]
    out[..., 1, 2] = -a[..., 0]
    out[..., 2, 0] = -a[..., 1]
    out[..., 2, 1] = a[..., 0]
    return out


def curl_dyadic_green(x: np.ndarray, z: np.ndarray, k_m: complex, eps_m: float) -> np.ndarray:
    """∇×G(x, z) = ε_m ∇Γ^{k_m}(x−z) × I (столбцы — роторы столбцов G)."""
    diff = np.asarray(x, dtype=float) - np.asarray(z, dtype=float)
    return eps_m * cross_matrix(grad_gamma_k(diff, k_m))


def _as_matrix(tensor: Optional[TensorLike]) -> np.ndarray:
    if tensor is None:
        return np.zeros((3, 3), dtype=complex)
    entries = tensor.entries if isinstance(tensor, PolarizationTensor) else np.asarray(tensor, dtype=complex)
    if entries.shape != (3, 3):
        raise ConfigError(f"Для дальнего поля нужен тензор 3×3, получено {entries.shape}")
    return entries


@dataclass(frozen=True, eq=False)
class FarFieldJob:
    """Задание на расчёт рассеянного поля одной частицы."""

    z: np.ndarray
    delta: float
    Me: TensorLike
    Mh: TensorLike
    wave: PlaneWave
    eval_points: np.ndarray
    r_min: Optional[float] = None

    def __post_init__(self):
        if not self.delta > 0:
            raise ConfigError(f"Размер частицы delta должен быть положительным, получено {self.delta}")
        points = np.atleast_2d(np.asarray(self.eval_points, dtype=float))
        if points.shape[-1] != 3:
            raise ConfigError("Точки наблюдения должны быть 3-векторами")
        object.__setattr__(self, "z", np.asarray(self.z, dtype=float))
        object.__setattr__(self, "eval_points", points)
        if self.r_min is None:
            object.__setattr__(self, "r_min", 10.0 * self.delta)

    def offending_points(self) -> List[int]:
        distances = np.linalg.norm(self.eval_points - self.z, axis=-1)
        return [int(i) for i in np.flatnonzero(distances < self.r_min)]


def scattered_field(job: FarFieldJob) -> np.ndarray:
    """
    Главный член рассеянного поля E − E^i в точках job.eval_points.

    Raises:
        FarFieldDomainError: точки ближе r_min к частице
    """
    offending = job.offending_points()
    if offending:
        raise FarFieldDomainError(offending, job.r_min)

    wave = job.wave
    e_z, h_z = incident_fields(wave, job.z)
    electric_moment = _as_matrix(job.Me) @ e_z
    magnetic_moment = _as_matrix(job.Mh) @ h_z

    green = dyadic_green(job.eval_points, job.z, wave.k_m, wave.eps_m)
    curl = curl_dyadic_green(job.eval_points, job.z, wave.k_m, wave.eps_m)
    scale = job.delta**3
    electric = -scale * wave.omega**2 * wave.mu_m * (green @ electric_moment)
    magnetic = -scale * (1j * wave.omega * wave.mu_m / wave.eps_m) * (curl @ magnetic_moment)
    return electric + magnetic


def scattered_field_sum(jobs: Sequence[FarFieldJob]) -> np.ndarray:
    """Суперпозиция дипольных полей нескольких частиц на общих точках наблюдения."""
    if not jobs:
        raise ConfigError("Нет ни одной частицы для расчёта дальнего поля")
    total = scattered_field(jobs[0])
    for job in jobs[1:]:
        if job.eval_points.shape != jobs[0].eval_points.shape or not np.array_equal(job.eval_points, jobs[0].eval_points):
            raise ConfigError("Все частицы должны использовать одни и те же точки наблюдения")
        total = total + scattered_field(job)
    return total


def line_points(start: Sequence[float], stop: Sequence[float], n: int) -> np.ndarray:
    """Равномерные точки на отрезке."""
    if n < 1:
        raise ConfigError("Число точек должно быть >= 1")
    return np.linspace(np.asarray(start, dtype=float), np.asarray(stop, dtype=float), n)


def sphere_points(center: Sequence[float], radius: float, n: int) -> np.ndarray:
    """Точки на сфере по спирали Фибоначчи (детерминированно)."""
    if n < 1 or not radius > 0:
        raise ConfigError("Для сферы направлений нужны n >= 1 и radius > 0")
    i = np.arange(n) + 0.5
    polar = np.arccos(1.0 - 2.0 * i / n)
    azimuth = np.pi * (1.0 + 5.0**0.5) * i
    directions = np.column_stack(
        (np.sin(polar) * np.cos(azimuth), np.sin(polar) * np.sin(azimuth), np.cos(polar))
    )
    return np.asarray(center, dtype=float) + radius * directions
