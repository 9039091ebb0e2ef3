"""
Модуль дисперсии Друде: ε_c(ω), μ_c(ω), контрасты λ_ε(ω), λ_μ(ω) и волновые числа.

Единицы СИ: ω в рад/с, τ в с, ε в Ф/м, μ в Гн/м.
"""
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from plasmon.errors import ConfigError, DegenerateContrastError, NumericalError

SPEED_OF_LIGHT = 3e8
EPS0_DEFAULT = 9e-12
MU0_DEFAULT = 4e-7 * math.pi
DEGENERATE_CONTRAST = 1e-300
# допустимое расхождение прямого контраста и контраста через ε′, ε″
CONTRAST_RTOL = 1e-12


@dataclass(frozen=True)
class DrudeMaterial:
    """
    Параметры модели Друде и фоновой среды.

    Значения по умолчанию — типичные для золотой наночастицы в воде:
    τ = 1e-14 с, ε_0 = 9e-12 Ф/м, ε_m = 1.33²·ε_0, ω_p = 2e15 1/с, F = 0 (немагнитная частица).
    """

    eps0: float = EPS0_DEFAULT
    mu0: float = MU0_DEFAULT
    omega_p: float = 2e15
    tau: float = 1e-14
    F_fill: float = 0.0
    omega0: float = 5e14
    eps_m: float = 1.33**2 * EPS0_DEFAULT
    mu_m: float = MU0_DEFAULT

    def __post_init__(self):
        for name in ("eps0", "mu0", "omega_p", "tau", "eps_m", "mu_m"):
            value = getattr(self, name)
            if not value > 0:
                raise ConfigError(f"Параметр материала {name} должен быть положительным, получено {value}")
        if not 0 <= self.F_fill <= 1:
            raise ConfigError(f"Фактор заполнения F должен лежать в [0, 1], получено {self.F_fill}")
        if self.omega0 < 0:
            raise ConfigError(f"omega0 не может быть отрицательной, получено {self.omega0}")

    @classmethod
    def from_relative(
        cls,
        eps0: float = EPS0_DEFAULT,
        mu0: float = MU0_DEFAULT,
        omega_p: float = 2e15,
        tau: float = 1e-14,
        F: float = 0.0,
        omega0: float = 5e14,
        eps_m_rel: float = 1.33**2,
        mu_m_rel: float = 1.0,
    ) -> "DrudeMaterial":
        """Создаёт материал по ключам конфигурации (фон задаётся относительно ε_0, μ_0)."""
        return cls(
            eps0=eps0,
            mu0=mu0,
            omega_p=omega_p,
            tau=tau,
            F_fill=F,
            omega0=omega0,
            eps_m=eps_m_rel * eps0,
            mu_m=mu_m_rel * mu0,
        )


@dataclass(frozen=True)
class Contrast:
    """Контрасты и проницаемости на частоте omega."""

    lambda_eps: complex
    lambda_mu: complex
    eps_c: complex
    mu_c: complex
    omega: float


def _check_omega(omega: float) -> None:
    if not omega > 0:
        raise ConfigError(f"Частота должна быть положительной, получено {omega}")


def drude_eps(mat: DrudeMaterial, omega: float) -> complex:
    """ε_c(ω) = ε_0(1 − ω_p²/(ω(ω + iτ⁻¹)))."""
    _check_omega(omega)
    return mat.eps0 * (1.0 - mat.omega_p**2 / (omega * (omega + 1j / mat.tau)))


def drude_eps_parts(mat: DrudeMaterial, omega: float) -> Tuple[float, float]:
    """Явные ε′(ω) и ε″(ω)."""
    _check_omega(omega)
    damping = omega**2 + mat.tau**-2
    eps_prime = mat.eps0 * (damping - mat.omega_p**2) / damping
    eps_second = mat.eps0 * mat.omega_p**2 / mat.tau / (omega * damping)
    return eps_prime, eps_second


def drude_mu(mat: DrudeMaterial, omega: float) -> complex:
    """μ_c(ω) = μ_0(1 − Fω²/(ω² − ω_0² + iτ⁻¹ω))."""
    _check_omega(omega)
    return mat.mu0 * (1.0 - mat.F_fill * omega**2 / (omega**2 - mat.omega0**2 + 1j * omega / mat.tau))


def drude_mu_parts(mat: DrudeMaterial, omega: float) -> Tuple[float, float]:
    """Явные μ′(ω) и μ″(ω) = μ_0Fτ⁻¹ω³/((ω²−ω_0²)² + τ⁻²ω²)."""
    _check_omega(omega)
    shift = omega**2 - mat.omega0**2
    denominator = shift**2 + mat.tau**-2 * omega**2
    mu_prime = mat.mu0 * (mat.tau**-2 * omega**2 + shift * ((1 - mat.F_fill) * omega**2 - mat.omega0**2)) / denominator
    mu_second = mat.mu0 * mat.F_fill * omega**3 / mat.tau / denominator
    return mu_prime, mu_second


def negativity(mat: DrudeMaterial, omega: float) -> Tuple[bool, bool]:
    """
    Условия отрицательности Re ε_c и Re μ_c.

    Returns:
        (ω² + τ⁻² < ω_p², (1−F)(ω²−ω_0²)² − Fω_0²(ω²−ω_0²) + τ⁻²ω² < 0)
    """
    _check_omega(omega)
    eps_negative = omega**2 + mat.tau**-2 < mat.omega_p**2
    shift = omega**2 - mat.omega0**2
    mu_negative = (1 - mat.F_fill) * shift**2 - mat.F_fill * mat.omega0**2 * shift + mat.tau**-2 * omega**2 < 0
    return bool(eps_negative), bool(mu_negative)


def contrast_value(inner: complex, outer: float) -> complex:
    """
    λ = (inner + outer)/(2(inner − outer)).

    Raises:
        DegenerateContrastError: |inner − outer| < 1e-300
    """
    difference = inner - outer
    if abs(difference) < DEGENERATE_CONTRAST:
        raise DegenerateContrastError(
            f"Контраст не определён: внутреннее значение {inner} совпадает с внешним {outer}"
        )
    return complex((inner + outer) / (2.0 * difference))


def contrast_parts(re_inner: float, im_inner: float, outer: float) -> complex:
    """Контраст через разложение на вещественную и мнимую части."""
    denominator = (re_inner - outer) ** 2 + im_inner**2
    if denominator < DEGENERATE_CONTRAST**2:
        raise DegenerateContrastError(
            f"Контраст не определён: внутреннее значение {re_inner}+{im_inner}j совпадает с внешним {outer}"
        )
    real = (re_inner**2 - outer**2 + im_inner**2) / (2.0 * denominator)
    imag = -outer * im_inner / denominator
    return complex(real, imag)


def checked_contrast(inner: complex, parts: Tuple[float, float], outer: float, name: str) -> complex:
    """
    Контраст напрямую и через вещественную/мнимую части; значения должны совпасть.

    Допуск CONTRAST_RTOL умножается на обусловленность |inner|/|inner − outer|
    (не меньше 1).

    Raises:
        DegenerateContrastError: inner совпадает с outer
        NumericalError: расхождение больше допуска
    """
    direct = contrast_value(inner, outer)
    split = contrast_parts(parts[0], parts[1], outer)
    condition = max(1.0, abs(inner) / abs(inner - outer))
    mismatch = abs(direct - split)
    if not mismatch <= CONTRAST_RTOL * condition * abs(direct):
        raise NumericalError(
            f"Контраст {name}: прямой расчёт {direct:.15g} расходится с расчётом "
            f"через части {split:.15g} (|Δ| = {mismatch:.3e})"
        )
    return direct


def contrast(mat: DrudeMaterial, omega: float) -> Contrast:
    """
    Контрасты λ_ε(ω) и λ_μ(ω), каждый сверяется с расчётом через ε′, ε″ (μ′, μ″).

    Если μ_c(ω) совпадает с μ_m (F = 0 при μ_m = μ_0), магнитного контраста нет
    и λ_μ возвращается как комплексная бесконечность.

    Raises:
        DegenerateContrastError: ε_c(ω) совпадает с ε_m
        NumericalError: два способа расчёта контраста не согласуются
    """
    eps_c = drude_eps(mat, omega)
    mu_c = drude_mu(mat, omega)
    lambda_eps = checked_contrast(eps_c, drude_eps_parts(mat, omega), mat.eps_m, "λ_ε")
    try:
        lambda_mu = checked_contrast(mu_c, drude_mu_parts(mat, omega), mat.mu_m, "λ_μ")
    except DegenerateContrastError:
        lambda_mu = complex(math.inf, 0.0)
    return Contrast(
        lambda_eps=lambda_eps,
        lambda_mu=lambda_mu,
        eps_c=eps_c,
        mu_c=mu_c,
        omega=omega,
    )


def k_wavenumbers(mat: DrudeMaterial, omega: float) -> Tuple[complex, float]:
    """
    Волновые числа k_c = ω√(ε_c μ_c) (главная ветвь, Im ≥ 0) и k_m = ω√(ε_m μ_m).
    """
    _check_omega(omega)
    root = np.sqrt(complex(drude_eps(mat, omega) * drude_mu(mat, omega)))
    if root.imag < 0:
        root = -root
    k_c = complex(omega * root)
    k_m = float(omega * math.sqrt(mat.eps_m * mat.mu_m))
    return k_c, k_m


def omega_from_wavelength(wavelength: np.ndarray) -> np.ndarray:
    """ω = c/λ (длина волны в соглашении c/ω)."""
    return SPEED_OF_LIGHT / np.asarray(wavelength, dtype=float)


def physical_wavelength(omega: np.ndarray) -> np.ndarray:
    """Физическая длина волны 2πc/ω."""
    return 2.0 * np.pi * SPEED_OF_LIGHT / np.asarray(omega, dtype=float)
