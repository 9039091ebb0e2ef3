"""
Исключения пакета.
ConfigError -> код выхода 2, NumericalError -> код выхода 3 (см. plasmon.main).
"""
from typing import Optional, Sequence


class PlasmonError(Exception):
    """Базовое исключение пакета."""

    exit_code = 1


class ConfigError(PlasmonError, ValueError):
    """Неверные параметры или конфигурация запуска."""

    exit_code = 2


class GeometryError(ConfigError):
    """Неверные параметры формы или пересекающиеся частицы."""


class NumericalError(PlasmonError, ArithmeticError):
    """Численная ошибка во время расчёта."""

    exit_code = 3


class NearSingularError(NumericalError):
    """Резольвента (λI − K*) почти вырождена: точное попадание в плазмонный резонанс."""

    def __init__(self, lam: complex, nearest_eigenvalue: Optional[complex], rcond: float):
        self.lam = lam
        self.nearest_eigenvalue = nearest_eigenvalue
        self.rcond = rcond
        nearest = "неизвестно" if nearest_eigenvalue is None else f"{nearest_eigenvalue:.12g}"
        super().__init__(
            f"Система (λI − K*) почти вырождена при λ={lam:.12g}: "
            f"rcond={rcond:.3e}, ближайшее собственное значение {nearest}"
        )


class SpectrumError(NumericalError):
    """Собственные значения не сошлись."""

    def __init__(self, message: str, condition: Optional[float] = None):
        self.condition = condition
        if condition is not None:
            message = f"{message} (оценка числа обусловленности: {condition:.3e})"
        super().__init__(message)


class PoleError(NumericalError):
    """Аналитический тензор поляризации вычисляется в полюсе."""


class DegenerateContrastError(NumericalError):
    """Контраст λ не определён: ε_c совпадает с ε_m."""


class FarFieldDomainError(NumericalError):
    """Точки наблюдения внутри сферы r_min вокруг частицы."""

    def __init__(self, indices: Sequence[int], r_min: float):
        self.indices = list(indices)
        self.r_min = r_min
        shown = ", ".join(str(i) for i in self.indices[:20])
        if len(self.indices) > 20:
            shown += ", ..."
        super().__init__(
            f"{len(self.indices)} точек ближе r_min={r_min:.6g} к частице: [{shown}]"
        )
