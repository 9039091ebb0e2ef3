"""
Настройки среды выполнения и вывод статусных сообщений.
Значения читаются из переменных окружения (файл .env подгружается в main).
"""
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numba

# Флаг тихого режима (--quiet)
_quiet = False

DEFAULT_EPS_SING = 1e-12
DEFAULT_RCOND_MIN = 1e-14
DEFAULT_MIN_SEPARATION = 1e-3
# наибольший вес квадратуры у пары частиц не больше зазора, делённого на это число
DEFAULT_GAP_RESOLUTION = 3.5


@dataclass(frozen=True)
class Settings:
    eps_sing: float = DEFAULT_EPS_SING
    rcond_min: float = DEFAULT_RCOND_MIN
    min_separation: float = DEFAULT_MIN_SEPARATION
    gap_resolution: float = DEFAULT_GAP_RESOLUTION
    threads: str = "auto"
    output_dir: Path = Path("results")


def _float_env(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        value = float(raw)
    except ValueError:
        echo(f"⚠️  Неверное значение {name}: '{raw}', используем {default}")
        return default
    if value <= 0:
        echo(f"⚠️  {name} должно быть положительным, используем {default}")
        return default
    return value


def get_settings() -> Settings:
    """Собирает настройки из переменных окружения."""
    return Settings(
        eps_sing=_float_env("PLASMON_EPS_SING", DEFAULT_EPS_SING),
        rcond_min=_float_env("PLASMON_RCOND_MIN", DEFAULT_RCOND_MIN),
        min_separation=_float_env("PLASMON_MIN_SEPARATION", DEFAULT_MIN_SEPARATION),
        gap_resolution=_float_env("PLASMON_GAP_RESOLUTION", DEFAULT_GAP_RESOLUTION),
        threads=os.getenv("PLASMON_THREADS", "auto"),
        output_dir=Path(os.getenv("PLASMON_OUTPUT_DIR", "results")),
    )


def set_quiet(quiet: bool) -> None:
    global _quiet
    _quiet = quiet


def echo(message: str) -> None:
    """Печатает статусную строку, если не включён тихий режим."""
    if not _quiet:
        print(message, flush=True)


def resolve_threads(spec: Union[int, str, None]) -> int:
    """
    Переводит значение --threads (число или 'auto') в количество потоков.

    Raises:
        ValueError: если значение не число и не 'auto'
    """
    if spec is None or str(spec).strip().lower() == "auto":
        return os.cpu_count() or 1
    count = int(spec)
    if count < 1:
        raise ValueError(f"Количество потоков должно быть >= 1, получено {count}")
    return count


def configure_threads(spec: Union[int, str, None]) -> int:
    """
    Применяет количество потоков к параллельной сборке numba.

    Returns:
        Количество потоков для пулов исполнителей
    """
    count = resolve_threads(spec)
    numba.set_num_threads(min(count, numba.config.NUMBA_NUM_THREADS))
    return count
