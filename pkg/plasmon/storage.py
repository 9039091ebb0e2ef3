"""
Модуль для сохранения артефактов запуска.
CSV пишутся с фиксированным форматом чисел (17 значащих цифр), JSON — с
отступами и без экранирования не-ASCII. Манифест пишется последним и
ссылается только на существующие файлы.
"""
import csv
import json
import platform
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from plasmon import __version__
from plasmon.settings import echo

MANIFEST_NAME = "manifest.json"
VERSIONED_PACKAGES = ("numpy", "scipy", "numba", "jinja2", "pydantic")


def format_float(value: float) -> str:
    """17 значащих цифр; nan/inf пишутся как nan, inf, -inf."""
    value = float(value)
    if np.isnan(value):
        return "nan"
    if np.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, ".16e")


def _format_cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def prepare_output_dir(path: Union[str, Path]) -> Path:
    """Создаёт директорию результатов (если её нет) и возвращает абсолютный путь."""
    out = Path(path).expanduser().resolve()
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Пишет CSV с переводами строк '\\n' независимо от платформы."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])
    return path


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        # JSON не знает nan/inf
        return value if np.isfinite(value) else str(value)
    if isinstance(value, complex):
        return [_jsonable(value.real), _jsonable(value.imag)]
    return value


def write_json(path: Path, payload: Any) -> Path:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_jsonable(payload), f, indent=2, ensure_ascii=False)
        f.write("\n")
    return path


def package_versions() -> Dict[str, str]:
    versions = {"plasmon": __version__, "python": platform.python_version()}
    for name in VERSIONED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "не установлен"
    return versions


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    """Манифест запуска: эхо конфигурации, список артефактов, версии и тайминги."""

    command: str
    config: Dict[str, Any]
    output_dir: Path
    artifacts: List[str] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)
    started_at: str = field(default_factory=_utc_now)
    _clock: float = field(default_factory=time.perf_counter, repr=False)

    def add(self, path: Path) -> Path:
        """Регистрирует артефакт (путь относительно директории результатов)."""
        relative = Path(path).resolve().relative_to(self.output_dir)
        name = relative.as_posix()
        if name not in self.artifacts:
            self.artifacts.append(name)
        return path

    def stage(self, name: str) -> "_Stage":
        return _Stage(self, name)

    def write(self, path: Optional[Path] = None) -> Path:
        """Пишет manifest.json последним; отсутствующие файлы отбрасываются."""
        path = path or self.output_dir / MANIFEST_NAME
        existing = [name for name in self.artifacts if (self.output_dir / name).is_file()]
        missing = sorted(set(self.artifacts) - set(existing))
        for name in missing:
            echo(f"⚠️  Артефакт {name} не найден и не попадёт в манифест")
        payload = {
            "command": self.command,
            "config": self.config,
            "artifacts": existing,
            "versions": package_versions(),
            "started_at": self.started_at,
            "finished_at": _utc_now(),
            "wall_clock_seconds": round(time.perf_counter() - self._clock, 6),
            "timings": {k: round(v, 6) for k, v in self.timings.items()},
            "summary": self.summary,
        }
        return write_json(path, payload)


class _Stage:
    """Контекст, засекающий время этапа в манифесте."""

    def __init__(self, manifest: RunManifest, name: str):
        self.manifest = manifest
        self.name = name
        self._start = 0.0

    def __enter__(self):
        self._start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self._start
        self.manifest.timings[self.name] = self.manifest.timings.get(self.name, 0.0) + elapsed
        return False
