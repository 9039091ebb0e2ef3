"""
Модуль gnuplot-скриптов.
Скрипты рендерятся из шаблонов Jinja2 в plasmon/templates и ссылаются на CSV
относительными путями, поэтому директорию результатов можно переносить.
"""
import pathlib
from pathlib import Path
from typing import Any, Dict, List, Sequence

from jinja2 import Environment, FileSystemLoader, StrictUndefined

from plasmon.scan import SWEEP_HEADERS

TEMPLATE_DIR = pathlib.Path(__file__).parent / "templates"

_env = Environment(
    loader=FileSystemLoader(str(TEMPLATE_DIR.absolute())),
    undefined=StrictUndefined,
    keep_trailing_newline=True,
    trim_blocks=True,
    lstrip_blocks=True,
)


def _columns(kind: str) -> Dict[str, int]:
    """Номера столбцов CSV сканирования для gnuplot (нумерация с 1)."""
    return {name: i + 1 for i, name in enumerate(SWEEP_HEADERS[kind])}


def _render(template: str, path: Path, context: Dict[str, Any]) -> Path:
    text = _env.get_template(template).render(**context)
    path.write_text(text, encoding="utf-8")
    return path


def sweep_script(path: Path, csv_name: str, title: str, kind: str = "eps") -> Path:
    """Скрипт для ‖M‖_F по длине волны плюс панели ε_c (μ_c) и λ."""
    return _render(
        "sweep.gp.j2",
        path,
        {
            "csv": csv_name,
            "title": title,
            "kind": kind,
            "col": _columns(kind),
            "image": Path(csv_name).with_suffix(".png").name,
        },
    )


def spectrum_script(path: Path, csv_name: str, title: str) -> Path:
    """Собственные значения на комплексной плоскости."""
    return _render(
        "spectrum.gp.j2",
        path,
        {"csv": csv_name, "title": title, "image": Path(csv_name).with_suffix(".png").name},
    )


def couple_script(
    path: Path,
    sweeps: Sequence[Dict[str, Any]],
    trajectory_csv: str,
    n_eigenvalues: int,
    reference_csv: str = "",
) -> Path:
    """
    Одна кривая ‖M‖_F на каждое расстояние и траектории собственных значений.

    Args:
        sweeps: словари {"csv": имя файла, "distance": расстояние}
        trajectory_csv: CSV траекторий (distance, e1, e2, ...)
        n_eigenvalues: сколько столбцов собственных значений рисовать
        reference_csv: сканирование эталонной формы (пусто — не рисовать)
    """
    curves: List[Dict[str, Any]] = [dict(s) for s in sweeps]
    return _render(
        "couple.gp.j2",
        path,
        {
            "sweeps": curves,
            "trajectory": trajectory_csv,
            "n_eigenvalues": n_eigenvalues,
            "reference": reference_csv,
            "col": _columns("eps"),
        },
    )
