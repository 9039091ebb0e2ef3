"""
Модуль конфигурации запуска.
Конфигурация — один JSON-файл; модели pydantic отклоняют неизвестные ключи,
ошибки приводятся к ConfigError с путём ключа (или строкой/столбцом для
синтаксических ошибок JSON). Разбор выполняется до создания любых файлов.
"""
import json
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from plasmon.errors import ConfigError
from plasmon.geometry import BoundaryCurve, make_circle, make_ellipse, make_star
from plasmon.materials import EPS0_DEFAULT, MU0_DEFAULT, DrudeMaterial
from plasmon.scan import DEFAULT_DISTANCES, DEFAULT_PROMINENCE, SweepGrid

Vector2 = Tuple[float, float]
Vector3 = Tuple[float, float, float]
ComplexPair = Tuple[float, float]
MatrixEntry = Union[float, ComplexPair]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CircleShape(StrictModel):
    kind: Literal["circle"]
    radius: float = 1.0
    center: Vector2 = (0.0, 0.0)
    n_nodes: int = 128
    label: Optional[str] = None

    def build(self) -> BoundaryCurve:
        return make_circle(self.radius, center=self.center, n_nodes=self.n_nodes)


class EllipseShape(StrictModel):
    kind: Literal["ellipse"]
    a: float = 1.0
    b: float = 0.5
    center: Vector2 = (0.0, 0.0)
    rotation: float = 0.0
    n_nodes: int = 256
    label: Optional[str] = None

    def build(self) -> BoundaryCurve:
        return make_ellipse(self.a, self.b, center=self.center, rotation=self.rotation, n_nodes=self.n_nodes)


class StarShape(StrictModel):
    kind: Literal["star"]
    r0: float = 1.0
    amplitude: float = 0.3
    petals: int = 5
    center: Vector2 = (0.0, 0.0)
    rotation: float = 0.0
    n_nodes: int = 256
    label: Optional[str] = None

    def build(self) -> BoundaryCurve:
        return make_star(
            self.r0, self.amplitude, self.petals,
            center=self.center, rotation=self.rotation, n_nodes=self.n_nodes,
        )


Shape = Annotated[Union[CircleShape, EllipseShape, StarShape], Field(discriminator="kind")]


class MaterialConfig(StrictModel):
    """Параметры Друде; фон задаётся относительно ε_0 и μ_0."""

    eps0: float = EPS0_DEFAULT
    mu0: float = MU0_DEFAULT
    omega_p: float = 2e15
    tau: float = 1e-14
    F: float = 0.0
    omega0: float = 5e14
    eps_m_rel: float = 1.33**2
    mu_m_rel: float = 1.0

    def build(self) -> DrudeMaterial:
        return DrudeMaterial.from_relative(**self.model_dump())


class GridConfig(StrictModel):
    wavelength_min: float = 80e-9
    wavelength_max: float = 1100e-9
    n_samples: int = 512
    spacing: Literal["linear", "log"] = "log"

    def build(self) -> SweepGrid:
        return SweepGrid(**self.model_dump())


class CoupleConfig(StrictModel):
    distances: List[float] = Field(default_factory=lambda: list(DEFAULT_DISTANCES))
    reference_shape: Optional[Shape] = None

    @field_validator("distances")
    @classmethod
    def _positive(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("нужно хотя бы одно расстояние")
        for d in value:
            if not d > 0:
                raise ValueError(f"расстояние должно быть положительным, получено {d}")
        return value


class PolarizationConfig(StrictModel):
    lambdas: Optional[List[ComplexPair]] = None
    omegas: Optional[List[float]] = None
    oracle: Optional[Literal["disk", "ellipse"]] = None

    @model_validator(mode="after")
    def _one_source(self) -> "PolarizationConfig":
        if (self.lambdas is None) == (self.omegas is None):
            raise ValueError("задайте ровно одно из 'lambdas' или 'omegas'")
        if self.omegas is not None and any(not w > 0 for w in self.omegas):
            raise ValueError("частоты в 'omegas' должны быть положительными")
        return self


class LinePoints(StrictModel):
    kind: Literal["line"]
    start: Vector3
    stop: Vector3
    n: int = 16


class SpherePoints(StrictModel):
    kind: Literal["sphere"]
    center: Vector3 = (0.0, 0.0, 0.0)
    radius: float
    n: int = 64


class ListPoints(StrictModel):
    kind: Literal["list"]
    points: List[Vector3]


PointSet = Annotated[Union[LinePoints, SpherePoints, ListPoints], Field(discriminator="kind")]


class ScattererConfig(StrictModel):
    """
    Частица в дальнем поле. Тензоры либо заданы явно (3×3, элементы — число
    или [re, im]), либо берутся для шара радиуса radius при контрасте
    lambda_e / lambda_h (по умолчанию — контрасты материала на частоте omega).
    """

    z: Vector3 = (0.0, 0.0, 0.0)
    delta: float = 1e-8
    radius: float = 1.0
    lambda_e: Optional[ComplexPair] = None
    lambda_h: Optional[ComplexPair] = None
    Me: Optional[List[List[MatrixEntry]]] = None
    Mh: Optional[List[List[MatrixEntry]]] = None

    @field_validator("Me", "Mh")
    @classmethod
    def _square(cls, value):
        if value is not None and (len(value) != 3 or any(len(row) != 3 for row in value)):
            raise ValueError("тензор должен быть матрицей 3×3")
        return value


class FarfieldConfig(StrictModel):
    omega: float = 1.2e15
    direction: Vector3 = (0.0, 0.0, 1.0)
    polarization: Vector3 = (1.0, 0.0, 0.0)
    scatterers: List[ScattererConfig] = Field(default_factory=lambda: [ScattererConfig()])
    points: PointSet
    r_min: Optional[float] = None

    @field_validator("scatterers")
    @classmethod
    def _non_empty(cls, value):
        if not value:
            raise ValueError("нужна хотя бы одна частица")
        return value


Command = Literal["spectrum", "polarization", "scan", "couple", "farfield"]


class RunConfig(StrictModel):
    command: Command
    shapes: List[Shape] = Field(default_factory=list)
    material: MaterialConfig = Field(default_factory=MaterialConfig)
    grid: GridConfig = Field(default_factory=GridConfig)
    output_dir: Optional[str] = None
    plot: bool = False
    prominence: float = DEFAULT_PROMINENCE
    couple: CoupleConfig = Field(default_factory=CoupleConfig)
    polarization: Optional[PolarizationConfig] = None
    farfield: Optional[FarfieldConfig] = None

    @model_validator(mode="after")
    def _command_requirements(self) -> "RunConfig":
        if self.command in ("spectrum", "polarization", "scan") and not self.shapes:
            raise ValueError(f"команде '{self.command}' нужна хотя бы одна форма в 'shapes'")
        if self.command == "couple" and len(self.shapes) != 2:
            raise ValueError(f"команде 'couple' нужны ровно две формы, получено {len(self.shapes)}")
        if self.command == "polarization" and self.polarization is None:
            raise ValueError("команде 'polarization' нужен блок 'polarization'")
        if self.command == "farfield" and self.farfield is None:
            raise ValueError("команде 'farfield' нужен блок 'farfield'")
        if not 0 <= self.prominence < 1:
            raise ValueError(f"prominence должно лежать в [0, 1), получено {self.prominence}")
        return self

    def echo(self) -> Dict[str, Any]:
        """Конфигурация со значениями по умолчанию — для манифеста."""
        return self.model_dump(mode="json")


def as_complex(pair: Optional[ComplexPair]) -> Optional[complex]:
    return None if pair is None else complex(pair[0], pair[1])


def as_matrix(rows: List[List[MatrixEntry]]) -> np.ndarray:
    out = np.empty((3, 3), dtype=complex)
    for i, row in enumerate(rows):
        for j, entry in enumerate(row):
            out[i, j] = complex(entry[0], entry[1]) if isinstance(entry, (tuple, list)) else complex(entry)
    return out


def _format_validation(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<корень>"
        lines.append(f"   {location}: {item['msg']}")
    return "\n".join(lines)


def parse_config(data: Any, source: str = "<config>") -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Ошибка конфигурации {source}:\n{_format_validation(e)}") from e


def load_config(path: Union[str, Path]) -> RunConfig:
    """
    Читает и проверяет JSON-конфигурацию.

    Raises:
        ConfigError: файл не читается, синтаксис JSON, неизвестные или неверные ключи
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Не удалось прочитать конфигурацию {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Синтаксическая ошибка в {path}, строка {e.lineno}, столбец {e.colno}: {e.msg}") from e
    return parse_config(data, str(path))
