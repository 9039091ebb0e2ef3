"""
Модуль для построения дискретизированных замкнутых кривых и систем частиц.

Все формы задаются параметризацией x(t), t ∈ [0, 2π), с аналитическими первой
и второй производными: узлы равномерны по параметру, веса — правило трапеций.
Нормаль внешняя, кривизна единичной окружности равна +1.
"""
import hashlib
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.fft
from scipy.spatial.distance import cdist

from plasmon.errors import GeometryError

MIN_NODES = 8
# шаг округления числа узлов при измельчении сетки
NODE_STEP = 8


@dataclass(frozen=True, eq=False)
class BoundaryCurve:
    """Дискретизированная замкнутая кривая с нормалями, кривизной и весами."""

    kind: str
    params: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    speeds: np.ndarray
    normals: np.ndarray
    curvatures: np.ndarray
    weights: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.params.shape[0])

    @property
    def perimeter(self) -> float:
        return float(np.sum(self.weights))

    @property
    def area(self) -> float:
        """Площадь по дискретной формуле Грина: ½Σ(x_i·ν_i)w_i."""
        return float(0.5 * np.sum(np.einsum("ij,ij->i", self.points, self.normals) * self.weights))

    @property
    def normal_moment(self) -> np.ndarray:
        """Σν_i w_i — дискретный аналог ∫ν dσ = 0."""
        return self.normals.T @ self.weights

    @property
    def centroid(self) -> np.ndarray:
        return (self.points.T @ self.weights) / self.perimeter


def _check_nodes(n_nodes: int) -> None:
    if int(n_nodes) != n_nodes or n_nodes < MIN_NODES or n_nodes % 2:
        raise GeometryError(
            f"n_nodes должно быть чётным и не меньше {MIN_NODES}, получено {n_nodes}"
        )


def _rotation_matrix(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def _from_derivatives(
    kind: str,
    t: np.ndarray,
    x: np.ndarray,
    dx: np.ndarray,
    ddx: np.ndarray,
    center: Sequence[float],
    rotation: float,
) -> BoundaryCurve:
    """Собирает кривую из x, x′, x″, заданных в собственной системе формы."""
    if rotation != 0.0:
        rot = _rotation_matrix(rotation)
        x = x @ rot.T
        dx = dx @ rot.T
        ddx = ddx @ rot.T
    points = x + np.asarray(center, dtype=float)

    speeds = np.hypot(dx[:, 0], dx[:, 1])
    if np.any(speeds <= 0):
        raise GeometryError(f"Вырожденная параметризация формы {kind}: нулевая скорость")
    # для обхода против часовой стрелки внешняя нормаль — (x′_2, −x′_1)/|x′|
    normals = np.column_stack((dx[:, 1], -dx[:, 0])) / speeds[:, None]
    curvatures = (dx[:, 0] * ddx[:, 1] - dx[:, 1] * ddx[:, 0]) / speeds**3
    weights = speeds * (2.0 * np.pi / t.shape[0])

    return BoundaryCurve(
        kind=kind,
        params=t,
        points=points,
        tangents=dx,
        speeds=speeds,
        normals=normals,
        curvatures=curvatures,
        weights=weights,
    )


def _params(n_nodes: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n_nodes) / n_nodes


def make_circle(
    radius: float,
    center: Sequence[float] = (0.0, 0.0),
    n_nodes: int = 128,
) -> BoundaryCurve:
    """
    Окружность x(t) = center + radius·(cos t, sin t).

    Raises:
        GeometryError: radius <= 0, n_nodes нечётное или меньше 8
    """
    if not radius > 0:
        raise GeometryError(f"Радиус должен быть положительным, получено {radius}")
    _check_nodes(n_nodes)
    t = _params(n_nodes)
    c, s = np.cos(t), np.sin(t)
    x = radius * np.column_stack((c, s))
    dx = radius * np.column_stack((-s, c))
    ddx = radius * np.column_stack((-c, -s))
    return _from_derivatives("circle", t, x, dx, ddx, center, 0.0)


def make_ellipse(
    a: float,
    b: float,
    center: Sequence[float] = (0.0, 0.0),
    rotation: float = 0.0,
    n_nodes: int = 128,
) -> BoundaryCurve:
    """
    Эллипс x(t) = center + R(rotation)·(a cos t, b sin t), a — большая полуось.

    Raises:
        GeometryError: a < b или b <= 0
    """
    if not b > 0:
        raise GeometryError(f"Полуоси должны быть положительными, получено a={a}, b={b}")
    if a < b:
        raise GeometryError(f"Требуется a >= b (a — большая полуось), получено a={a}, b={b}")
    _check_nodes(n_nodes)
    t = _params(n_nodes)
    c, s = np.cos(t), np.sin(t)
    x = np.column_stack((a * c, b * s))
    dx = np.column_stack((-a * s, b * c))
    ddx = np.column_stack((-a * c, -b * s))
    return _from_derivatives("ellipse", t, x, dx, ddx, center, rotation)


def make_star(
    r0: float,
    amplitude: float,
    n_petals: int,
    center: Sequence[float] = (0.0, 0.0),
    rotation: float = 0.0,
    n_nodes: int = 256,
) -> BoundaryCurve:
    """
    Звезда в полярных координатах r(θ) = r0·(1 + amplitude·cos(n_petals·θ)).

    Raises:
        GeometryError: amplitude вне [0, 1), r0 <= 0, n_petals < 1
    """
    if not r0 > 0:
        raise GeometryError(f"r0 должно быть положительным, получено {r0}")
    if not 0 <= amplitude < 1:
        raise GeometryError(
            f"Амплитуда должна лежать в [0, 1) (иначе самопересечение), получено {amplitude}"
        )
    if int(n_petals) != n_petals or n_petals < 1:
        raise GeometryError(f"Число лепестков должно быть целым >= 1, получено {n_petals}")
    _check_nodes(n_nodes)
    k = int(n_petals)
    t = _params(n_nodes)
    c, s = np.cos(t), np.sin(t)
    r = r0 * (1.0 + amplitude * np.cos(k * t))
    dr = -r0 * amplitude * k * np.sin(k * t)
    ddr = -r0 * amplitude * k**2 * np.cos(k * t)
    x = np.column_stack((r * c, r * s))
    dx = np.column_stack((dr * c - r * s, dr * s + r * c))
    ddx = np.column_stack(
        (ddr * c - 2.0 * dr * s - r * c, ddr * s + 2.0 * dr * c - r * s)
    )
    return _from_derivatives("star", t, x, dx, ddx, center, rotation)


def transform(
    curve: BoundaryCurve,
    rotation: float = 0.0,
    translation: Sequence[float] = (0.0, 0.0),
    scale: float = 1.0,
) -> BoundaryCurve:
    """
    Применяет x ↦ scale·R(rotation)·x + translation.

    Нормали поворачиваются, кривизна делится на scale, веса умножаются на scale.

    Raises:
        GeometryError: scale <= 0
    """
    if not scale > 0:
        raise GeometryError(f"Масштаб должен быть положительным, получено {scale}")
    shift = np.asarray(translation, dtype=float)
    if rotation == 0.0 and scale == 1.0 and not np.any(shift):
        return curve

    rot = _rotation_matrix(rotation)
    return BoundaryCurve(
        kind=curve.kind,
        params=curve.params,
        points=scale * (curve.points @ rot.T) + shift,
        tangents=scale * (curve.tangents @ rot.T),
        speeds=scale * curve.speeds,
        normals=curve.normals @ rot.T,
        curvatures=curve.curvatures / scale,
        weights=scale * curve.weights,
    )


def resample(curve: BoundaryCurve, n_nodes: int) -> BoundaryCurve:
    """
    Переводит кривую на более густую равномерную сетку параметра.

    Узлы тригонометрически интерполируются (дополнение спектра нулями),
    x′ и x″ берутся спектральным дифференцированием. Для окружности, эллипса
    и звезды координаты — тригонометрические полиномы, поэтому пересэмплирование
    совпадает с построением формы заново до ошибок округления.

    Raises:
        GeometryError: n_nodes меньше текущего, нечётное или меньше 8
    """
    _check_nodes(n_nodes)
    n = curve.n_nodes
    if n_nodes == n:
        return curve
    if n_nodes < n:
        raise GeometryError(f"Пересэмплирование только на более густую сетку: {n} -> {n_nodes}")

    coeffs = scipy.fft.fft(curve.points, axis=0) / n
    half = n // 2
    padded = np.zeros((n_nodes, 2), dtype=complex)
    padded[:half] = coeffs[:half]
    padded[n_nodes - half + 1:] = coeffs[half + 1:]
    # гармоника Найквиста делится поровну между ±n/2
    padded[half] = 0.5 * coeffs[half]
    padded[n_nodes - half] = 0.5 * coeffs[half]

    k = scipy.fft.fftfreq(n_nodes, d=1.0 / n_nodes)[:, None]
    x = scipy.fft.ifft(padded, axis=0).real * n_nodes
    dx = scipy.fft.ifft(1j * k * padded, axis=0).real * n_nodes
    ddx = scipy.fft.ifft(-(k**2) * padded, axis=0).real * n_nodes
    return _from_derivatives(curve.kind, _params(n_nodes), x, dx, ddx, (0.0, 0.0), 0.0)


def nodes_for_gap(curve: BoundaryCurve, gap: float, resolution: float) -> int:
    """
    Наименьшее число узлов (кратное 8, не меньше текущего), при котором
    наибольший вес w_j не превышает gap/resolution.
    """
    if not gap > 0 or not resolution > 0:
        raise GeometryError(f"Зазор и разрешение должны быть положительными: gap={gap}, resolution={resolution}")
    needed = resolution * float(np.max(curve.speeds)) * 2.0 * np.pi / gap
    return max(curve.n_nodes, int(math.ceil(needed / NODE_STEP)) * NODE_STEP)


def place_pair(
    first: BoundaryCurve,
    second: BoundaryCurve,
    distance: float,
) -> Tuple[BoundaryCurve, BoundaryCurve]:
    """
    Располагает две формы на оси x симметрично относительно начала координат.

    Самый правый узел первой формы оказывается в x = −distance/2,
    самый левый узел второй — в x = +distance/2; по y формы центрируются.

    Raises:
        GeometryError: distance <= 0
    """
    if not distance > 0:
        raise GeometryError(f"Расстояние между частицами должно быть положительным, получено {distance}")
    c1 = first.centroid
    c2 = second.centroid
    left = transform(first, translation=(-distance / 2 - np.max(first.points[:, 0]), -c1[1]))
    right = transform(second, translation=(distance / 2 - np.min(second.points[:, 0]), -c2[1]))
    return left, right


@dataclass(frozen=True, eq=False)
class ParticleSystem:
    """Упорядоченный набор непересекающихся кривых."""

    curves: Tuple[BoundaryCurve, ...]
    labels: Tuple[str, ...]

    @property
    def n_particles(self) -> int:
        return len(self.curves)

    @property
    def n_total(self) -> int:
        return sum(curve.n_nodes for curve in self.curves)

    @property
    def block_offsets(self) -> Tuple[Tuple[int, int], ...]:
        offsets = []
        start = 0
        for curve in self.curves:
            offsets.append((start, start + curve.n_nodes))
            start += curve.n_nodes
        return tuple(offsets)

    def min_distance(self) -> float:
        """Минимальное расстояние между узлами разных частиц (inf для одной частицы)."""
        best = np.inf
        for i in range(len(self.curves)):
            for j in range(i + 1, len(self.curves)):
                best = min(best, float(cdist(self.curves[i].points, self.curves[j].points).min()))
        return best

    def shape_hash(self) -> str:
        """Хэш геометрии для провенанса результатов."""
        digest = hashlib.sha256()
        for label, curve in zip(self.labels, self.curves):
            digest.update(label.encode("utf-8"))
            digest.update(np.ascontiguousarray(curve.points).tobytes())
            digest.update(np.ascontiguousarray(curve.weights).tobytes())
        return digest.hexdigest()[:16]


def make_system(
    curves: Sequence[BoundaryCurve],
    labels: Optional[Sequence[str]] = None,
    min_separation: float = 1e-3,
) -> ParticleSystem:
    """
    Собирает систему частиц и проверяет, что они не пересекаются.

    Raises:
        GeometryError: пустой список, несовпадение меток или частицы ближе min_separation
    """
    curves = tuple(curves)
    if not curves:
        raise GeometryError("Система частиц пуста")
    if labels is None:
        labels = tuple(f"D{i + 1}" for i in range(len(curves)))
    labels = tuple(str(label) for label in labels)
    if len(labels) != len(curves):
        raise GeometryError(f"Число меток ({len(labels)}) не совпадает с числом форм ({len(curves)})")

    system = ParticleSystem(curves=curves, labels=labels)
    gap = system.min_distance()
    if gap <= min_separation:
        raise GeometryError(
            f"Частицы пересекаются или слишком близки: минимальное расстояние {gap:.3e} "
            f"<= порога {min_separation:.3e}"
        )
    return system
