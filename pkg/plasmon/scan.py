"""
Модуль частотных и дистанционных сканирований.

Матрица Нистрёма собирается один раз на геометрию, частота входит только через
контраст λ_ε(ω) (или λ_μ(ω)); для каждой точки сетки пересчитывается лишь
LU-разложение (λI − K*). Точки сетки независимы и считаются в пуле потоков,
результаты собираются в порядке сетки.
"""
import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.signal import find_peaks

from plasmon.errors import ConfigError, NearSingularError
from plasmon.geometry import BoundaryCurve, ParticleSystem, make_system, nodes_for_gap, place_pair, resample
from plasmon.materials import DrudeMaterial, contrast, omega_from_wavelength, physical_wavelength
from plasmon.npop import NPMatrix, Spectrum, assemble, spectral_distance
from plasmon.polarization import PolarizationTensor, pt_numeric
from plasmon.settings import echo, get_settings

# Расстояния между границами пары частиц
DEFAULT_DISTANCES = (0.020, 0.069, 0.239, 0.931, 2.884, 10.00)
DEFAULT_PROMINENCE = 0.05
# предел измельчения сетки одной частицы пары
MAX_GAP_NODES = 4096

TENSOR_COLUMNS = ["re_m11", "im_m11", "re_m12", "im_m12", "re_m21", "im_m21", "re_m22", "im_m22"]
SWEEP_HEADERS = {
    "eps": [
        "omega", "wavelength_paper", "wavelength_physical",
        "re_eps_c", "im_eps_c", "re_lambda_eps", "im_lambda_eps",
        *TENSOR_COLUMNS, "pt_frobenius", "rcond",
    ],
    "mu": [
        "omega", "wavelength_paper", "wavelength_physical",
        "re_mu_c", "im_mu_c", "re_lambda_mu", "im_lambda_mu",
        *TENSOR_COLUMNS, "pt_frobenius", "rcond",
    ],
}


@dataclass(frozen=True)
class SweepGrid:
    """Сетка длин волн (в соглашении c/ω), по которой строится сетка частот."""

    wavelength_min: float = 80e-9
    wavelength_max: float = 1100e-9
    n_samples: int = 512
    spacing: str = "log"

    def __post_init__(self):
        if not self.wavelength_min > 0:
            raise ConfigError(f"wavelength_min должно быть положительным, получено {self.wavelength_min}")
        if not self.wavelength_max > self.wavelength_min:
            raise ConfigError(
                f"wavelength_max ({self.wavelength_max}) должно превышать wavelength_min ({self.wavelength_min})"
            )
        if self.n_samples < 2:
            raise ConfigError(f"n_samples должно быть >= 2, получено {self.n_samples}")
        if self.spacing not in ("linear", "log"):
            raise ConfigError(f"spacing должно быть 'linear' или 'log', получено '{self.spacing}'")

    def wavelengths(self) -> np.ndarray:
        """Длины волн по убыванию (частоты по возрастанию)."""
        if self.spacing == "log":
            values = np.geomspace(self.wavelength_min, self.wavelength_max, self.n_samples)
        else:
            values = np.linspace(self.wavelength_min, self.wavelength_max, self.n_samples)
        return values[::-1].copy()

    def omegas(self) -> np.ndarray:
        return omega_from_wavelength(self.wavelengths())

    def describe(self) -> Dict[str, Union[float, int, str]]:
        return {
            "wavelength_min": self.wavelength_min,
            "wavelength_max": self.wavelength_max,
            "n_samples": self.n_samples,
            "spacing": self.spacing,
        }


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Строки сканирования по частоте, упорядоченные по возрастанию ω."""

    kind: str
    omega: np.ndarray
    material_value: np.ndarray
    lam: np.ndarray
    tensors: np.ndarray
    rcond: np.ndarray
    grid: SweepGrid
    shape_hash: str
    min_spectral_distance: float = math.nan

    @property
    def n_rows(self) -> int:
        return int(self.omega.shape[0])

    @property
    def wavelength_paper(self) -> np.ndarray:
        return omega_from_wavelength(self.omega)

    @property
    def wavelength_physical(self) -> np.ndarray:
        return physical_wavelength(self.omega)

    @property
    def pt_frobenius(self) -> np.ndarray:
        flat = self.tensors.reshape(self.n_rows, -1)
        return np.sqrt(np.sum(np.abs(flat) ** 2, axis=1))

    @property
    def n_singular(self) -> int:
        return int(np.count_nonzero(np.isnan(self.pt_frobenius)))

    @property
    def header(self) -> List[str]:
        return list(SWEEP_HEADERS[self.kind])

    def rows(self) -> List[List[float]]:
        flat = self.tensors.reshape(self.n_rows, -1)
        norms = self.pt_frobenius
        wl_paper = self.wavelength_paper
        wl_physical = self.wavelength_physical
        out = []
        for i in range(self.n_rows):
            row = [
                self.omega[i], wl_paper[i], wl_physical[i],
                self.material_value[i].real, self.material_value[i].imag,
                self.lam[i].real, self.lam[i].imag,
            ]
            for value in flat[i]:
                row.extend((value.real, value.imag))
            row.extend((norms[i], self.rcond[i]))
            out.append([float(v) for v in row])
        return out


@dataclass(frozen=True)
class Peak:
    index: int
    omega: float
    wavelength_paper: float
    value: float
    prominence: float

    def to_dict(self) -> Dict[str, float]:
        return {
            "omega": self.omega,
            "wavelength_paper": self.wavelength_paper,
            "value": self.value,
            "prominence": self.prominence,
        }


@dataclass(frozen=True)
class PeakSet:
    peaks: Tuple[Peak, ...] = ()

    def __len__(self) -> int:
        return len(self.peaks)

    def __iter__(self):
        return iter(self.peaks)

    @property
    def indices(self) -> List[int]:
        return [p.index for p in self.peaks]

    def to_list(self) -> List[Dict[str, float]]:
        return [p.to_dict() for p in self.peaks]


def _matrix_hash(m: NPMatrix) -> str:
    return hashlib.sha256(np.ascontiguousarray(m.entries).tobytes()).hexdigest()[:16]


def _evaluate_point(
    m: NPMatrix,
    material: DrudeMaterial,
    omega: float,
    kind: str,
) -> Tuple[complex, complex, np.ndarray, float]:
    c = contrast(material, omega)
    if kind == "eps":
        value, lam = c.eps_c, c.lambda_eps
    else:
        value, lam = c.mu_c, c.lambda_mu

    dim = m.nodes.shape[1]
    if math.isinf(abs(lam)):
        # без контраста частица не поляризуется
        return value, lam, np.zeros((dim, dim), dtype=complex), 1.0
    try:
        tensor = pt_numeric(m, lam)
    except NearSingularError as e:
        return value, lam, np.full((dim, dim), complex(math.nan, math.nan)), float(e.rcond)
    return value, lam, tensor.entries, float(tensor.rcond)


def frequency_sweep(
    system: Optional[ParticleSystem],
    material: DrudeMaterial,
    grid: SweepGrid,
    workers: int = 1,
    kind: str = "eps",
    matrix: Optional[NPMatrix] = None,
) -> SweepResult:
    """
    Сканирование тензора поляризации по частоте.

    Args:
        system: система частиц (можно None, если передана готовая matrix)
        material: параметры Друде и фона
        grid: сетка длин волн
        workers: размер пула потоков для точек сетки
        kind: 'eps' (λ_ε, M^e) или 'mu' (λ_μ, M^h)
        matrix: уже собранная матрица Нистрёма для этой системы

    Returns:
        SweepResult; почти вырожденные точки содержат NaN и измеренный rcond
    """
    if kind not in SWEEP_HEADERS:
        raise ConfigError(f"Неизвестный тип контраста '{kind}', ожидается 'eps' или 'mu'")
    if workers < 1:
        raise ConfigError(f"workers должно быть >= 1, получено {workers}")
    if matrix is None:
        if system is None:
            raise ConfigError("Нужна система частиц или собранная матрица")
        matrix = assemble(system)
    shape_hash = system.shape_hash() if system is not None else _matrix_hash(matrix)

    # спектр считается до запуска пула, потоки читают его из кэша
    spec = matrix.cached_spectrum()
    omegas = grid.omegas()
    n = omegas.shape[0]
    echo(f"🔄 Сканирование ({kind}): {n} частот, {workers} потоков, N={matrix.n_total}")

    step = max(1, n // 4)

    def task(item: Tuple[int, float]):
        i, omega = item
        result = _evaluate_point(matrix, material, float(omega), kind)
        if (i + 1) % step == 0:
            echo(f"   ... {i + 1}/{n}")
        return result

    if workers == 1:
        results = [task(item) for item in enumerate(omegas)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(task, enumerate(omegas)))

    values = np.array([r[0] for r in results], dtype=complex)
    lams = np.array([r[1] for r in results], dtype=complex)
    tensors = np.stack([r[2] for r in results])
    rconds = np.array([r[3] for r in results], dtype=float)

    finite = lams[np.isfinite(lams)]
    distance = min((spectral_distance(lam, spec) for lam in finite), default=math.nan)

    result = SweepResult(
        kind=kind,
        omega=omegas,
        material_value=values,
        lam=lams,
        tensors=tensors,
        rcond=rconds,
        grid=grid,
        shape_hash=shape_hash,
        min_spectral_distance=float(distance),
    )
    if result.n_singular:
        echo(f"⚠️  {result.n_singular} точек попали в резонанс, строки помечены NaN")
    return result


def find_resonances(values: np.ndarray, prominence_frac: float = DEFAULT_PROMINENCE) -> Tuple[np.ndarray, np.ndarray]:
    """
    Внутренние строгие локальные максимумы с выступом >= prominence_frac·max.

    NaN заменяются наибольшим конечным значением.

    Returns:
        (индексы, выступы)
    """
    values = np.asarray(values, dtype=float)
    empty = (np.array([], dtype=int), np.array([], dtype=float))
    if values.size < 3 or not np.any(np.isfinite(values)):
        return empty
    top = float(np.nanmax(np.where(np.isfinite(values), values, np.nan)))
    values = np.where(np.isfinite(values), values, top)
    if top <= 0:
        return empty

    indices, props = find_peaks(values, prominence=prominence_frac * top)
    prominences = props["prominences"]
    strict = (values[indices] > values[indices - 1]) & (values[indices] > values[indices + 1])
    return indices[strict], prominences[strict]


def detect_peaks(result: SweepResult, prominence_frac: float = DEFAULT_PROMINENCE) -> PeakSet:
    """Резонансные пики ‖M‖_F по сканированию (пустой набор допустим)."""
    norms = result.pt_frobenius
    indices, prominences = find_resonances(norms, prominence_frac)
    wavelengths = result.wavelength_paper
    fallback = float(np.nanmax(norms)) if np.any(np.isfinite(norms)) else math.nan
    peaks = tuple(
        Peak(
            index=int(i),
            omega=float(result.omega[i]),
            wavelength_paper=float(wavelengths[i]),
            value=float(norms[i]) if np.isfinite(norms[i]) else fallback,
            prominence=float(p),
        )
        for i, p in zip(indices, prominences)
    )
    return PeakSet(peaks=peaks)


def refine_for_gap(curve: BoundaryCurve, gap: float, resolution: Optional[float] = None) -> BoundaryCurve:
    """
    Измельчает сетку кривой так, чтобы шаг квадратуры был меньше зазора.

    Ядро между частицами почти сингулярно при зазоре порядка шага сетки,
    и правило трапеций тогда даёт собственные значения выше 1/2.
    Число узлов ограничено MAX_GAP_NODES.
    """
    if resolution is None:
        resolution = get_settings().gap_resolution
    n_nodes = nodes_for_gap(curve, gap, resolution)
    if n_nodes > MAX_GAP_NODES:
        echo(f"⚠️  Для зазора {gap:g} нужно {n_nodes} узлов, используем {MAX_GAP_NODES}")
        n_nodes = max(curve.n_nodes, MAX_GAP_NODES)
    if n_nodes == curve.n_nodes:
        return curve
    echo(f"   Зазор {gap:g}: сетка {curve.kind} {curve.n_nodes} -> {n_nodes} узлов")
    return resample(curve, n_nodes)


def _pair_system(
    shape_a: BoundaryCurve,
    shape_b: BoundaryCurve,
    distance: float,
    min_separation: Optional[float],
) -> ParticleSystem:
    if min_separation is None:
        min_separation = get_settings().min_separation
    left, right = place_pair(shape_a, shape_b, distance)
    # зазор проверяется до измельчения
    make_system((left, right), labels=("D1", "D2"), min_separation=min_separation)
    curves = (refine_for_gap(left, distance), refine_for_gap(right, distance))
    return make_system(curves, labels=("D1", "D2"), min_separation=min_separation)


@dataclass(frozen=True, eq=False)
class DistanceSweep:
    """Сканирование по частоте для пары частиц на одном расстоянии."""

    distance: float
    result: SweepResult
    spectrum: Spectrum
    peaks: PeakSet = field(default_factory=PeakSet)


def distance_sweep(
    shape_a: BoundaryCurve,
    shape_b: BoundaryCurve,
    distances: Sequence[float],
    material: DrudeMaterial,
    grid: SweepGrid,
    workers: int = 1,
    prominence_frac: float = DEFAULT_PROMINENCE,
    min_separation: Optional[float] = None,
) -> List[DistanceSweep]:
    """
    Для каждого расстояния: расстановка пары, блочная матрица, её спектр и сканирование.

    Raises:
        GeometryError: расстояние не положительно или ниже порога разделения
    """
    systems = [_pair_system(shape_a, shape_b, d, min_separation) for d in distances]
    out = []
    for distance, system in zip(distances, systems):
        echo(f"🔄 Расстояние {distance:g}")
        matrix = assemble(system)
        result = frequency_sweep(system, material, grid, workers=workers, matrix=matrix)
        out.append(
            DistanceSweep(
                distance=float(distance),
                result=result,
                spectrum=matrix.cached_spectrum(),
                peaks=detect_peaks(result, prominence_frac),
            )
        )
    return out


@dataclass(frozen=True, eq=False)
class EigenTrajectoryRow:
    distance: float
    eigenvalues: np.ndarray
    imag_defect: float
    n_particles: int = 2

    @property
    def leading_coupled(self) -> float:
        return leading_coupled_eigenvalue(self.eigenvalues, self.n_particles)

    @classmethod
    def from_spectrum(cls, distance: float, spec: Spectrum, n_particles: int) -> "EigenTrajectoryRow":
        return cls(
            distance=float(distance),
            eigenvalues=spec.real_sorted(),
            imag_defect=spec.imag_defect,
            n_particles=n_particles,
        )


def leading_coupled_eigenvalue(eigenvalues: np.ndarray, n_particles: int = 2) -> float:
    """Наибольшее собственное значение после n_particles значений 1/2 (по одному на компоненту)."""
    ordered = np.sort(np.asarray(eigenvalues, dtype=float))[::-1]
    if ordered.size <= n_particles:
        raise ConfigError("Спектр слишком короткий для выделения связанных мод")
    return float(ordered[n_particles])


def eigen_vs_distance(
    shape_a: BoundaryCurve,
    shape_b: BoundaryCurve,
    distances: Sequence[float],
    min_separation: Optional[float] = None,
) -> List[EigenTrajectoryRow]:
    """Вещественные части спектра блочного оператора пары по расстояниям (по убыванию)."""
    rows = []
    for distance in distances:
        system = _pair_system(shape_a, shape_b, distance, min_separation)
        spec = assemble(system).cached_spectrum()
        rows.append(EigenTrajectoryRow.from_spectrum(distance, spec, system.n_particles))
    return rows


def tensor_vs_distance(
    shape_a: BoundaryCurve,
    shape_b: BoundaryCurve,
    distances: Sequence[float],
    lam: complex,
    min_separation: Optional[float] = None,
) -> List[Tuple[float, PolarizationTensor]]:
    """Тензор поляризации пары при фиксированном контрасте λ по расстояниям."""
    out = []
    for distance in distances:
        system = _pair_system(shape_a, shape_b, distance, min_separation)
        out.append((float(distance), pt_numeric(assemble(system), lam)))
    return out
