"""
Главный модуль приложения.
Точка входа командной строки: python -m plasmon.main --config run.json
"""
import argparse
import math
import sys
import traceback
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from dotenv import load_dotenv

from plasmon.config import RunConfig, as_complex, as_matrix, load_config
from plasmon.errors import ConfigError, PlasmonError
from plasmon.farfield import (
    FarFieldJob,
    line_points,
    plane_wave,
    scattered_field_sum,
    sphere_points,
)
from plasmon.geometry import ParticleSystem, make_system
from plasmon.materials import contrast
from plasmon.npop import NPMatrix, assemble, spectrum
from plasmon.plots import couple_script, spectrum_script, sweep_script
from plasmon.polarization import PolarizationTensor, pt_disk, pt_ellipse, pt_numeric, pt_sphere
from plasmon.scan import (
    TENSOR_COLUMNS,
    EigenTrajectoryRow,
    SweepResult,
    detect_peaks,
    distance_sweep,
    frequency_sweep,
)
from plasmon.settings import configure_threads, echo, get_settings, set_quiet
from plasmon.storage import RunManifest, prepare_output_dir, write_csv, write_json

SPECTRUM_HEADER = ["index", "re", "im"]
TENSOR_HEADER = ["re_lambda", "im_lambda", *TENSOR_COLUMNS, "pt_frobenius", "rcond"]
FIELD_HEADER = ["x1", "x2", "x3", "re_E1", "im_E1", "re_E2", "im_E2", "re_E3", "im_E3"]
TRAJECTORY_PLOT_LIMIT = 8


def _build_system(config: RunConfig) -> ParticleSystem:
    curves = [shape.build() for shape in config.shapes]
    labels = [shape.label or f"D{i + 1}" for i, shape in enumerate(config.shapes)]
    return make_system(curves, labels=labels, min_separation=get_settings().min_separation)


def _block_labels(matrix: NPMatrix) -> List[Dict[str, object]]:
    """Метки частиц и диапазоны их строк в блочной матрице."""
    return [
        {"label": label, "rows": [start, stop]}
        for label, (start, stop) in zip(matrix.labels, matrix.block_offsets)
    ]


def _tensor_row(tensor: PolarizationTensor) -> List[float]:
    row = [tensor.lam.real, tensor.lam.imag]
    for value in tensor.flat():
        row.extend((value.real, value.imag))
    row.extend((tensor.frobenius, math.nan if tensor.rcond is None else tensor.rcond))
    return row


def _write_sweep(manifest: RunManifest, output: Path, name: str, result: SweepResult, plot: bool, title: str) -> None:
    csv_path = manifest.add(write_csv(output / f"{name}.csv", result.header, result.rows()))
    if plot:
        manifest.add(sweep_script(output / f"{name}.gp", csv_path.name, title, kind=result.kind))


def run_spectrum(config: RunConfig, output: Path, threads: int) -> RunManifest:
    """Спектр оператора K* (одной формы или системы) в spectrum.csv."""
    system = _build_system(config)

    output = prepare_output_dir(output)
    manifest = RunManifest("spectrum", config.echo(), output)
    with manifest.stage("assemble"):
        matrix = assemble(system)
    with manifest.stage("spectrum"):
        spec = spectrum(matrix)

    rows = [[i, value.real, value.imag] for i, value in enumerate(spec.eigenvalues)]
    manifest.add(write_csv(output / "spectrum.csv", SPECTRUM_HEADER, rows))
    if config.plot:
        manifest.add(spectrum_script(output / "spectrum.gp", "spectrum.csv", "NP spectrum"))

    manifest.summary = {
        "n_nodes": spec.n_nodes,
        "shape_hash": system.shape_hash(),
        "blocks": _block_labels(matrix),
        "max_real": spec.max_real,
        "imag_defect": spec.imag_defect,
    }
    echo(f"✅ Спектр: {spec.n_nodes} собственных значений, max Re = {spec.max_real:.12g}")
    return manifest


def _oracle(config: RunConfig) -> Optional[Callable[[complex], PolarizationTensor]]:
    kind = config.polarization.oracle
    if kind is None:
        return None
    if len(config.shapes) != 1 or config.shapes[0].kind != ("circle" if kind == "disk" else "ellipse"):
        raise ConfigError(f"Оракул '{kind}' применим только к одной форме соответствующего типа")
    shape = config.shapes[0]
    if kind == "disk":
        return lambda lam: pt_disk(lam, shape.radius)
    c, s = math.cos(shape.rotation), math.sin(shape.rotation)
    rotation = np.array([[c, -s], [s, c]])
    return lambda lam: pt_ellipse(lam, shape.a, shape.b).rotated(rotation)


def run_polarization(config: RunConfig, output: Path, threads: int) -> RunManifest:
    """Тензоры поляризации для списка контрастов (или частот) в polarization.csv."""
    system = _build_system(config)
    block = config.polarization
    oracle = _oracle(config)
    if block.lambdas is not None:
        lambdas = [as_complex(pair) for pair in block.lambdas]
    else:
        material = config.material.build()
        lambdas = [contrast(material, omega).lambda_eps for omega in block.omegas]

    output = prepare_output_dir(output)
    manifest = RunManifest("polarization", config.echo(), output)
    with manifest.stage("assemble"):
        matrix = assemble(system)
    with manifest.stage("tensors"):
        tensors = [pt_numeric(matrix, lam) for lam in lambdas]
    manifest.add(write_csv(output / "polarization.csv", TENSOR_HEADER, [_tensor_row(t) for t in tensors]))

    summary = {"n_lambdas": len(tensors), "shape_hash": system.shape_hash()}
    if oracle is not None:
        with manifest.stage("oracle"):
            reference = [oracle(lam) for lam in lambdas]
        manifest.add(write_csv(output / "polarization_oracle.csv", TENSOR_HEADER, [_tensor_row(t) for t in reference]))
        errors = [
            float(np.linalg.norm(t.entries - r.entries) / r.frobenius) if r.frobenius else 0.0
            for t, r in zip(tensors, reference)
        ]
        summary["max_relative_error"] = max(errors)
        echo(f"📐 Отклонение от аналитического тензора: {max(errors):.3e}")
    manifest.summary = summary
    echo(f"✅ Тензоры поляризации: {len(tensors)}")
    return manifest


def run_scan(config: RunConfig, output: Path, threads: int) -> RunManifest:
    """Сканирование по частоте, пики в peaks.json; при F > 0 ещё и магнитное."""
    system = _build_system(config)
    material = config.material.build()
    grid = config.grid.build()

    output = prepare_output_dir(output)
    manifest = RunManifest("scan", config.echo(), output)
    with manifest.stage("assemble"):
        matrix = assemble(system)
    with manifest.stage("sweep"):
        result = frequency_sweep(system, material, grid, workers=threads, matrix=matrix)
    peaks = detect_peaks(result, config.prominence)
    _write_sweep(manifest, output, "sweep", result, config.plot, "|M^e| vs wavelength")
    manifest.add(write_json(output / "peaks.json", peaks.to_list()))

    summary = {
        "shape_hash": result.shape_hash,
        "blocks": _block_labels(matrix),
        "n_peaks": len(peaks),
        "n_singular": result.n_singular,
        "min_spectral_distance": result.min_spectral_distance,
    }
    if material.F_fill > 0:
        with manifest.stage("sweep_magnetic"):
            magnetic = frequency_sweep(system, material, grid, workers=threads, kind="mu", matrix=matrix)
        _write_sweep(manifest, output, "sweep_magnetic", magnetic, config.plot, "|M^h| vs wavelength")
        summary["n_peaks_magnetic"] = len(detect_peaks(magnetic, config.prominence))
        summary["min_spectral_distance_magnetic"] = magnetic.min_spectral_distance
    manifest.summary = summary

    for peak in peaks:
        echo(f"📈 Пик: ω = {peak.omega:.6e}, λ = {peak.wavelength_paper:.6e} м, ‖M‖ = {peak.value:.6e}")
    echo(f"✅ Сканирование завершено: {len(peaks)} пиков")
    return manifest


def run_couple(config: RunConfig, output: Path, threads: int) -> RunManifest:
    """Сканирования пары частиц по расстояниям и траектории собственных значений."""
    shape_a, shape_b = (shape.build() for shape in config.shapes)
    reference_shape = config.couple.reference_shape.build() if config.couple.reference_shape else None
    material = config.material.build()
    grid = config.grid.build()
    distances = list(config.couple.distances)
    min_separation = get_settings().min_separation
    too_close = [d for d in distances if d <= min_separation]
    if too_close:
        raise ConfigError(f"Расстояния {too_close} не превышают порог разделения {min_separation:g}")

    output = prepare_output_dir(output)
    manifest = RunManifest("couple", config.echo(), output)
    with manifest.stage("distance_sweep"):
        sweeps = distance_sweep(
            shape_a, shape_b, distances, material, grid,
            workers=threads,
            prominence_frac=config.prominence,
            min_separation=min_separation,
        )

    plotted = []
    peaks_payload = []
    for i, item in enumerate(sweeps):
        name = f"sweep_{i + 1:02d}_d{item.distance:g}"
        manifest.add(write_csv(output / f"{name}.csv", item.result.header, item.result.rows()))
        plotted.append({"csv": f"{name}.csv", "distance": item.distance})
        peaks_payload.append({"distance": item.distance, "peaks": item.peaks.to_list()})
    manifest.add(write_json(output / "peaks_couple.json", peaks_payload))

    trajectory = [EigenTrajectoryRow.from_spectrum(s.distance, s.spectrum, 2) for s in sweeps]
    # при малых зазорах сетка гуще, короткие строки дополняются NaN
    n_eigen = max(len(row.eigenvalues) for row in trajectory)
    header = ["distance", *(f"e{j + 1}" for j in range(n_eigen))]
    rows = [
        [row.distance, *row.eigenvalues, *([math.nan] * (n_eigen - len(row.eigenvalues)))]
        for row in trajectory
    ]
    manifest.add(write_csv(output / "eigen_trajectory.csv", header, rows))

    reference_csv = ""
    summary: Dict[str, object] = {
        "distances": distances,
        "n_peaks": [len(s.peaks) for s in sweeps],
        "n_nodes": [s.spectrum.n_nodes for s in sweeps],
        "leading_coupled": [row.leading_coupled for row in trajectory],
        "imag_defect": [row.imag_defect for row in trajectory],
    }
    if reference_shape is not None:
        reference_system = make_system([reference_shape], labels=["reference"])
        with manifest.stage("reference_sweep"):
            reference = frequency_sweep(reference_system, material, grid, workers=threads)
        reference_peaks = detect_peaks(reference, config.prominence)
        reference_csv = "sweep_reference.csv"
        manifest.add(write_csv(output / reference_csv, reference.header, reference.rows()))
        manifest.add(write_json(output / "peaks_reference.json", reference_peaks.to_list()))
        summary["n_peaks_reference"] = len(reference_peaks)

    if config.plot:
        manifest.add(
            couple_script(
                output / "couple.gp",
                plotted,
                "eigen_trajectory.csv",
                min(TRAJECTORY_PLOT_LIMIT, n_eigen),
                reference_csv=reference_csv,
            )
        )
    manifest.summary = summary
    echo(f"✅ Связь частиц: {len(sweeps)} расстояний")
    return manifest


def _eval_points(config: RunConfig) -> np.ndarray:
    points = config.farfield.points
    if points.kind == "line":
        return line_points(points.start, points.stop, points.n)
    if points.kind == "sphere":
        return sphere_points(points.center, points.radius, points.n)
    if not points.points:
        raise ConfigError("Список точек наблюдения пуст")
    return np.asarray(points.points, dtype=float)


def run_farfield(config: RunConfig, output: Path, threads: int) -> RunManifest:
    """Главный δ³-член рассеянного поля в field.csv."""
    block = config.farfield
    material = config.material.build()
    wave = plane_wave(block.direction, block.polarization, block.omega, material.eps_m, material.mu_m)
    points = _eval_points(config)
    contrasts = contrast(material, block.omega)

    jobs = []
    for scatterer in block.scatterers:
        if scatterer.Me is not None:
            me = as_matrix(scatterer.Me)
        else:
            lam = as_complex(scatterer.lambda_e)
            me = pt_sphere(contrasts.lambda_eps if lam is None else lam, scatterer.radius)
        if scatterer.Mh is not None:
            mh = as_matrix(scatterer.Mh)
        else:
            lam = as_complex(scatterer.lambda_h)
            mh = pt_sphere(contrasts.lambda_mu if lam is None else lam, scatterer.radius)
        jobs.append(
            FarFieldJob(
                z=np.asarray(scatterer.z, dtype=float),
                delta=scatterer.delta,
                Me=me,
                Mh=mh,
                wave=wave,
                eval_points=points,
                r_min=block.r_min,
            )
        )
    field = scattered_field_sum(jobs)

    output = prepare_output_dir(output)
    manifest = RunManifest("farfield", config.echo(), output)
    rows = []
    for x, e in zip(points, field):
        rows.append([*x, e[0].real, e[0].imag, e[1].real, e[1].imag, e[2].real, e[2].imag])
    manifest.add(write_csv(output / "field.csv", FIELD_HEADER, rows))
    magnitudes = np.linalg.norm(field, axis=-1)
    manifest.summary = {
        "n_points": int(points.shape[0]),
        "n_scatterers": len(jobs),
        "k_m": wave.k_m,
        "max_field": float(np.max(magnitudes)),
    }
    echo(f"✅ Рассеянное поле: {points.shape[0]} точек, max |E − E^i| = {np.max(magnitudes):.6e}")
    return manifest


COMMANDS: Dict[str, Callable[[RunConfig, Path, int], RunManifest]] = {
    "spectrum": run_spectrum,
    "polarization": run_polarization,
    "scan": run_scan,
    "couple": run_couple,
    "farfield": run_farfield,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plasmon",
        description="Плазмонные резонансы: спектр оператора Неймана–Пуанкаре, тензоры поляризации, сканирования",
    )
    parser.add_argument("--config", required=True, help="JSON-файл конфигурации запуска")
    parser.add_argument("--output", default=None, help="директория результатов")
    parser.add_argument("--threads", default=None, help="число потоков или 'auto'")
    parser.add_argument("--quiet", action="store_true", help="не печатать статусные сообщения")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Главная функция; возвращает код выхода (0, 2 — конфигурация, 3 — численная ошибка)."""
    load_dotenv()
    args = build_parser().parse_args(argv)
    set_quiet(args.quiet)
    settings = get_settings()

    try:
        config = load_config(args.config)
        try:
            threads = configure_threads(args.threads if args.threads is not None else settings.threads)
        except ValueError as e:
            raise ConfigError(f"Неверное значение --threads: {e}") from e
        output = Path(args.output or config.output_dir or settings.output_dir)

        echo(f"🚀 Команда '{config.command}', потоков: {threads}")
        manifest = COMMANDS[config.command](config, output, threads)
        path = manifest.write()
        echo(f"💾 Манифест: {path}")
        return 0
    except PlasmonError as e:
        print(f"❌ {e}", file=sys.stderr, flush=True)
        return e.exit_code
    except Exception as e:
        print(f"❌ Критическая ошибка: {e}", file=sys.stderr, flush=True)
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
