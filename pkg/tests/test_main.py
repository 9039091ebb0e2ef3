import csv
import json

import numpy as np
import pytest

from plasmon.main import FIELD_HEADER, SPECTRUM_HEADER, TENSOR_HEADER, main
from plasmon.scan import SWEEP_HEADERS

CIRCLE = {"kind": "circle", "radius": 1.0, "n_nodes": 128}
SMALL_CIRCLE = {"kind": "circle", "radius": 1.0, "n_nodes": 64}


def _run(tmp_path, payload, *extra, name="out"):
    config = tmp_path / f"{name}.json"
    config.write_text(json.dumps(payload), encoding="utf-8")
    output = tmp_path / name
    code = main(["--config", str(config), "--output", str(output), "--quiet", *extra])
    return code, output


def _read_csv(path):
    with open(path, encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    return rows[0], np.array([[float(v) for v in row] for row in rows[1:]])


def _manifest(output):
    return json.loads((output / "manifest.json").read_text(encoding="utf-8"))


def test_spectrum_of_circle(tmp_path):
    code, output = _run(tmp_path, {"command": "spectrum", "shapes": [CIRCLE]})
    assert code == 0
    header, rows = _read_csv(output / "spectrum.csv")
    assert header == SPECTRUM_HEADER
    assert rows.shape == (128, 3)
    assert rows[0, 1] == pytest.approx(0.5, abs=1e-11)
    assert np.all(np.abs(rows[1:, 1]) <= 1e-11)

    manifest = _manifest(output)
    assert manifest["command"] == "spectrum"
    assert manifest["artifacts"] == ["spectrum.csv"]
    assert manifest["summary"]["n_nodes"] == 128
    assert manifest["summary"]["blocks"] == [{"label": "D1", "rows": [0, 128]}]
    assert manifest["config"]["shapes"][0]["n_nodes"] == 128


def test_spectrum_of_ellipse_with_plot(tmp_path):
    payload = {"command": "spectrum", "shapes": [{"kind": "ellipse", "a": 1.0, "b": 0.5}], "plot": True}
    code, output = _run(tmp_path, payload)
    assert code == 0
    _, rows = _read_csv(output / "spectrum.csv")
    for target in (1 / 6, -1 / 6):
        assert np.min(np.abs(rows[:, 1] - target)) <= 1e-6
    script = (output / "spectrum.gp").read_text(encoding="utf-8")
    assert '"spectrum.csv"' in script
    assert "spectrum.gp" in _manifest(output)["artifacts"]


def test_unknown_key_fails_before_output(tmp_path, capsys):
    code, output = _run(tmp_path, {"command": "spectrum", "shapes": [CIRCLE], "colour": "red"})
    assert code == 2
    assert not output.exists()
    assert "colour" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    code = main(["--config", str(tmp_path / "nothing.json"), "--output", str(tmp_path / "out"), "--quiet"])
    assert code == 2
    assert not (tmp_path / "out").exists()


def test_invalid_threads(tmp_path):
    code, output = _run(tmp_path, {"command": "spectrum", "shapes": [CIRCLE]}, "--threads", "many")
    assert code == 2
    assert not output.exists()
    code, output = _run(tmp_path, {"command": "spectrum", "shapes": [CIRCLE]}, "--threads", "0")
    assert code == 2


def test_scan_disk(tmp_path):
    payload = {"command": "scan", "shapes": [CIRCLE], "grid": {"n_samples": 128}, "plot": True}
    code, output = _run(tmp_path, payload, "--threads", "2")
    assert code == 0
    header, rows = _read_csv(output / "sweep.csv")
    assert header == SWEEP_HEADERS["eps"]
    assert rows.shape == (128, len(header))
    assert np.all(np.diff(rows[:, 0]) > 0)

    peaks = json.loads((output / "peaks.json").read_text(encoding="utf-8"))
    assert len(peaks) == 1
    assert set(peaks[0]) == {"omega", "wavelength_paper", "value", "prominence"}
    assert peaks[0]["omega"] == pytest.approx(1.2e15, rel=2e-2)

    manifest = _manifest(output)
    assert manifest["summary"]["n_peaks"] == 1
    assert manifest["summary"]["n_singular"] == 0
    assert set(manifest["artifacts"]) == {"sweep.csv", "sweep.gp", "peaks.json"}
    assert '"sweep.csv"' in (output / "sweep.gp").read_text(encoding="utf-8")
    assert not (output / "sweep_magnetic.csv").exists()


def test_scan_is_deterministic_across_thread_counts(tmp_path):
    payload = {"command": "scan", "shapes": [SMALL_CIRCLE], "grid": {"n_samples": 48}}
    code_one, single = _run(tmp_path, payload, "--threads", "1", name="single")
    code_many, pooled = _run(tmp_path, payload, "--threads", "3", name="pooled")
    assert code_one == code_many == 0
    assert (single / "sweep.csv").read_bytes() == (pooled / "sweep.csv").read_bytes()
    assert (single / "peaks.json").read_bytes() == (pooled / "peaks.json").read_bytes()


def test_scan_with_magnetic_filling(tmp_path):
    payload = {
        "command": "scan",
        "shapes": [SMALL_CIRCLE],
        "material": {"F": 0.5},
        "grid": {"n_samples": 32},
    }
    code, output = _run(tmp_path, payload)
    assert code == 0
    header, rows = _read_csv(output / "sweep_magnetic.csv")
    assert header == SWEEP_HEADERS["mu"]
    assert rows.shape[0] == 32
    assert "n_peaks_magnetic" in _manifest(output)["summary"]


def test_polarization_with_disk_oracle(tmp_path):
    payload = {
        "command": "polarization",
        "shapes": [CIRCLE],
        "polarization": {"lambdas": [[0.3, 0.05], [-0.2, 0.1], [0.0, -0.2]], "oracle": "disk"},
    }
    code, output = _run(tmp_path, payload)
    assert code == 0
    header, numeric = _read_csv(output / "polarization.csv")
    _, oracle = _read_csv(output / "polarization_oracle.csv")
    assert header == TENSOR_HEADER
    assert numeric.shape == oracle.shape == (3, len(TENSOR_HEADER))
    assert _manifest(output)["summary"]["max_relative_error"] <= 1e-8


def test_polarization_from_frequencies(tmp_path):
    payload = {
        "command": "polarization",
        "shapes": [{"kind": "ellipse", "a": 1.0, "b": 0.5, "rotation": 0.3}],
        "polarization": {"omegas": [8e14, 1.6e15], "oracle": "ellipse"},
    }
    code, output = _run(tmp_path, payload)
    assert code == 0
    assert _manifest(output)["summary"]["max_relative_error"] <= 1e-6


def test_polarization_oracle_must_match_shape(tmp_path):
    payload = {
        "command": "polarization",
        "shapes": [CIRCLE],
        "polarization": {"lambdas": [[0.3, 0.05]], "oracle": "ellipse"},
    }
    code, output = _run(tmp_path, payload)
    assert code == 2
    assert not output.exists()


def test_couple_rejects_negative_distance(tmp_path):
    payload = {"command": "couple", "shapes": [CIRCLE, CIRCLE], "couple": {"distances": [0.5, -0.1]}}
    code, output = _run(tmp_path, payload)
    assert code == 2
    assert not output.exists()


def test_couple_rejects_distance_below_separation(tmp_path):
    payload = {"command": "couple", "shapes": [CIRCLE, CIRCLE], "couple": {"distances": [5e-4]}}
    code, output = _run(tmp_path, payload)
    assert code == 2
    assert not output.exists()


def test_couple_run(tmp_path):
    payload = {
        "command": "couple",
        "shapes": [SMALL_CIRCLE, SMALL_CIRCLE],
        "grid": {"n_samples": 32},
        "couple": {
            "distances": [1.0, 5.0],
            "reference_shape": {"kind": "ellipse", "a": 2.0, "b": 1.0, "n_nodes": 64},
        },
        "plot": True,
    }
    code, output = _run(tmp_path, payload, "--threads", "2")
    assert code == 0
    expected = {
        "sweep_01_d1.csv",
        "sweep_02_d5.csv",
        "peaks_couple.json",
        "eigen_trajectory.csv",
        "sweep_reference.csv",
        "peaks_reference.json",
        "couple.gp",
    }
    manifest = _manifest(output)
    assert set(manifest["artifacts"]) == expected
    for name in expected:
        assert (output / name).is_file()

    header, trajectory = _read_csv(output / "eigen_trajectory.csv")
    assert header[:3] == ["distance", "e1", "e2"]
    assert len(header) == 1 + 128
    assert trajectory[:, 0].tolist() == [1.0, 5.0]
    assert np.all(np.diff(trajectory[:, 1:], axis=1) <= 0)
    # связанная мода ослабевает с расстоянием
    assert trajectory[0, 3] > trajectory[1, 3]

    peaks = json.loads((output / "peaks_couple.json").read_text(encoding="utf-8"))
    assert [item["distance"] for item in peaks] == [1.0, 5.0]
    script = (output / "couple.gp").read_text(encoding="utf-8")
    assert "sweep_02_d5.csv" in script
    assert "sweep_reference.csv" in script
    assert len(manifest["summary"]["leading_coupled"]) == 2


def test_couple_refines_small_gap_and_pads_trajectory(tmp_path):
    payload = {
        "command": "couple",
        "shapes": [SMALL_CIRCLE, SMALL_CIRCLE],
        "grid": {"n_samples": 8},
        "couple": {"distances": [0.1, 2.0]},
    }
    code, output = _run(tmp_path, payload)
    assert code == 0
    manifest = _manifest(output)
    # 3.5·2π/0.1 -> 224 узла на диск
    assert manifest["summary"]["n_nodes"] == [448, 128]

    header, trajectory = _read_csv(output / "eigen_trajectory.csv")
    assert len(header) == 1 + 448
    assert np.all(trajectory[0, 1:] <= 0.5 + 1e-8)
    assert np.all(np.isfinite(trajectory[1, 1:129]))
    assert np.all(np.isnan(trajectory[1, 129:]))


FARFIELD_ME = [[1.0, 0.0, 0.0], [0.0, [2.0, 0.5], 0.0], [0.0, 0.0, 1.0]]


def _farfield_payload(delta, points, **extra):
    return {
        "command": "farfield",
        "farfield": {
            "omega": 1.2e15,
            "scatterers": [{"z": [0.0, 0.0, 0.0], "delta": delta, "Me": FARFIELD_ME}],
            "points": points,
            **extra,
        },
    }


def test_farfield_scales_with_volume(tmp_path):
    points = {"kind": "sphere", "radius": 1e-5, "n": 20}
    code_a, small = _run(tmp_path, _farfield_payload(1e-8, points), name="small")
    code_b, large = _run(tmp_path, _farfield_payload(2e-8, points), name="large")
    assert code_a == code_b == 0
    header, field_small = _read_csv(small / "field.csv")
    _, field_large = _read_csv(large / "field.csv")
    assert header == FIELD_HEADER
    assert field_small.shape == (20, 9)
    np.testing.assert_allclose(field_large[:, :3], field_small[:, :3])
    np.testing.assert_allclose(field_large[:, 3:], 8 * field_small[:, 3:], rtol=1e-12, atol=0)
    assert _manifest(small)["summary"]["n_points"] == 20


def test_farfield_sphere_from_material(tmp_path):
    payload = {
        "command": "farfield",
        "farfield": {"points": {"kind": "line", "start": [1e-6, 0.0, 0.0], "stop": [1e-5, 0.0, 0.0], "n": 4}},
    }
    code, output = _run(tmp_path, payload)
    assert code == 0
    _, field = _read_csv(output / "field.csv")
    assert field.shape == (4, 9)
    assert np.all(np.isfinite(field))
    assert _manifest(output)["summary"]["max_field"] > 0


def test_farfield_point_too_close(tmp_path):
    points = {"kind": "list", "points": [[1e-5, 0.0, 0.0], [1e-9, 0.0, 0.0]]}
    code, output = _run(tmp_path, _farfield_payload(1e-8, points))
    assert code == 3
    assert not (output / "manifest.json").exists()
