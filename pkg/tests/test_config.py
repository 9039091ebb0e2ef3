import json
from pathlib import Path

import numpy as np
import pytest

from plasmon.config import (
    CircleShape,
    EllipseShape,
    StarShape,
    as_complex,
    as_matrix,
    load_config,
    parse_config,
)
from plasmon.errors import ConfigError
from plasmon.materials import DrudeMaterial
from plasmon.scan import DEFAULT_DISTANCES, SweepGrid

CIRCLE = {"kind": "circle", "radius": 1.0}


def _write(tmp_path, payload):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload) if not isinstance(payload, str) else payload, encoding="utf-8")
    return path


def test_minimal_scan_config_uses_defaults(tmp_path):
    config = load_config(_write(tmp_path, {"command": "scan", "shapes": [CIRCLE]}))
    assert config.command == "scan"
    assert isinstance(config.shapes[0], CircleShape)
    assert config.material.build() == DrudeMaterial()
    assert config.grid.build() == SweepGrid()
    assert config.couple.distances == list(DEFAULT_DISTANCES)
    assert config.plot is False
    assert config.prominence == 0.05


def test_shapes_are_discriminated_by_kind():
    config = parse_config(
        {
            "command": "spectrum",
            "shapes": [
                {"kind": "ellipse", "a": 2.0, "b": 1.0, "center": [3.0, 0.0]},
                {"kind": "star", "r0": 1.0, "amplitude": 0.2, "petals": 4, "center": [-3.0, 0.0]},
            ],
        }
    )
    ellipse, star = config.shapes
    assert isinstance(ellipse, EllipseShape)
    assert isinstance(star, StarShape)
    assert ellipse.build().n_nodes == 256
    assert star.build().area == pytest.approx(np.pi * (1 + 0.2**2 / 2), rel=1e-12)


def test_unknown_key_is_rejected(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_config(_write(tmp_path, {"command": "scan", "shapes": [CIRCLE], "grdi": {}}))
    assert "grdi" in str(info.value)


def test_unknown_nested_key_reports_path():
    with pytest.raises(ConfigError) as info:
        parse_config({"command": "scan", "shapes": [{**CIRCLE, "radiuss": 2.0}]})
    assert "shapes.0.circle.radiuss" in str(info.value)


def test_unknown_shape_kind():
    with pytest.raises(ConfigError):
        parse_config({"command": "scan", "shapes": [{"kind": "triangle"}]})


def test_json_syntax_error_reports_position(tmp_path):
    path = _write(tmp_path, '{\n  "command": "scan",\n  "shapes": [\n}')
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert "строка 4" in str(info.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")


def test_couple_needs_two_shapes():
    with pytest.raises(ConfigError) as info:
        parse_config({"command": "couple", "shapes": [CIRCLE]})
    assert "ровно две" in str(info.value)


@pytest.mark.parametrize("distances", [[0.5, -0.1], [0.0], []])
def test_couple_distances_must_be_positive(distances):
    with pytest.raises(ConfigError):
        parse_config({"command": "couple", "shapes": [CIRCLE, CIRCLE], "couple": {"distances": distances}})


def test_couple_reference_shape():
    config = parse_config(
        {
            "command": "couple",
            "shapes": [CIRCLE, CIRCLE],
            "couple": {"distances": [1.0], "reference_shape": {"kind": "ellipse", "a": 2.0, "b": 1.0}},
        }
    )
    assert isinstance(config.couple.reference_shape, EllipseShape)


@pytest.mark.parametrize(
    "block",
    [{}, {"lambdas": [[0.1, 0.2]], "omegas": [1e15]}, {"omegas": [-1.0]}],
)
def test_polarization_needs_exactly_one_source(block):
    with pytest.raises(ConfigError):
        parse_config({"command": "polarization", "shapes": [CIRCLE], "polarization": block})


def test_polarization_block_is_required():
    with pytest.raises(ConfigError):
        parse_config({"command": "polarization", "shapes": [CIRCLE]})


def test_commands_need_shapes():
    for command in ("spectrum", "scan", "polarization"):
        with pytest.raises(ConfigError):
            parse_config({"command": command})


def test_unknown_command():
    with pytest.raises(ConfigError):
        parse_config({"command": "render", "shapes": [CIRCLE]})


def test_prominence_range():
    with pytest.raises(ConfigError):
        parse_config({"command": "scan", "shapes": [CIRCLE], "prominence": 1.5})


def test_farfield_config():
    config = parse_config(
        {
            "command": "farfield",
            "farfield": {
                "scatterers": [
                    {"z": [0.0, 0.0, 0.0], "Me": [[1, 0, 0], [0, [2.0, -1.0], 0], [0, 0, 1]]},
                ],
                "points": {"kind": "line", "start": [1.0, 0.0, 0.0], "stop": [2.0, 0.0, 0.0]},
            },
        }
    )
    scatterer = config.farfield.scatterers[0]
    matrix = as_matrix(scatterer.Me)
    assert matrix[1, 1] == 2.0 - 1.0j
    assert matrix[0, 0] == 1.0
    assert scatterer.Mh is None
    assert config.farfield.points.n == 16


def test_farfield_rejects_non_square_tensor():
    with pytest.raises(ConfigError):
        parse_config(
            {
                "command": "farfield",
                "farfield": {
                    "scatterers": [{"Me": [[1, 0], [0, 1]]}],
                    "points": {"kind": "list", "points": [[1.0, 0.0, 0.0]]},
                },
            }
        )


def test_farfield_block_is_required():
    with pytest.raises(ConfigError):
        parse_config({"command": "farfield"})


def test_as_complex():
    assert as_complex(None) is None
    assert as_complex((0.5, -0.25)) == 0.5 - 0.25j


def test_echo_is_json_serializable():
    config = parse_config({"command": "scan", "shapes": [CIRCLE]})
    echoed = config.echo()
    assert json.loads(json.dumps(echoed)) == echoed
    assert echoed["shapes"][0]["kind"] == "circle"
    assert echoed["material"]["tau"] == 1e-14


def test_bundled_configs_are_valid():
    configs = sorted((Path(__file__).resolve().parent.parent / "configs").glob("*.json"))
    assert configs
    for path in configs:
        load_config(path)
