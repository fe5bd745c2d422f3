import json

import pytest

from semidirect_graphs.config import load_config, parse_config
from semidirect_graphs.errors import ConfigError
from semidirect_graphs.grid import Disk, Polygon, Rectangle
from semidirect_graphs.lie_algebra import GroupMatrix

BASE = {"A": [[1, 0], [0, 1]]}


def test_minimal_and_defaults():
    c = parse_config(BASE)
    assert c.matrix() == GroupMatrix(1, 0, 0, 1)
    assert c.tol == 1e-8 and c.max_iter == 100 and c.threads == 1


def test_matrix_directives():
    c = parse_config({"A": [[1, 2], [0, 3]], "normalize_trace": True})
    assert c.matrix().trace == pytest.approx(2.0)


@pytest.mark.parametrize("dom, cls", [
    ({"kind": "disk", "radius": 1.0, "center": [1, 2]}, Disk),
    ({"kind": "rectangle", "xmin": 0, "xmax": 1, "ymin": 0, "ymax": 2}, Rectangle),
    ({"kind": "polygon", "vertices": [[0, 0], [1, 0], [0, 1]]}, Polygon),
])
def test_domains(dom, cls):
    c = parse_config({**BASE, "oscillation": {"domain": dom, "h": 0.1, "k_list": [0]}})
    assert isinstance(c.oscillation.domain.build(), cls)


@pytest.mark.parametrize("bad", [
    {"A": [[1, 0]]},
    {"A": [[1, 0], [0, 1]], "unknown": 1},
    {"A": [[1, 0], [0, 1]], "solve": {"domain": {"kind": "disk", "radius": 1}, "h_list": [0.1], "boundary": "x", "extra": 1}},
    {"A": [[1, 0], [0, 1]], "solve": {"domain": {"kind": "disk", "radius": -1}, "h_list": [0.1], "boundary": "x"}},
    {"A": [[1, 0], [0, 1]], "solve": {"domain": {"kind": "disk", "radius": 1}, "h_list": [0.1], "boundary": "y**2"}},
    {"A": [[1, 0], [0, 1]], "solve": {"domain": {"kind": "disk", "radius": 1}, "h_list": [0.1], "boundary": "x", "assert_order": 2}},
    {"A": [[1, 0], [0, 1]], "certify": {"M": 3.0, "domain": {"kind": "disk", "radius": 1}}},
    {"A": [[1, 0], [0, 1]], "scherk": {"p2": [1, 0], "c_schedule": [1], "h": 0.1, "assertions": ["bogus"]}},
    {"A": [[1, 0], [0, 1]], "tol": -1},
])
def test_rejected(bad):
    with pytest.raises(ConfigError):
        parse_config(bad)


def test_missing_block():
    with pytest.raises(ConfigError, match="no 'claim2' block"):
        parse_config(BASE).block("claim2")


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.json")
    (tmp_path / "list.json").write_text("[1]")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "list.json")
    (tmp_path / "ok.json").write_text(json.dumps(BASE))
    assert load_config(tmp_path / "ok.json").A == [[1.0, 0.0], [0.0, 1.0]]
