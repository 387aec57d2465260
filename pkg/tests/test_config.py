import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from memflux.config import dump_config, load_config, make_initial, make_problem, parse_config
from memflux.errors import ExpressionSyntaxError

BASE = {
    "domain": {"kind": "interval", "length": 1.0, "points": 51},
    "params": {"a": 1, "b": 1, "q": 0.5, "m": 1, "l": 0.5},
    "kernel": {"kind": "constant", "value": 1},
    "initial": {"kind": "expr", "text": "1 + 0.5*cos(pi*x)"},
    "time": {"horizon": 5, "snapshot_stride": 2},
    "tolerances": {"blowup_threshold": 1e8, "residual_tol": 1e-8},
}


def test_round_trip_fixpoint():
    cfg = parse_config(json.dumps(BASE))
    text = dump_config(cfg)
    assert parse_config(text) == cfg
    assert dump_config(parse_config(text)) == text


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(1e-3, 1e3, allow_nan=False), min_size=5, max_size=5),
       st.floats(1e-3, 1e3), st.integers(8, 500))
def test_round_trip_random(vals, horizon, points):
    raw = dict(BASE, params=dict(zip("abqml", vals)), time={"horizon": horizon},
               domain={"kind": "disk", "radius": 2.0, "dimension": 3, "points": points})
    cfg = parse_config(json.dumps(raw))
    text = dump_config(cfg)
    again = parse_config(text)
    assert again == cfg and dump_config(again) == text
    assert again.params.a == vals[0]  # floats survive bit-exactly


@pytest.mark.parametrize("patch", [
    {"params": {"a": 1, "b": 1, "q": 1, "m": 1}},
    {"kernel": {"kind": "constant", "value": -1}},
    {"domain": {"kind": "interval", "radius": 1.0}},
    {"time": {"horizon": 0}},
    {"unknown": 1},
])
def test_invalid_configs(patch):
    with pytest.raises(ValidationError):
        parse_config(json.dumps(dict(BASE, **patch)))


def test_bad_expression_is_reported():
    with pytest.raises((ValidationError, ExpressionSyntaxError)):
        parse_config(json.dumps(dict(BASE, kernel={"kind": "expr", "text": "x*+"})))


def test_initial_expression_and_table(tmp_path):
    cfg = parse_config(json.dumps(BASE))
    prob = make_problem(cfg)
    np.testing.assert_allclose(prob.initial.values, 1 + 0.5 * np.cos(np.pi * prob.domain.nodes))
    table = dict(BASE, initial={"kind": "table", "values": list(np.linspace(1, 2, 51))})
    path = tmp_path / "c.json"
    path.write_text(json.dumps(table))
    cfg = load_config(path)
    np.testing.assert_allclose(make_initial(cfg, make_problem(cfg).domain).values, np.linspace(1, 2, 51))
