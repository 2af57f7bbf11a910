import json
import math
import warnings

import numpy as np
from pytest import approx, mark, raises

from sov6v.config import ModelParams, RunConfig, parse_config, thread_count
from sov6v.errors import ConfigError, InvalidModel
from utils.synthetic import generic_inhomogeneities

MINIMAL = {"N": 2, "x": 0, "y": 1, "omega": [0, 1], "eta": [0.377, 0.411], "seed": 7}


def test_minimal_config_parses():
    cfg = parse_config(json.dumps(MINIMAL))
    assert cfg.N == 2
    assert cfg.eta == approx(0.377 + 0.411j)
    assert cfg.omega == 1j
    assert cfg.kappa == (1 + 0j,)


def test_even_chain_rejects_xy_zero():
    doc = {**MINIMAL, "x": 0, "y": 0}
    with raises(InvalidModel):
        parse_config(json.dumps(doc))


def test_odd_chain_accepts_xy_zero():
    cfg = parse_config(json.dumps({**MINIMAL, "N": 3, "x": 0, "y": 0}))
    assert cfg.model_params().sign == 1


def test_degenerate_inhomogeneities_name_the_pair():
    doc = {**MINIMAL, "xi_mode": "explicit", "xi": [[0.1, 0.0], [0.1, 0.0]]}
    with raises(ConfigError) as err:
        parse_config(json.dumps(doc))
    assert "a=1, b=2, eps=0" in str(err.value)
    assert err.value.path == "xi"


def test_rational_eta_rejected():
    doc = {**MINIMAL, "eta": [math.pi / 4, 0.0]}
    with raises(ConfigError) as err:
        parse_config(json.dumps(doc))
    assert err.value.path == "eta"


@mark.parametrize("field value".split(), [("N", 0), ("seed", -1), ("suites", ["nope"])])
def test_field_errors_carry_path(field, value):
    with raises(ConfigError) as err:
        parse_config(json.dumps({**MINIMAL, field: value}))
    assert field in err.value.path


def test_invalid_json_is_config_error():
    with raises(ConfigError):
        parse_config("{N: 2")


def test_canonical_json_is_stable():
    cfg = parse_config(json.dumps(MINIMAL))
    again = parse_config(cfg.canonical_json())
    assert again.canonical_json() == cfg.canonical_json()
    assert list(json.loads(cfg.canonical_json())) == sorted(json.loads(cfg.canonical_json()))


def test_seeded_inhomogeneities_are_deterministic():
    cfg = parse_config(json.dumps(MINIMAL))
    assert cfg.model_params().xi == cfg.model_params().xi
    assert generic_inhomogeneities(4, 0.377 + 0.411j, seed=3) == generic_inhomogeneities(4, 0.377 + 0.411j, seed=3)
    assert generic_inhomogeneities(4, 0.377 + 0.411j, seed=3) != generic_inhomogeneities(4, 0.377 + 0.411j, seed=4)


def test_tolerance_overrides():
    cfg = RunConfig(**{**MINIMAL, "tol": {"spectrum.count": 1e-3, "*": 1e-5}})
    assert cfg.tolerance("spectrum.count", 1.0) == 1e-3
    assert cfg.tolerance("anything.else", 1.0) == 1e-5
    assert RunConfig(**MINIMAL).tolerance("x", 0.25) == 0.25


def test_model_params_take_first_kappa():
    cfg = RunConfig(**{**MINIMAL, "kappa": [[0.7, 0.2], [1, 0]]})
    assert cfg.model_params().kappa == approx(0.7 + 0.2j)
    assert cfg.model_params(kappa=2.0).kappa == 2.0


def test_derived_quantities(params_factory):
    p = params_factory(2, 1, 1)
    assert p.sign == -1
    assert p.R == 4
    assert p.t00 == approx(-p.eta + math.pi / 2 + math.pi * 1j / 2)
    assert p.with_xy(0, 1).sign == -1
    assert p.with_xy(1, 0).sign == -1
    assert params_factory(3, 0, 0).sign == 1


@mark.parametrize("raw expected".split(), [("4", 4), ("0", 1), ("junk", 1)])
def test_thread_count(monkeypatch, raw, expected):
    monkeypatch.setenv("SOV6V_THREADS", raw)
    assert thread_count() == expected


def test_numpy_scalars_are_plain_python_fields():
    xi = generic_inhomogeneities(2, 0.377 + 0.411j, seed=7)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        p = ModelParams(
            eta=np.complex128(0.377 + 0.411j),
            x=np.bool_(True),
            y=np.abs(np.array([0.2])).max() > 1,
            N=np.int64(2),
            xi=tuple(np.asarray(xi)),
        )
    assert (p.x, p.y, p.N) == (1, 0, 2)
    assert type(p.x) is int and type(p.N) is int
    assert type(p.eta) is complex
