import json

import pytest

from lambstring.config import (
    SCHEMA,
    ConfigError,
    build_scenario,
    demo_names,
    load_scenario,
    read_config,
    with_overrides,
)

SHIPPED = {"linear-m0", "bistable-m0", "duffing-m2", "appendix-b-linear"}


def base():
    return read_config("demo:linear-m0")


def test_demos_load():
    names = demo_names()
    assert SHIPPED <= set(names)
    for name in names:
        scn = load_scenario(f"demo:{name}")
        assert scn.name == name


def test_overrides_reach_numerics():
    scn = load_scenario("demo:linear-m0", h=0.01, n_iter=7, out="/tmp/x", tol=None)
    assert scn.h == 0.01 and scn.numerics["n_iter"] == 7 and scn.out_dir == "/tmp/x"
    assert scn.numerics["tol"] == 1e-10
    doc = base()
    with_overrides(doc, h=1.0)
    assert "h" not in doc.get("numerics", {})


def _mutate(fn):
    doc = base()
    fn(doc)
    return doc


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("force"),
    lambda d: d["params"].update(mu=0),
    lambda d: d["params"].update(m=-1),
    lambda d: d.update(incoming_wave={"p": {"mean": 0}, "p0": 0}),
    lambda d: d.pop("initial_data"),
    lambda d: d.setdefault("numerics", {}).update(tol=1.5),
    lambda d: d.setdefault("numerics", {}).update(h=-0.1),
    lambda d: d.setdefault("numerics", {}).update(cells=1001),
    lambda d: d.update(force="y +"),
    lambda d: d.update(force="-z"),
    lambda d: d["initial_data"]["u0_plus"].update(mean=1.0),
    lambda d: d["initial_data"]["u1_plus"].update(mean=1.0),
    lambda d: d.update(extra=1),
])
def test_invalid_configs(mutate):
    with pytest.raises(ConfigError):
        build_scenario(_mutate(mutate))


def test_incoming_requires_equilibrium():
    doc = read_config("demo:appendix-b-linear")
    doc["force"] = "1 - y"
    with pytest.raises(ConfigError, match="equilibrium"):
        build_scenario(doc)


def test_read_errors(tmp_path):
    with pytest.raises(ConfigError):
        read_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        read_config(bad)
    with pytest.raises(ConfigError):
        read_config("demo:nope")


def test_shipped_schema_matches():
    from pathlib import Path
    shipped = Path(__file__).resolve().parents[1] / "docs" / "config.schema.json"
    assert json.loads(shipped.read_text()) == SCHEMA
