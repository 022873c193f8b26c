import pytest

from fsirelax.config import ConfigError, SimulationConfig, load_config, parse_config, serialize_config
from fsirelax.eos import STEEL, VAPOR, WATER


def test_defaults_are_the_bubble_setup():
    cfg = SimulationConfig()
    assert (cfg.n_solid, cfg.n_fluid, cfg.dx) == (600, 600, pytest.approx(1 / 3000))
    mat, e1, e2 = cfg.materials()
    assert (mat, e1, e2) == (STEEL, VAPOR, WATER)
    assert cfg.time_control().cfl == 0.2


def test_parse_example():
    cfg = parse_config("""
        # comment
        scenario.id = gridstudy
        grid.n_solid = 50   # trailing comment
        grid.n_fluid = 50
        time.mode = parabolic
        time.t_end = 1e-5
        time.output = 0, 5e-6
        scenario.width = 150
        convergence.levels = 50, 100
    """)
    assert cfg.scenario == "gridstudy" and cfg.n_solid == 50
    assert cfg.output_times == (0.0, 5e-6)
    assert cfg.scenario_params == {"width": 150.0}
    assert cfg.levels == (50, 100)


def test_serialize_roundtrip():
    cfg = parse_config("scenario.id = bubble\ntime.cfl = 0.3\ntime.output = 0, 1e-4\nscenario.p_in = 4000\n")
    assert parse_config(serialize_config(cfg)) == cfg
    assert serialize_config(parse_config(serialize_config(cfg))) == serialize_config(cfg)


def test_with_cells_keeps_extents():
    cfg = SimulationConfig(x_min=-0.2, x_max=0.4, n_solid=100, n_fluid=200)
    fine = cfg.with_cells(400)
    assert (fine.n_solid, fine.n_fluid) == (400, 800)
    assert fine.dx == pytest.approx(cfg.dx / 4)


@pytest.mark.parametrize("text, fragment", [
    ("grid.n_solid = 600\nbogus.key = 1\n", "unknown key"),
    ("grid.n_solid = abc\n", "bad value"),
    ("no equals sign\n", "expected"),
    ("scenario.id = tsunami\n", "unknown scenario"),
    ("grid.n_solid = 300\n", "cell widths differ"),
    ("time.cfl = 1.5\n", "time.cfl"),
    ("time.t_end = 1e-4\ntime.output = 2e-4\n", "output times"),
    ("relaxation.mode = slow\n", "relaxation.mode"),
    ("phase1.c = -1\n", "positive"),
    ("interfacial.mode = weighted\ninterfacial.d1 = 0.7\n", "d1"),
    ("interfacial.mode = weighted\ninterfacial.d1 = 0.3\ninterfacial.d2 = 0.7\n", "mixture only"),
])
def test_parse_errors(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(text)


def test_load_config(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.cfg")
    path = tmp_path / "a.cfg"
    path.write_text("scenario.id = bubble\n")
    assert load_config(path).scenario == "bubble"


def test_shipped_configs_parse():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    for path in sorted(root.glob("*.cfg")):
        load_config(path)
