import pytest

from tclswarm.config import PRESETS, load_config, parse_config, preset_config
from tclswarm.ensemble import Regime
from tclswarm.errors import ConfigError

FULL = """
# heterogeneous population
[population]
n = 50                 # count
seed = 7
power_range = 1.0, 2.0
duty_range = 0.45, 0.55
ambient_temp = balanced
initial_temp = 20
schedule = 0 random; 5 consensus; 10 desynchronized 0.5

[run]
duration = 15
dt = 0.01

[sweep]
grid = 12
method = analytic
dt = auto

[train]
hidden_activation = relu
"""


def test_full_file_parses():
    cfg = parse_config(FULL)
    p = cfg.population
    assert (p.n, p.seed, p.power_range, p.ambient_temp, p.initial_temp) == \
        (50, 7, (1.0, 2.0), None, 20.0)
    assert p.schedule[2] == Regime(10.0, "desynchronized", 0.5)
    assert cfg.run.duration == 15.0 and cfg.sweep.grid == 12 and cfg.sweep.dt is None
    assert cfg.train.hidden_activation == "relu"
    assert cfg.snapshot()["population"]["schedule"][1] == [5.0, "consensus", 1.0]


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_resolve(name):
    cfg = preset_config(name)
    assert cfg.preset == name


def test_preset_then_override():
    cfg = parse_config("[run]\npreset = case1\nduration = 100\n[population]\nn = 10\n")
    assert cfg.run.duration == 100.0 and cfg.run.dt == 1.0
    assert cfg.population.n == 10 and cfg.population.set_point == 27.0


@pytest.mark.parametrize("text, line, fragment", [
    ("[population]\nn = 4\nbogus = 1\n", 3, "unknown key"),
    ("[population]\n\nn = four\n", 3, "bad value"),
    ("[nowhere]\nx = 1\n", 1, "unknown section"),
    ("n = 4\n", 1, "no section headers"),
    ("[population]\nn = 4\nn = 5\n", 3, "already exists"),
    ("[population]\nduty_range = 0.6\n", 2, "lo, hi"),
    ("[population]\nduty_range = 0.6, 0.4\n", 1, "duty_range"),
    ("[run]\npreset = mars\n", 2, "unknown preset"),
    ("[sweep]\ngrid = 1\n", 2, "grid"),
    ("[population]\nschedule = 0 chaos\n", 2, "regime"),
    ("[train]\nhidden_activation = sigmoid\n", 2, "hidden_activation"),
])
def test_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text, "exp.ini")
    msg = str(info.value)
    assert msg.startswith(f"exp.ini:{line}:"), msg
    assert fragment in msg


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.ini")
    (tmp_path / "ok.ini").write_text("[population]\nn = 3\n")
    assert load_config(tmp_path / "ok.ini").population.n == 3


def test_with_seed():
    assert preset_config("case1").with_seed(11).population.seed == 11
