import pytest

from fractenna.exceptions import ConfigError
from fractenna.schemas import Symmetry
from fractenna.utils.keyvalue import nest, parse_dotted
from fractenna.utils.run_config import dump_run_config, load_run_config
from fractenna.utils.units import parse_quantity


@pytest.mark.parametrize("text, unit, expected", [
    ("3.5GHz", "Hz", 3.5e9),
    ("7e9", "Hz", 7e9),
    ("250 MHz", "Hz", 2.5e8),
    ("1.57mm", "m", 1.57e-3),
    ("2m", "m", 2.0),
    ("35um", "m", 35e-6),
])
def test_parse_quantity(text, unit, expected):
    assert parse_quantity(text, unit) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("text, unit", [("5GHz", "m"), ("abc", "Hz"), ("", None)])
def test_parse_quantity_rejects(text, unit):
    with pytest.raises(ValueError):
        parse_quantity(text, unit)


def test_dotted_parser_keeps_line_numbers():
    entries = parse_dotted("# comment\n\nga.rng_seed = 7  # inline\nfitness.targets = 3.5e9, 6e9\n")
    assert entries["ga.rng_seed"] == ("7", 3)
    assert nest(entries) == {"ga": {"rng_seed": "7"}, "fitness": {"targets": ["3.5e9", "6e9"]}}


def test_dotted_parser_rejects_garbage():
    with pytest.raises(ValueError, match="line 2"):
        parse_dotted("ga.rng_seed = 1\nnot a key value line\n")


def test_defaults_without_a_file():
    cfg = load_run_config()
    assert cfg.ga.symmetry == Symmetry.MIRROR_X
    assert cfg.fitness.targets == [3.5e9, 6.0e9]
    assert cfg.substrate.eps_r == 4.4


def test_file_and_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("ga.rng_seed = 5\nga.population_size = 12\nfitness.targets = 4e9\n", encoding="utf-8")
    cfg = load_run_config(path, {"ga.rng_seed": 9, "threads": None})
    assert cfg.ga.rng_seed == 9
    assert cfg.ga.population_size == 12
    assert cfg.fitness.targets == [4e9]


def test_file_errors_name_the_line(tmp_path):
    path = tmp_path / "cfg.txt"
    path.write_text("ga.rng_seed = 5\nga.population_size = 3\n", encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        load_run_config(path)
    assert str(info.value) == f"{path}:2: ga.population_size: population must be even and >= 4"


def test_override_errors_name_the_command_line():
    with pytest.raises(ConfigError, match=r"^<command line>: ga.population_size: population must be even"):
        load_run_config(None, {"ga.population_size": 3})


def test_unknown_keys_are_rejected(tmp_path):
    path = tmp_path / "cfg.txt"
    path.write_text("substrate.colour = green\n", encoding="utf-8")
    with pytest.raises(ConfigError, match=r":1: substrate.colour"):
        load_run_config(path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_run_config(tmp_path / "absent.cfg")


def test_dump_reads_back(tmp_path):
    cfg = load_run_config(None, {"ga.rng_seed": 42, "solver.dump_fields": True, "fitness.rl_weights": [2.0, 1.0]})
    path = tmp_path / "config.txt"
    path.write_text(dump_run_config(cfg), encoding="utf-8")
    assert load_run_config(path) == cfg
