import pytest

from nssp.config import BUNDLED, ConfigError, RunConfig, load_config, parse_config

GOOD = """\
schema_version = 1
dim = 2
n = 32
nu = 0.01
dt = 0.001
t_end = 0.5
initial_kind = "taylor_green_2d"
k_ladder = [1, 2, 4]
sigma_list = [-0.5]
"""


class TestParse:
    def test_good_config(self):
        cfg = parse_config(GOOD)
        assert cfg.dim == 2 and cfg.nu == 0.01
        assert cfg.k_ladder == (1.0, 2.0, 4.0)
        assert cfg.output_dir == "run"

    def test_unknown_key_reports_line(self):
        with pytest.raises(ConfigError) as info:
            parse_config(GOOD + "viscosity = 3\n", "x.toml")
        assert info.value.key == "viscosity"
        assert info.value.line == 10
        assert str(info.value).startswith("x.toml:10")

    @pytest.mark.parametrize(
        "line,key",
        [('n = "big"', "n"), ("nu = true", "nu"), ('k_ladder = ["a"]', "k_ladder"), ("seed = 1.5", "seed")],
    )
    def test_type_errors(self, line, key):
        text = "\n".join(l for l in GOOD.splitlines() if not l.startswith(key + " ")) + "\n" + line + "\n"
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        assert info.value.key == key
        assert info.value.line is not None

    @pytest.mark.parametrize(
        "override,key",
        [
            ({"k_ladder": (4, 2)}, "k_ladder"),
            ({"k_ladder": (0.5,)}, "k_ladder"),
            ({"sigma_list": (0.5,)}, "sigma_list"),
            ({"oversample": 3}, "oversample"),
            ({"initial_kind": "vortex"}, "initial_kind"),
            ({"sample_every": 0}, "sample_every"),
        ],
    )
    def test_invariants(self, override, key):
        with pytest.raises(ConfigError) as info:
            RunConfig(**override)
        assert info.value.key == key

    def test_invalid_value_reports_line(self):
        with pytest.raises(ConfigError) as info:
            parse_config(GOOD.replace("[1, 2, 4]", "[4, 2]"))
        assert info.value.line == 8

    def test_schema_version_required(self):
        with pytest.raises(ConfigError):
            parse_config("dim = 2\n")
        with pytest.raises(ConfigError):
            parse_config("schema_version = 2\n")

    def test_syntax_error(self):
        with pytest.raises(ConfigError):
            parse_config("schema_version = = 1\n")

    def test_solver_limits_surface_as_config_errors(self):
        with pytest.raises(ConfigError):
            RunConfig(dt=10.0)

    def test_toml_round_trip(self):
        cfg = parse_config(GOOD).replace(seed=9, output_dir='a "quoted" dir')
        assert parse_config(cfg.to_toml()) == cfg


class TestLoad:
    @pytest.mark.parametrize("name", BUNDLED)
    def test_bundled(self, name):
        cfg = load_config(name)
        assert cfg.output_dir == f"runs/{name}"

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config(tmp_path / "nope.toml")

    def test_file(self, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text(GOOD)
        assert load_config(path) == parse_config(GOOD)
