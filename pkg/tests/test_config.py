"""
Tests for experiment configs.
"""

import pytest
from toric import ConfigError, SolverMethod, TraceMode, load_config
from toric.config import ExperimentConfig, parse_config


class TestParseConfig:
    """Tests for the key = value format."""

    def test_parse(self, config_text):
        """Test typed values."""
        config = parse_config(config_text)
        assert config.grid_n == 24
        assert config.geometry == "reduced"
        assert config.mode is TraceMode.LENGTH
        assert config.method is SolverMethod.CGLS
        assert config.lam == 0.01
        assert config.seed == 7

    def test_defaults(self):
        """Test that an empty file gives the default config."""
        assert parse_config("# nothing\n") == ExperimentConfig()

    def test_inline_comments_and_case(self):
        """Test inline comments and upper-case keys."""
        config = parse_config("GRID_N = 50  # small\nnonneg = yes\ntv_tau = auto\n")
        assert config.grid_n == 50
        assert config.nonneg is True
        assert config.tv_tau is None

    def test_hex_seed(self):
        """Test integer literals with a base prefix."""
        assert parse_config("seed = 0xff\n").seed == 255

    @pytest.mark.parametrize(
        "text, fragment",
        [
            ("colour = red\n", "Unknown config key: colour"),
            ("grid_n = many\n", "Bad value for grid_n"),
            ("mode = fuzzy\n", "Bad value for mode"),
            ("geometry = round\n", "Bad value for geometry"),
            ("nonneg = maybe\n", "Bad value for nonneg"),
        ],
    )
    def test_bad_values(self, text, fragment):
        """Test ConfigError listing each problem."""
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        assert any(fragment in e for e in info.value.errors)

    def test_syntax_error(self):
        """Test that a line without '=' is rejected."""
        with pytest.raises(ConfigError, match="syntax"):
            parse_config("grid_n\n")

    def test_all_errors_reported(self):
        """Test that several bad keys are collected at once."""
        with pytest.raises(ConfigError) as info:
            parse_config("a = 1\nb = 2\n")
        assert len(info.value.errors) == 2


class TestConfigObjects:
    """Tests for derived objects."""

    def test_reduced_geometry(self, config_text):
        """Test the lattice of a reduced config."""
        geom = parse_config(config_text).scan_geometry()
        assert (geom.n_alpha, geom.n_radii) == (24, 8)

    def test_full_geometry(self):
        """Test the default lattice."""
        geom = ExperimentConfig().scan_geometry()
        assert (geom.n_alpha, geom.n_radii) == (360, 199)

    def test_solver_config(self):
        """Test that iters = 0 selects the method default."""
        config = parse_config("method = landweber\niters = 0\nnonneg = true\n")
        solver = config.solver_config()
        assert solver.iterations == 500
        assert solver.nonneg is True

    def test_builtin_and_file_phantoms(self, tmp_path, phantom_text):
        """Test phantom resolution by name and by relative path."""
        assert ExperimentConfig(phantom="ring").phantom_spec().name == "ring"
        (tmp_path / "p.txt").write_text(phantom_text)
        config = ExperimentConfig(phantom="p.txt", base_dir=str(tmp_path))
        assert not config.is_builtin_phantom
        assert config.phantom_spec().name == "file phantom"


class TestConfigHash:
    """Tests for the canonical dump and its hash."""

    def test_hash_is_stable(self, config_text):
        """Test equal hashes for equal configs."""
        assert parse_config(config_text).config_hash() == parse_config(config_text).config_hash()

    def test_hash_ignores_output_location(self, config_text):
        """Test that output_dir, cache_dir and workers do not change the hash."""
        base = parse_config(config_text)
        moved = base.with_overrides({"output_dir": "/x", "cache_dir": "/y", "workers": "8"})
        assert moved.config_hash() == base.config_hash()

    def test_hash_tracks_content(self, config_text):
        """Test that a solver setting changes the hash."""
        base = parse_config(config_text)
        assert base.with_overrides({"seed": "8"}).config_hash() != base.config_hash()

    def test_hash_tracks_phantom_file(self, tmp_path, phantom_text):
        """Test that editing a phantom file changes the hash."""
        path = tmp_path / "p.txt"
        path.write_text(phantom_text)
        config = ExperimentConfig(phantom="p.txt", base_dir=str(tmp_path))
        before = config.config_hash()
        assert config.config_hash() == before
        path.write_text(phantom_text + "disk center=0,0 radius=0.1 value=1\n")
        assert config.config_hash() != before

    def test_canonical_text_parses_back(self, config_text):
        """Test that the canonical dump is itself a valid config."""
        config = parse_config(config_text)
        again = parse_config(config.canonical_text())
        assert again.config_hash() == config.config_hash()

    def test_float_spelling_does_not_matter(self):
        """Test that 1e-2 and 0.01 hash alike."""
        assert parse_config("noise = 1e-2\n").config_hash() == parse_config(
            "noise = 0.010\n"
        ).config_hash()


class TestLoadConfig:
    """Tests for loading from disk."""

    def test_load_with_overrides(self, tmp_path, config_text):
        """Test that overrides replace file values."""
        path = tmp_path / "exp.cfg"
        path.write_text(config_text)
        config = load_config(str(path), {"iters": "5", "method": "htv", "lambda": "0.5"})
        assert config.iters == 5
        assert config.method is SolverMethod.HTV
        assert config.base_dir == str(tmp_path)

    def test_missing_file(self, tmp_path):
        """Test ConfigError for an unreadable file."""
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(str(tmp_path / "missing.cfg"))

    def test_bad_override(self, tmp_path, config_text):
        """Test ConfigError for an unknown override key."""
        path = tmp_path / "exp.cfg"
        path.write_text(config_text)
        with pytest.raises(ConfigError):
            load_config(str(path), {"speed": "11"})
