import pytest

from edukg.config import Settings, load_settings
from edukg.errors import ConfigurationError


class TestLoadSettings:
    def test_defaults(self):
        s = load_settings(env={})
        assert s.threshold == 0.192
        assert s.keyphrase_n == 15
        assert s.related_cap == 20
        assert s.category_cap == 5
        assert s.extractor == "embedrank"
        assert s.broker_url == "memory://"

    def test_toml_file(self, tmp_path):
        cfg = tmp_path / "edukg.toml"
        cfg.write_text('threshold = 0.25\nextractor = "singlerank"\nworkers = 4\n')
        s = load_settings(str(cfg), env={})
        assert s.threshold == 0.25
        assert s.extractor == "singlerank"
        assert s.workers == 4

    def test_env_overrides_file(self, tmp_path):
        cfg = tmp_path / "edukg.toml"
        cfg.write_text("threshold = 0.25\n")
        s = load_settings(str(cfg), env={"EDUKG_THRESHOLD": "0.5",
                                         "EDUKG_PORT": "9999"})
        assert s.threshold == 0.5
        assert s.port == 9999

    def test_missing_file(self):
        with pytest.raises(ConfigurationError):
            load_settings("/does/not/exist.toml", env={})

    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "edukg.toml"
        cfg.write_text("thresh = 0.25\n")
        with pytest.raises(ConfigurationError):
            load_settings(str(cfg), env={})

    def test_threshold_out_of_range(self):
        with pytest.raises(ConfigurationError):
            load_settings(env={"EDUKG_THRESHOLD": "2.0"})
        with pytest.raises(ConfigurationError):
            load_settings(env={"EDUKG_THRESHOLD": "-1.5"})

    def test_threshold_bounds_accepted(self):
        assert load_settings(env={"EDUKG_THRESHOLD": "1.0"}).threshold == 1.0
        assert load_settings(env={"EDUKG_THRESHOLD": "-1.0"}).threshold == -1.0

    def test_bad_extractor(self):
        with pytest.raises(ConfigurationError):
            load_settings(env={"EDUKG_EXTRACTOR": "tfidf"})

    def test_bad_workers(self):
        with pytest.raises(ConfigurationError):
            load_settings(env={"EDUKG_WORKERS": "0"})

    def test_validate_returns_self(self):
        s = Settings()
        assert s.validate() is s
