"""Tests for logging helpers"""

import pytest

from src.utils.logger import _logs_dir, get_logger, log_execution_time


def test_log_dir_from_environment(tmp_path, monkeypatch):
    target = tmp_path / "nested" / "logs"
    monkeypatch.setenv("LOG_DIR", str(target))
    assert _logs_dir() == target
    assert target.is_dir()


def test_get_logger_is_configured_once():
    first = get_logger("a")
    second = get_logger("b")
    assert first is not None and second is not None
    assert getattr(get_logger, "_initialized", False)


class TestExecutionTime:
    def test_returns_result(self):
        @log_execution_time
        def add(x, y):
            return x + y

        assert add(2, 3) == 5
        assert add.__name__ == "add"

    def test_reraises(self):
        @log_execution_time
        def boom():
            raise RuntimeError("bad")

        with pytest.raises(RuntimeError):
            boom()
