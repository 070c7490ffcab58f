import io
import json
import logging
import random
import string

import numpy as np
import pytest

from drgo import Logger
from drgo.logging.exceptions import InvalidLoggerSamplingRateError
from drgo.logging.filters import SuppressFilter
from drgo.logging.formatter import DrgoFormatter
from drgo.logging.logger import set_package_logger
from drgo.shared import constants


@pytest.fixture
def stdout():
    return io.StringIO()


@pytest.fixture
def service_name():
    chars = string.ascii_letters + string.digits
    return "".join(random.SystemRandom().choice(chars) for _ in range(15))


def capture_logging_output(stdout):
    return json.loads(stdout.getvalue().strip())


def capture_multiple_logging_statements_output(stdout):
    return [json.loads(line.strip()) for line in stdout.getvalue().split("\n") if line]


def test_setup_service_name(stdout, service_name):
    # GIVEN Logger is initialized
    # WHEN service is explicitly defined
    logger = Logger(service=service_name, stream=stdout)

    logger.info("Hello")

    # THEN service field should be equals service given
    log = capture_logging_output(stdout)
    assert log["service"] == service_name
    assert log["level"] == "INFO"
    assert log["message"] == "Hello"


def test_setup_service_env_var(monkeypatch, stdout, service_name):
    # GIVEN the service name comes from DRGO_SERVICE_NAME
    monkeypatch.setenv(constants.SERVICE_NAME_ENV, service_name)
    logger = Logger(stream=stdout)

    logger.info("Hello")

    log = capture_logging_output(stdout)
    assert log["service"] == service_name


def test_log_level_env_var(monkeypatch, stdout, service_name):
    monkeypatch.setenv("LOG_LEVEL", "warning")
    logger = Logger(service=service_name, stream=stdout)

    logger.info("hidden")
    logger.warning("shown")

    logs = capture_multiple_logging_statements_output(stdout)
    assert [log["message"] for log in logs] == ["shown"]


def test_keyword_arguments_become_structured_keys(stdout, service_name):
    # GIVEN an epoch summary logged with keyword arguments, numpy values included
    logger = Logger(service=service_name, stream=stdout)

    logger.info("epoch finished", epoch=np.int64(3), recall=np.float64(0.25), weights=np.array([0.5, 0.5]))

    # THEN each keyword is a top level JSON key
    log = capture_logging_output(stdout)
    assert log["epoch"] == 3
    assert log["recall"] == 0.25
    assert log["weights"] == [0.5, 0.5]


def test_extra_and_keywords_are_merged(stdout, service_name):
    logger = Logger(service=service_name, stream=stdout)

    logger.warning("off grid", extra={"config_key": "rho"}, value=0.2)

    log = capture_logging_output(stdout)
    assert (log["config_key"], log["value"]) == ("rho", 0.2)


def test_non_finite_numpy_values_stay_strict_json(stdout, service_name):
    logger = Logger(service=service_name, stream=stdout)

    logger.info("diverged", loss=np.float32("nan"), distances=np.array([1.0, np.inf]))

    log = capture_logging_output(stdout)
    assert log["loss"] == "nan"
    assert log["distances"] == [1.0, "inf"]


def test_append_and_remove_keys(stdout, service_name):
    logger = Logger(service=service_name, stream=stdout)

    logger.append_keys(run_id="a1b2", seed=7)
    logger.info("first")
    logger.remove_keys(["seed"])
    logger.info("second")

    first, second = capture_multiple_logging_statements_output(stdout)
    assert (first["run_id"], first["seed"]) == ("a1b2", 7)
    assert second["run_id"] == "a1b2"
    assert "seed" not in second


def test_json_message_is_decoded(stdout, service_name):
    logger = Logger(service=service_name, stream=stdout)

    logger.info(json.dumps({"split": "popularity"}))
    logger.info({"method": "drgo"})
    logger.info("%s edges", 12)

    logs = capture_multiple_logging_statements_output(stdout)
    assert logs[0]["message"] == {"split": "popularity"}
    assert logs[1]["message"] == {"method": "drgo"}
    assert logs[2]["message"] == "12 edges"


def test_inject_run_context(stdout, service_name):
    # GIVEN a command decorated with the run context
    logger = Logger(service=service_name, stream=stdout)

    @logger.inject_run_context(run_id="run-1", clear_state=True)
    def train_command(seed=None):
        logger.info("training")
        return seed

    # WHEN it runs with a seed
    assert train_command(seed=11) == 11

    # THEN the command name, run id and seed are on every line
    log = capture_logging_output(stdout)
    assert log["command"] == "train_command"
    assert log["run_id"] == "run-1"
    assert log["seed"] == 11


def test_inject_run_context_reads_seed_from_config(stdout, service_name):
    logger = Logger(service=service_name, stream=stdout)

    class Config:
        seed = 5

    @logger.inject_run_context
    def evaluate_command(config):
        logger.info("evaluating")

    evaluate_command(config=Config())

    log = capture_logging_output(stdout)
    assert log["seed"] == 5
    assert len(log["run_id"]) == 12


def test_clear_state_drops_keys_of_previous_runs(stdout, service_name):
    logger = Logger(service=service_name, stream=stdout)
    logger.append_keys(stale="yes")

    @logger.inject_run_context(clear_state=True)
    def synth_command():
        logger.info("generating")

    synth_command()

    log = capture_logging_output(stdout)
    assert "stale" not in log
    assert log["service"] == service_name


def test_exception_is_logged_with_traceback(stdout, service_name):
    logger = Logger(service=service_name, stream=stdout)

    try:
        raise ValueError("boom")
    except ValueError:
        logger.exception("failed")

    log = capture_logging_output(stdout)
    assert log["level"] == "ERROR"
    assert log["exception_name"] == "ValueError"
    assert "boom" in log["exception"]


def test_sampling_rate_enables_debug(stdout, service_name):
    logger = Logger(service=service_name, stream=stdout, sampling_rate=1)

    logger.debug("detail")

    log = capture_logging_output(stdout)
    assert log["level"] == "DEBUG"
    assert log["sampling_rate"] == 1


def test_invalid_sampling_rate(stdout, service_name):
    with pytest.raises(InvalidLoggerSamplingRateError):
        Logger(service=service_name, stream=stdout, sampling_rate="often")


def test_child_logger_shares_parent_handler(stdout, service_name):
    # GIVEN a parent logger and a child created in this module
    parent = Logger(service=service_name, stream=stdout)
    child = Logger(service=service_name, child=True)

    child.info("from child")

    # THEN the child writes through the parent's formatter
    log = capture_logging_output(stdout)
    assert log["message"] == "from child"
    assert child.name == f"{service_name}.{__name__}"
    assert child.registered_handler is parent.registered_handler


def test_logger_is_configured_once(stdout, service_name):
    Logger(service=service_name, stream=stdout)
    again = Logger(service=service_name, stream=stdout)

    assert len(again.handlers) == 1


def test_custom_formatter_order(stdout, service_name):
    formatter = DrgoFormatter(log_record_order=["message", "level"], datefmt="%Y")
    logger = Logger(service=service_name, stream=stdout, logger_formatter=formatter)

    logger.info("ordered")

    log = capture_logging_output(stdout)
    assert list(log)[:2] == ["message", "level"]
    assert len(log["timestamp"]) == 4


def test_suppress_filter():
    record = logging.LogRecord("drgo.train", logging.INFO, __file__, 1, "msg", None, None)
    other = logging.LogRecord("drgoo", logging.INFO, __file__, 1, "msg", None, None)

    assert not SuppressFilter("drgo").filter(record)
    assert SuppressFilter("drgo").filter(other)


def test_set_package_logger(stdout):
    package_logger = logging.getLogger("drgo")
    handlers = list(package_logger.handlers)
    level = package_logger.level

    try:
        set_package_logger(stream=stdout)
        logging.getLogger("drgo.graph.splits").debug("package debug")
        assert "package debug" in stdout.getvalue()
    finally:
        package_logger.handlers = handlers
        package_logger.setLevel(level)
