import logging

import pytest

from src.utils.logging import log_metrics, log_stage, logger, setup_logging


class _Collect(logging.Handler):
    def __init__(self):
        super().__init__(logging.DEBUG)
        self.records = []

    def emit(self, record):
        self.records.append(record)


@pytest.fixture
def collected():
    handler = _Collect()
    logger.addHandler(handler)
    yield handler.records
    logger.removeHandler(handler)
    setup_logging(False)


def test_setup_logging_is_idempotent():
    setup_logging(False)
    count = len(logger.handlers)
    setup_logging(True)
    assert len(logger.handlers) == count
    assert logger.level == logging.DEBUG
    assert not logger.propagate


def test_stage_levels(collected):
    setup_logging(False)
    log_stage("B", "simulate", "t=30")
    log_stage("Bprime", "warning", "K does not divide t")
    log_stage("codec_round_trip", "error", "1/10 mismatches")
    assert [r.levelno for r in collected] == [logging.INFO, logging.WARNING, logging.ERROR]
    assert "[B]" in collected[0].getMessage() and "t=30" in collected[0].getMessage()


def test_metrics_only_when_verbose(collected):
    setup_logging(False)
    log_metrics("D", {"tl": 2.0})
    assert collected == []
    setup_logging(True)
    log_metrics("D", {"tl": 2.0, "fr": 61.25})
    assert collected[0].getMessage() == "METRICS D: tl=2, fr=61.25"
