"""Shared fixtures: the full Table 1 run (computed once per session) and the
acceptance report printed at the end of the run."""

import time

import pytest

from metrosim import cli

ACCEPTANCE_LINES = []


def record_acceptance(criterion: str, passed: bool, detail: str):
    ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def _run_table(path, objective):
    start = time.perf_counter()
    code = cli.main(["table1", "--out", str(path), "--objective", objective])
    elapsed = time.perf_counter() - start
    _, header, rows = cli.read_csv(str(path))
    cells = {}
    for row in rows:
        rec = dict(zip(header, row))
        key = (rec["hamiltonian"], rec["parameter"], rec["scenario"])
        cells[key] = float(rec["bound"]) if rec["bound"] != "FAILED" else float("nan")
    return {"exit": code, "seconds": elapsed, "cells": cells}


@pytest.fixture(scope="session")
def table1(tmp_path_factory):
    """Every Table 1 cell at the default budget, measured objective."""
    return _run_table(tmp_path_factory.mktemp("table1") / "table1.csv", "measured")


@pytest.fixture(scope="session")
def table1_qfi(tmp_path_factory):
    """Every Table 1 cell with the QFI objective (probe and time only)."""
    return _run_table(tmp_path_factory.mktemp("table1_qfi") / "table1_qfi.csv", "qfi")
