"""Pinned reproduction criteria, one test per criterion.

Each test prints its one-line pass/fail verdict and then asserts it, so a
plain pytest run doubles as the reproduction table.  Expected values and
tolerances live in a2aplan.acceptance; nothing is redefined here.
"""

from __future__ import annotations

import pytest

from a2aplan.acceptance import run_criterion


def _check(number: int) -> None:
    res = run_criterion(number)
    print(res.line())
    assert res.passed, res.detail


def test_c1_worked_example_exact():
    _check(1)


def test_c2_lower_bound_consistency():
    _check(2)


def test_c3_gap_bounds():
    _check(3)


def test_c4_simulator_agreement():
    _check(4)


def test_c5_dominance():
    _check(5)


def test_c6_chosen_d_monotone():
    _check(6)


def test_c7_randomized_verification():
    _check(7)


def test_c8_search_space_magnitude():
    # the exact count starts 3.6655e79; the pinned expectation of 4.1e79 is
    # kept as written and this test reports the mismatch honestly
    _check(8)


def test_c9_relabeling_benefit():
    _check(9)
