"""Shared fixtures and the dense GF(2) reference solver used as an oracle."""

from __future__ import annotations

import sys

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("suite", deadline=None, max_examples=60)
settings.load_profile("suite")


class DenseGF2:
    """Reference implementation: unstructured Gaussian elimination.

    Rows are kept as arbitrary-precision bitmasks over all m columns, so
    there is no band structure to get subtly wrong.  Used to check ranks,
    consistency verdicts, and solutions produced by the banded solver.
    """

    def __init__(self, m: int, r: int):
        self.m = m
        self.r = r
        self.rows: list[tuple[int, int]] = []  # (column mask, value)

    def add(self, start: int, coeff: int, value: int) -> None:
        self.rows.append((coeff << start, value))

    def eliminate(self) -> tuple[int, bool]:
        """Returns (rank, consistent); pivots on lowest set bits."""
        pivots: dict[int, tuple[int, int]] = {}
        consistent = True
        for mask, val in self.rows:
            while mask:
                lead = (mask & -mask).bit_length() - 1
                if lead not in pivots:
                    pivots[lead] = (mask, val)
                    break
                pmask, pval = pivots[lead]
                mask ^= pmask
                val ^= pval
            else:
                if val != 0:
                    consistent = False
        return len(pivots), consistent

    def pivot_columns(self) -> set[int]:
        pivots: dict[int, tuple[int, int]] = {}
        for mask, val in self.rows:
            while mask:
                lead = (mask & -mask).bit_length() - 1
                if lead not in pivots:
                    pivots[lead] = (mask, val)
                    break
                pmask, pval = pivots[lead]
                mask ^= pmask
                val ^= pval
        return set(pivots)

    def check_solution(self, z: np.ndarray) -> bool:
        """Every original row must be satisfied by z."""
        for mask, val in self.rows:
            acc = 0
            mm = mask
            while mm:
                i = (mm & -mm).bit_length() - 1
                acc ^= int(z[i])
                mm &= mm - 1
            if acc != val:
                return False
        return True


@pytest.fixture
def dense_oracle():
    return DenseGF2


def random_rows(rng: np.random.Generator, m: int, w: int, r: int, count: int):
    """Random banded rows (start, coeff, value) with coeff bit 0 set."""
    out = []
    span = max(1, m - w + 1)
    for _ in range(count):
        start = int(rng.integers(0, span))
        coeff = (int(rng.integers(0, 1 << 63)) << 1 | 1) & ((1 << w) - 1) | 1
        value = int(rng.integers(0, 1 << r))
        out.append((start, coeff, value))
    return out


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Replay acceptance criterion lines; passing tests' stdout is captured."""
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "CRITERION_LINES", None) if mod else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
