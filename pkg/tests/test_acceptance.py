"""Acceptance suite: runs every criterion at its stated tolerance and prints
one pass/fail line per criterion.  Criteria share a context so the nonlinear
solution feeds the geometry/Eulerian checks, and the report files consumed
by the figure tool are written to the acceptance output directory.
"""

import os

import pytest

from slabwave import acceptance

OUT = os.environ.get("SLABWAVE_ACCEPT_OUT", os.path.join("out", "acceptance"))

_ctx = {}
_results = {}


def _run(number):
    if number not in _results:
        runner = acceptance.RUNNERS[number - 1]
        os.makedirs(OUT, exist_ok=True)
        res = runner(_ctx, OUT)
        print()
        print(res.line())
        for d in res.details:
            print(f"    {d}")
        _results[number] = res
    return _results[number]


@pytest.mark.parametrize("number", range(1, 10))
def test_criterion(number):
    res = _run(number)
    assert res.passed, "\n".join([res.line()] + res.details)
