"""Acceptance gate: every criterion at its stated tolerance, one line each."""

import pytest

from smlab import acceptance


@pytest.mark.parametrize("number,title", [(n, t) for n, t, _ in acceptance.CRITERIA])
def test_criterion(number, title, capsys):
    results = acceptance.run_all(select={number}, verbose=True)
    assert len(results) == 1
    res = results[0]
    out = capsys.readouterr().out
    assert f"criterion {number:2d}" in out
    assert res.passed, res.line()
