"""Full acceptance gate, one test per criterion.

The heavy lifting lives in staleness_lab.acceptance; this module runs the
whole battery once per session and reports each criterion as its own test so
a regression shows up as a named failure, not a blob.  Run with -s to see the
per-criterion detail lines even when everything passes.
"""

import pytest

from staleness_lab.acceptance import CRITERIA, run_criteria

NAMES = [name for name, _, _ in CRITERIA]


@pytest.fixture(scope="session")
def acceptance_results():
    results = run_criteria()
    return {name: (ok, detail) for name, ok, detail in results}


@pytest.mark.parametrize("name", NAMES)
def test_criterion(acceptance_results, name):
    ok, detail = acceptance_results[name]
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"{name}: {detail}"


def test_all_twelve_present(acceptance_results):
    assert len(acceptance_results) == 12


class TestGateSensitivity:
    """The gate must fail when the thing it checks is actually wrong."""

    def test_taylor_mutation_is_caught(self, monkeypatch):
        import staleness_lab.acceptance as acc

        real = acc.taylor_inverse_threshold
        monkeypatch.setattr(acc, "taylor_inverse_threshold",
                            lambda tau: real(tau) + 0.2)
        (name, ok, detail), = run_criteria(names=["taylor-accuracy"])
        assert name == "taylor-accuracy"
        assert not ok

    def test_crash_reported_as_failure_not_abort(self, monkeypatch):
        import staleness_lab.acceptance as acc

        def boom(tau):
            raise RuntimeError("induced fault")

        monkeypatch.setattr(acc, "taylor_inverse_threshold", boom)
        results = run_criteria(names=["taylor-accuracy"])
        (name, ok, detail), = results
        assert not ok
        assert "RuntimeError" in detail and "induced fault" in detail
