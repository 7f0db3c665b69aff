"""Acceptance criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v``; the lines are printed
live.  A criterion whose only failing checks are documented gaps
(``known_gap``) is reported as xfail; any other failure fails the test.
"""

import pytest

from shadowbp import checks
from shadowbp.harness import hop_profile, linear_fit

pytestmark = pytest.mark.acceptance

INVARIANTS = []
STABILITY = []


def report(capsys, label, res, extra=()):
    """Print the criterion line and its table; fold the suite's logs into
    the invariant and stability checks."""
    INVARIANTS.extend(checks.invariant_checks(res.logs).checks)
    STABILITY.extend(checks.stability_checks(res.logs).checks)
    failed = [c for c in res.checks if not c.passed]
    verdict = "PASS" if not failed else ("FAIL (documented gap)" if all(c.known_gap for c in failed)
                                         else "FAIL")
    with capsys.disabled():
        print(f"\n{label}: {verdict} [{res.seconds:.0f}s]")
        for line in checks.format_table(res.checks).splitlines():
            print("    " + line)
        for line in extra:
            print("    " + line)
    res.logs.clear()
    assert all(c.known_gap for c in failed), f"{label}: {[c.name for c in failed]}"
    if failed:
        pytest.xfail(f"{label}: documented gap in {[c.name for c in failed]}")


def test_criterion_1_oracle(capsys):
    report(capsys, "criterion 1 oracle match", checks.oracle_suite())


def test_criterion_2_chain_profile(capsys):
    res = checks.profile_suite()
    # the same chain at five times the horizon, reported for context only
    long = checks.profile_suite(slots=1_000_000, budget=float("inf"))
    log = long.logs["linear40"]
    _, r2 = linear_fit(hop_profile(log, 0)[::-1])
    ratio = log.mean_real_total() / log.mean_shadow_total()
    res.logs["linear40[T=1e6]"] = log
    report(capsys, "criterion 2 chain profile", res,
           [f"info: T=1e6 gives R^2={r2:.3f}, real/shadow={ratio:.3f} [{long.seconds:.0f}s]"])


def test_criterion_3_grid_ratios(capsys):
    report(capsys, "criterion 3 grid ratios", checks.grid_suite())


def test_criterion_4_diamond_support(capsys):
    report(capsys, "criterion 4 diamond support", checks.diamond_suite())


def test_criterion_5_penalty_tradeoff(capsys):
    report(capsys, "criterion 5 penalty trade-off", checks.tradeoff_suite())


def test_criterion_6_scaling(capsys):
    report(capsys, "criterion 6 backlog scaling", checks.scaling_suite())


def test_criterion_7a_solver(capsys):
    report(capsys, "criterion 7a solver vs brute force", checks.solver_suite())


def test_criterion_7b_equivalence(capsys):
    report(capsys, "criterion 7b shadow/traditional equivalence", checks.equivalence_suite())


def test_criterion_7c_invariants(capsys):
    if not INVARIANTS:
        pytest.skip("no acceptance runs collected")
    res = checks.SuiteResult("invariants", list(INVARIANTS))
    report(capsys, f"criterion 7c invariants over {len(INVARIANTS)} runs", res)


def test_criterion_7d_determinism(capsys):
    report(capsys, "criterion 7d determinism", checks.determinism_suite())


def test_criterion_7e_stability(capsys):
    if not STABILITY:
        pytest.skip("no acceptance runs collected")
    res = checks.SuiteResult("stability", list(STABILITY))
    report(capsys, f"criterion 7e stability over {len(STABILITY)} series", res)
