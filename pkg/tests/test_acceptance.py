"""Acceptance criteria 1-9, each at its stated tolerance; one pass/fail line per criterion.

The lines are repeated in the pytest terminal summary; ``-s`` also shows details.
"""

import pytest

from innerlevel import selftest


_LOG = []


@pytest.fixture(autouse=True)
def _collect(acceptance_log):
    yield
    acceptance_log.extend(x for x in _LOG if x not in acceptance_log)


def _report(res):
    _LOG.append(res.line())
    print()
    print(res.line())
    for d in res.details:
        print("    " + d)
    return res


@pytest.fixture(scope="module")
def connectivity():
    return _report(selftest.check_connectivity())


def test_criterion_1_geometry():
    assert _report(selftest.check_geometry()).passed


def test_criterion_2_truncation_oracle():
    assert _report(selftest.check_truncation()).passed


def test_criterion_3_derivatives():
    assert _report(selftest.check_derivatives()).passed


def test_criterion_4_composition_identity():
    assert _report(selftest.check_composition()).passed


def test_criterion_5_connectivity_fixtures(connectivity):
    assert connectivity.passed, connectivity.details


def test_criterion_6_inclusion_chains():
    assert _report(selftest.check_inclusions()).passed


def test_criterion_7_component_diagnostics(connectivity):
    assert _report(selftest.check_components(connectivity.runs)).passed


def test_criterion_8_aleksandrov_suite():
    res = _report(selftest.check_aleksandrov())
    assert res.passed, res.details


def test_criterion_9_verdict_agreement():
    res = _report(selftest.check_verdicts())
    # the report always enumerates the allowed exceptions
    assert res.details[-1].startswith("exception list:")
    assert res.passed, res.details
