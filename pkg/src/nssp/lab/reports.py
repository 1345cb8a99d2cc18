from __future__ import annotations

from dataclasses import dataclass, replace

IDENTITY_PASS = "identity_pass"
IDENTITY_FAIL = "identity_fail"
INEQUALITY_PASS = "inequality_pass"
INEQUALITY_FAIL = "inequality_fail"
RATIO_REPORT = "ratio_report"


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one numerical check.

    ``margin`` is rhs - lhs for identities and inequalities and the observed
    ratio for ratio reports.
    """

    name: str
    status: str
    lhs: float
    rhs: float
    margin: float
    tolerance: float
    context: str = ""
    time: float | None = None
    k: float | None = None
    sigma: float | None = None

    @property
    def passed(self) -> bool:
        return not self.status.endswith("_fail")

    def at(self, **kwargs) -> CheckReport:
        return replace(self, **kwargs)


def identity(name, lhs, rhs, tolerance, context="", **where) -> CheckReport:
    lhs, rhs = float(lhs), float(rhs)
    ok = abs(lhs - rhs) <= tolerance * max(abs(lhs), abs(rhs), 1.0)
    return CheckReport(name, IDENTITY_PASS if ok else IDENTITY_FAIL, lhs, rhs, rhs - lhs, tolerance, context, **where)


def inequality(name, lhs, rhs, tolerance, context="", **where) -> CheckReport:
    """lhs <= rhs up to a relative slack ``tolerance`` on |rhs|."""
    lhs, rhs = float(lhs), float(rhs)
    ok = lhs <= rhs + tolerance * abs(rhs)
    return CheckReport(
        name, INEQUALITY_PASS if ok else INEQUALITY_FAIL, lhs, rhs, rhs - lhs, tolerance, context, **where
    )


def ratio(name, lhs, rhs, context="", tolerance=0.0, **where) -> CheckReport:
    lhs, rhs = float(lhs), float(rhs)
    value = lhs / rhs if rhs != 0 else 0.0
    return CheckReport(name, RATIO_REPORT, lhs, rhs, value, tolerance, context, **where)


def all_passed(reports) -> bool:
    return all(r.passed for r in reports)
