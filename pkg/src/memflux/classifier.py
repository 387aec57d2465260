"""Regime table: which theorem (if any) decides blow-up or global existence for given exponents."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .core import Parameters
from .errors import InvalidRegime
from .functionals import KernelBounds
from .geometry import Domain

BLOW_UP_ALL = "blow_up_all_data"
BLOW_UP_LARGE = "blow_up_large_data"
GLOBAL = "global"
INDETERMINATE = "indeterminate"
UNCOVERED = "uncovered"

CITE_Q_BRANCH = "blow-up theorem (q-branch: q > max(m, 1))"
CITE_L_BRANCH = "blow-up theorem (l-branch: l > max(m, 1) with uniform kernel bound)"
CITE_LARGE = "blow-up theorem (large data: l > max(m, 1) with positive kernel at t = 0)"
CITE_GLOBAL_A = "global existence theorem, case a (max(q, l) <= 1)"
CITE_GLOBAL_B = "global existence theorem, case b (max(q, l) > 1, l < m, q <= m)"
CITE_REMARK = "borderline remark (q <= m, l = m > 1): outcome depends on b and k"


@dataclass(frozen=True)
class RegimeVerdict:
    tag: str
    citation: str
    conditions: dict = field(default_factory=dict)
    thresholds: Optional[dict] = None

    def to_dict(self) -> dict:
        return {"tag": self.tag, "citation": self.citation, "conditions": self.conditions,
                "thresholds": self.thresholds}


def theorem_clauses(q: float, m: float, l: float) -> dict:
    """Which exponent clauses apply, kernel conditions aside.

    The two blow-up branches belong to one theorem and may overlap; the four
    entries returned here are pairwise exclusive for positive exponents.
    """
    return {
        "global_a": max(q, l) <= 1,
        "global_b": max(q, l) > 1 and l < m and q <= m,
        "blow_up": q > max(m, 1) or l > max(m, 1),
        "remark": q <= m and l > 1 and l == m,
    }


def classify(p: Parameters, kb: Optional[KernelBounds] = None) -> RegimeVerdict:
    """Most specific applicable verdict; ``kb`` supplies the kernel positivity flags."""
    q, m, l = p.q, p.m, p.l
    clauses = theorem_clauses(q, m, l)
    assert sum(clauses.values()) <= 1, f"overlapping theorem clauses for {(q, m, l)}"
    e9 = kb.e9 if kb is not None else None
    e91 = kb.e91 if kb is not None else None
    cond = {
        "q>max(m,1)": q > max(m, 1),
        "l>max(m,1)": l > max(m, 1),
        "max(q,l)<=1": max(q, l) <= 1,
        "l<m": l < m,
        "q<=m": q <= m,
        "l==m": l == m,
        "kernel_positive_at_start": e9,
        "kernel_uniformly_positive": e91,
    }
    if q > max(m, 1):
        return RegimeVerdict(BLOW_UP_ALL, CITE_Q_BRANCH, cond)
    if l > max(m, 1):
        if e91:
            return RegimeVerdict(BLOW_UP_ALL, CITE_L_BRANCH, cond)
        if e9:
            th = {"k0": kb.k0, "T0": kb.T0}
            return RegimeVerdict(BLOW_UP_LARGE, CITE_LARGE, cond, th)
        return RegimeVerdict(UNCOVERED, "no theorem applies: l-branch needs a positive kernel", cond)
    if clauses["global_a"]:
        return RegimeVerdict(GLOBAL, CITE_GLOBAL_A, cond)
    if clauses["global_b"]:
        return RegimeVerdict(GLOBAL, CITE_GLOBAL_B, cond)
    if clauses["remark"]:
        return RegimeVerdict(INDETERMINATE, CITE_REMARK, cond)
    return RegimeVerdict(UNCOVERED, "no theorem applies", cond)


@dataclass(frozen=True)
class LargeDataThreshold:
    J1_required: float
    T0_bound: float  # blow-up time bound for J1(0) = J1_required; never exceeds T0
    absorption_bound: float
    time_bound: float

    def blowup_time_bound(self, J1_0: float, p: Parameters, kb: KernelBounds, d: Domain) -> float:
        return blowup_time_bound(J1_0, p, kb, d)


def blowup_time_bound(J1_0: float, p: Parameters, kb: KernelBounds, d: Domain) -> float:
    """Upper bound on the blow-up time from J1' >= (k0 |Omega|^(1-l) / 2) J1^l.

    Valid only once J1(0) meets the absorption bound of ``large_data_threshold``.
    """
    rate = kb.k0 * d.measure ** (1 - p.l) / 2
    return J1_0 ** (1 - p.l) / ((p.l - 1) * rate)


def large_data_threshold(p: Parameters, kb: KernelBounds, d: Domain) -> LargeDataThreshold:
    """Smallest initial mass J1(0) guaranteeing blow-up by kb.T0 in the l-branch."""
    if not p.l > max(p.m, 1):
        raise InvalidRegime("large-data bound needs l > max(m, 1)")
    if not kb.k0 > 0 or not kb.T0 > 0:
        raise InvalidRegime("large-data bound needs k0 > 0 and T0 > 0")
    vol = d.measure
    absorb = vol * (2 * p.b / kb.k0) ** (1 / (p.l - p.m))
    timeb = ((p.l - 1) * (kb.k0 * vol ** (1 - p.l) / 2) * kb.T0) ** (-1 / (p.l - 1))
    req = max(absorb, timeb)
    return LargeDataThreshold(req, blowup_time_bound(req, p, kb, d), absorb, timeb)
