"""Executable invariant checks bundled behind ``lindsector verify``."""

from dataclasses import dataclass
from typing import List

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .config import Tolerances
from .dynamics import COND_LIMIT, propagate, relative_disagreement
from .models import ModelSpec
from .sectors import build_sector_matrix, verify_block_equivalence
from .spectra import CLAMP_LIMIT, TAIL_LIMIT, eigendecompose, frame_shift_report, steady_state

ORACLE_NMAX = 8
REGRESSION_NMAX = 30


@dataclass
class CheckResult:
    name: str
    value: float
    limit: float
    passed: bool
    detail: str = ""


def _check(name, value, limit, detail=""):
    return CheckResult(name, float(value), float(limit), bool(value < limit), detail)


def check_block_equivalence(model: ModelSpec, tol, fault=0.0) -> CheckResult:
    small = model.replace(n_max=min(ORACLE_NMAX, model.n_max))
    hook = None
    if fault:
        def hook(k, entries):
            if k == 0:
                entries[0, 0] += fault
            return entries
    res = verify_block_equivalence(small, block_hook=hook)
    value = max(res.deviation, res.off_block)
    return _check("block_equivalence", value, tol, f"n_max={small.n_max}, off-block max {res.off_block:.3g}")


def check_frame_shift(model: ModelSpec, k_cap, tol) -> CheckResult:
    """Pass when every eigenvalue resolvable to ``tol * scale`` obeys the shift.

    Eigenvalues whose a posteriori error bound exceeds the tolerance in
    either frame cannot confirm or refute the identity in double precision;
    they are counted in the detail column, with the all-pairs maximum.
    """
    lab = model if model.frame == "lab" else model.replace(frame="lab")
    scale = max(lab.gamma, abs(lab.h.frequency))
    rep = frame_shift_report(lab, k_cap, tol=tol * scale)
    resolved = rep.total - rep.excluded
    detail = (f"|k| <= {k_cap}, omega_c={lab.h.frequency:g}, {resolved}/{rep.total} resolvable, "
              f"all-pairs max {rep.deviation:.3g}")
    value = rep.certified if resolved else float("inf")
    return _check("frame_shift", value, tol * scale, detail)


def check_trace_preservation(model: ModelSpec, tol) -> CheckResult:
    M = build_sector_matrix(model, 0)
    sums = np.abs(M.entries.sum(axis=0)).max()
    return _check("trace_preservation", sums, tol * M.norm, "sector 0 column sums")


def check_conjugation(model: ModelSpec, k_cap, tol) -> CheckResult:
    worst_entry = 0.0
    worst_value = 0.0
    for k in range(1, k_cap + 1):
        plus = build_sector_matrix(model, k).entries
        minus = build_sector_matrix(model, -k).entries
        worst_entry = max(worst_entry, float(np.max(np.abs(minus - np.conj(plus)))))
        lp = sla.eigvals(plus)
        lm = sla.eigvals(minus)
        cost = np.abs(lm[:, None] - np.conj(lp)[None, :])
        r, c = linear_sum_assignment(cost)
        worst_value = max(worst_value, float(cost[r, c].max()))
    value = max(worst_entry, worst_value)
    return _check("conjugation_pairing", value, tol * model.gamma,
                  f"entries {worst_entry:.3g}, eigenvalues {worst_value:.3g}")


def check_regression(model: ModelSpec, tol) -> CheckResult:
    small = model.replace(n_max=min(REGRESSION_NMAX, model.n_max))
    ss = steady_state(small, check_tail=False)
    M = build_sector_matrix(small, 1)
    p = np.arange(1, small.n_max + 1)
    x0 = ss.occupations[p] * np.sqrt(p)
    taus = np.linspace(0.0, 10.0 / small.gamma, 101)
    system = eigendecompose(M)
    if system.cond > COND_LIMIT:
        return CheckResult("regression_consistency", float("nan"), tol, True,
                           f"skipped: eigenvector condition {system.cond:.3g} > {COND_LIMIT:g}")
    xs, _ = propagate(M, x0, taus, method="spectral", system=system)
    xo, _ = propagate(M, x0, taus, method="ode")
    return _check("regression_consistency", relative_disagreement(xs, xo), tol,
                  f"n_max={small.n_max}, cond={system.cond:.3g}")


def check_steady_state(model: ModelSpec) -> CheckResult:
    ss = steady_state(model, check_tail=False)
    neg = max(0.0, -ss.min_before_clamp)
    ok = neg <= CLAMP_LIMIT and ss.tail_weight <= TAIL_LIMIT and abs(ss.trace - 1) < 1e-12
    return CheckResult("steady_state", ss.tail_weight, TAIL_LIMIT, ok,
                       f"tail {ss.tail_weight:.3g}, negativity {neg:.3g}, trace-1 {ss.trace - 1:.3g}")


def run_checks(model: ModelSpec, k_cap=5, tolerances: Tolerances = None, fault=0.0) -> List[CheckResult]:
    tol = tolerances or Tolerances()
    k_cap = min(k_cap, model.n_max)
    return [
        check_block_equivalence(model, tol.block, fault),
        check_frame_shift(model, k_cap, tol.frame_shift),
        check_trace_preservation(model, tol.trace),
        check_conjugation(model, k_cap, tol.conjugation),
        check_regression(model, tol.regression),
        check_steady_state(model),
    ]


def format_table(results: List[CheckResult]) -> str:
    lines = [f"{'check':<24}{'value':>12}{'limit':>12}  result  detail"]
    for r in results:
        lines.append(
            f"{r.name:<24}{r.value:>12.3g}{r.limit:>12.3g}  {'PASS' if r.passed else 'FAIL':<6}  {r.detail}"
        )
    return "\n".join(lines)
