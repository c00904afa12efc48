"""The nine end-to-end acceptance checks.

Each ``criterion_N`` returns a ``CriterionResult``; a check passes only if its
numerical condition holds and it finishes within its time budget.  The heavy
eigenvalue studies behind checks 5 and 6 are shared through a cache.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

from . import oracles
from .cornermap import build_counterexample_pair, lipschitz_after_scaling, validate_corner_map
from .meshgen import triangulate
from .polygeom import annulus_A, corner_turning_integrals, euler_characteristic, named_domain
from .spectral import PASS, gap_study, index_study

KERNEL_HS = (0.1, 0.05)
KERNEL_RHOS = (0.2, 0.1, 0.05)
GAP_HS = (0.1, 0.05, 0.025)
GAP_RHOS = (0.2, 0.1, 0.05)
ALPHAS = (0.05, 0.1, 0.5)
EPSILONS = (1e-4, 1e-2, 0.25)
BETAS = (math.pi / 4, 3 * math.pi / 4)
SCHEDULE_ALPHAS = (0.4, 0.2, 0.1, 0.05)
N_BUMP_FORMS = 10


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    ok: bool
    detail: str
    seconds: float
    budget: float
    data: dict = field(default_factory=dict, compare=False)

    @property
    def passed(self) -> bool:
        return self.ok and self.seconds <= self.budget

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        over = "" if self.seconds <= self.budget else " OVER BUDGET"
        return f"[{tag}] {self.number}. {self.title}: {self.detail} ({self.seconds:.2f}s of {self.budget:g}s{over})"


def _timed(number, title, budget, fn) -> CriterionResult:
    t0 = time.perf_counter()
    ok, detail, data = fn()
    return CriterionResult(number, title, bool(ok), detail, time.perf_counter() - t0, budget, data)


def criterion_1() -> CriterionResult:
    def run():
        chis = {name: euler_characteristic(named_domain(name)) for name in ("A", "P'", "Q'")}
        ok = chis == {"A": 0, "P'": -1, "Q'": -1}
        levels = []
        for name, hs in (("A", (0.4, 0.2)), ("P'", (0.19, 0.15)), ("Q'", (0.19, 0.15))):
            for h in hs:
                mesh = triangulate(named_domain(name), h, grading=1.0)
                levels.append((name, h, mesh.euler_characteristic))
                ok &= mesh.euler_characteristic == chis[name]
        detail = ", ".join(f"chi({k})={v}" for k, v in chis.items())
        return ok, f"{detail}; V-E+F matches on {len(levels)} meshes", {"levels": levels}
    return _timed(1, "Euler characteristics", 1.0, run)


def criterion_2() -> CriterionResult:
    def run():
        worst, rows = 0.0, []
        for a in ALPHAS:
            for e in EPSILONS:
                for b in BETAS:
                    closed, quad = oracles.capacity_energy(oracles.CapacityParams(a, e, b))
                    rel = abs(closed - quad) / abs(closed)
                    worst = max(worst, rel)
                    rows.append((a, e, b, closed, quad, rel))
        return worst <= 1e-8, f"max relative error {worst:.2e} over {len(rows)} cases", {"rows": rows}
    return _timed(2, "Capacity energy closed form vs quadrature", 10.0, run)


def criterion_3() -> CriterionResult:
    def run():
        margin, rows = math.inf, []
        for a in ALPHAS:
            for e in EPSILONS:
                for b in BETAS:
                    defect, bound = oracles.l2_defect(oracles.CapacityParams(a, e, b))
                    margin = min(margin, bound - defect)
                    rows.append((a, e, b, defect, bound))
        beta = math.pi / 4
        sched = [oracles.capacity_schedule(a, beta).h1_defect_sq for a in SCHEDULE_ALPHAS]
        decreasing = all(x > y for x, y in zip(sched, sched[1:]))
        final_ok = sched[-1] <= 2 * beta * 0.05 * 1.5
        ok = margin >= 0 and decreasing and final_ok
        detail = (f"defect <= bound (min margin {margin:.3g}); schedule "
                  + ", ".join(f"{v:.4g}" for v in sched)
                  + f" strictly decreasing={decreasing}, final <= {2 * beta * 0.075:.4g}: {final_ok}")
        return ok, detail, {"rows": rows, "schedule": sched}
    return _timed(3, "L2 defect bound and schedule", 10.0, run)


def criterion_4() -> CriterionResult:
    def run():
        worst = 0.0
        for form in oracles.random_bump_forms(N_BUMP_FORMS, seed=0):
            lhs, rhs, res = oracles.bochner_identity(form)
            worst = max(worst, abs(res) / (1 + rhs))
        viol = oracles.violation_forms()[0]
        lhs, rhs, _ = oracles.bochner_identity(viol)
        ok = worst <= 1e-8 and abs(lhs) <= 1e-6 and abs(rhs - 24) <= 1e-6
        return ok, (f"max |lhs-rhs|/(1+rhs) = {worst:.2e} on {N_BUMP_FORMS} forms; "
                    f"violation f=y,g=x: lhs={lhs:.3g}, rhs={rhs:.12g}"), {}
    return _timed(4, "Integration-by-parts identity", 30.0, run)


@lru_cache(maxsize=None)
def _index_studies():
    A = annulus_A()
    t0 = time.perf_counter()
    main = index_study(A, KERNEL_HS, KERNEL_RHOS)
    control = index_study(A, KERNEL_HS, (), odd_treatment="maximal", expected=0)
    return main, control, time.perf_counter() - t0


def criterion_5() -> CriterionResult:
    t0 = time.perf_counter()
    main, control, elapsed = _index_studies()
    want = {(0, "maximal"): 1, (1, "maximal"): 1, (2, "maximal"): 0, (1, "minimal"): 0}
    bad, n, min_gap = [], 0, math.inf
    for study in (main, control):
        for pt in study.points:
            for rep in pt.reports:
                key = (rep.degree, "minimal" if "minimal" in rep.bc else "maximal")
                n += 1
                if rep.kernel_count is None or rep.kernel_count != want[key] or rep.gap_ratio < 1e3:
                    bad.append((key, pt.h, pt.rho, rep.kernel_count))
                if math.isfinite(rep.gap_ratio):
                    min_gap = min(min_gap, rep.gap_ratio)
    sizes = sorted({rep.n_dofs for s in (main, control) for p in s.points for rep in p.reports})
    detail = (f"{n - len(bad)}/{n} kernel counts as expected (deg0 max 1, deg1 max 1, deg2 0, deg1 min 0), "
              f"min gap ratio {min_gap:.2e}, up to {sizes[-1]} dofs")
    # the shared studies are charged to this check
    return CriterionResult(5, "Kernel dimensions on A", not bad, detail,
                           elapsed + time.perf_counter() - t0, 300.0, {"bad": bad})


def criterion_6() -> CriterionResult:
    t0 = time.perf_counter()
    main, control, _ = _index_studies()
    inds = [p.value for p in main.points]
    ctrl = [p.value for p in control.points]
    ok = main.verdict == PASS and all(v == 1 for v in inds) and control.verdict == PASS and all(v == 0 for v in ctrl)
    detail = (f"ind = {sorted(set(inds), key=str)} on {len(inds)} (h, rho) points (claimed chi(A) = 0); "
              f"both-maximal control = {sorted(set(ctrl), key=str)}")
    return CriterionResult(6, "Index of the even/odd splitting", ok, detail,
                           time.perf_counter() - t0, 300.0, {"index": inds, "control": ctrl})


def criterion_7() -> CriterionResult:
    def run():
        A = annulus_A()
        mini = gap_study(A, GAP_RHOS, GAP_HS)
        maxi = gap_study(A, (), GAP_HS, treatment="maximal")
        stab = mini.notes["stabilized"]
        c = mini.notes["floor"]
        worst_change = max(v["relative_change"] for v in stab.values())
        lows = [v["lambda_min"] for v in stab.values()]
        max_zero = max(p.value for p in maxi.points)
        ok = mini.verdict == PASS and maxi.verdict == PASS and worst_change < 0.10 and min(lows) >= c
        detail = (f"stabilized lambda_min " + ", ".join(f"rho={r:g}: {v['lambda_min']:.4f}" for r, v in stab.items())
                  + f"; max change {worst_change:.2%}; all >= c = {c:.4f}; maximal lambda_min <= {max_zero:.1e}")
        return ok, detail, {"minimal": mini, "maximal": maxi}
    return _timed(7, "Spectral gap under the minimal treatment", 300.0, run)


def criterion_8() -> CriterionResult:
    def run():
        ok, parts = True, []
        for theta in (math.pi / 2, math.pi, 3 * math.pi / 2):
            rep = corner_turning_integrals(theta, 0.1, quad_points=10_000)
            err = abs(rep.signed_turning - (math.pi - theta))
            expect = theta <= math.pi
            ok &= err <= 1e-8 and rep.inequality_holds == expect
            parts.append(f"theta={theta / math.pi:g}pi: err {err:.1e}, inequality {'holds' if rep.inequality_holds else 'fails'}")
        return ok, "; ".join(parts), {}
    return _timed(8, "Corner turning integrals", 1.0, run)


def criterion_9() -> CriterionResult:
    def run():
        _, _, cmap = build_counterexample_pair()
        rep = validate_corner_map(cmap)
        _, r0 = lipschitz_after_scaling(cmap, 1.0)
        at2, _ = lipschitz_after_scaling(cmap, 2 * r0)
        ok = rep.valid and rep.fold_pieces > 0 and math.isfinite(r0) and abs(at2 - 0.5) <= 1e-12
        detail = (f"continuity {rep.continuity_residual:.1e}, boundary-to-boundary {rep.boundary_to_boundary}, "
                  f"{rep.fold_pieces} fold pieces over DE/AE, r0 = {r0:.6g}, sigma_max(2 r0) = {at2:.15g}")
        return ok, detail, {"report": rep, "r0": r0}
    return _timed(9, "Corner map P' -> Q'", 1.0, run)


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9)


def run_all(verbose: bool = True) -> list[CriterionResult]:
    out = []
    for crit in CRITERIA:
        res = crit()
        if verbose:
            print(res.line(), flush=True)
        out.append(res)
    return out


def summary_rows(results) -> list[dict]:
    return [{"criterion": r.number, "title": r.title, "verdict": "PASS" if r.passed else "FAIL",
             "seconds": round(r.seconds, 3), "budget": r.budget, "detail": r.detail} for r in results]


if __name__ == "__main__":  # pragma: no cover
    res = run_all()
    raise SystemExit(0 if all(r.passed for r in res) else 2)

