"""Command-line entry point: one subcommand per verification.

Every subcommand writes ``<name>.csv`` (source of truth) and ``<name>.svg``
into the output directory and ends with one ``VERDICT:`` line.

Exit codes: 0 PASS, 1 usage/config error, 2 FAIL, 3 INCONCLUSIVE.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import acceptance, oracles, reports
from .cornermap import build_counterexample_pair, lipschitz_after_scaling, validate_corner_map
from .deccomplex import BoundaryConditionSpec
from .meshgen import triangulate
from .polygeom import (
    corner_turning_integrals,
    euler_characteristic,
    gauss_bonnet_sums,
    interior_angles,
    named_domain,
)
from .spectral import FAIL, INCONCLUSIVE, PASS, gap_study, index_study, spectral_report

EXIT = {PASS: 0, FAIL: 2, INCONCLUSIVE: 3}
SUBCOMMANDS = ("chi", "angles", "turning", "capacity", "bochner", "spectrum", "index", "gap", "cornermap", "all")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    domain: str = "A"
    h: list = field(default_factory=list)  # empty: DEFAULT_HS capped by the domain
    rho: list = field(default_factory=lambda: [0.2, 0.1])
    grading: float = 2.0
    structured: bool = False
    alpha_series: list = field(default_factory=lambda: list(acceptance.ALPHAS))
    eps: list = field(default_factory=lambda: list(acceptance.EPSILONS))
    beta: list = field(default_factory=lambda: list(acceptance.BETAS))
    quad_points: int = 10_000
    theta: list = field(default_factory=lambda: [math.pi / 2, math.pi, 3 * math.pi / 2])
    rounding_radius: float = 0.1
    bc: str = "maximal"
    expected: int = 1
    forms: int = acceptance.N_BUMP_FORMS
    m: int = 6
    tol: float = 1e-10
    seed: int = 0
    out: str = ""

    def validate(self) -> None:
        if self.subcommand not in SUBCOMMANDS:
            raise UsageError(f"unknown subcommand {self.subcommand!r}")
        for name in ("rho", "alpha_series", "eps", "beta", "theta"):
            if not getattr(self, name):
                raise UsageError(f"--{name.replace('_', '-')} must not be empty")
        for name in ("h", "alpha_series", "eps", "beta"):
            if any(v <= 0 for v in getattr(self, name)):
                raise UsageError(f"--{name.replace('_', '-')} values must be positive")
        if self.tol <= 0 or self.quad_points <= 0 or self.m < 2 or self.forms <= 0:
            raise UsageError("tolerances and counts must be positive (m >= 2)")
        if self.bc not in ("maximal", "minimal"):
            raise UsageError("--bc must be maximal or minimal")


DEFAULT_HS = (0.2, 0.1)
LIST_KEYS = {"h", "rho", "alpha_series", "eps", "beta", "theta"}


def _float_list(text: str) -> list[float]:
    try:
        return [_parse_number(t) for t in str(text).split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"not a comma-separated list of numbers: {text!r}") from exc


def _parse_number(token: str) -> float:
    t = token.strip().lower().replace(" ", "")
    if "pi" in t:  # accepts pi, 3pi/2, 3*pi/4
        num, _, den = t.partition("/")
        coef = num.replace("*", "").replace("pi", "") or "1"
        return float(coef) * math.pi / (float(den) if den else 1.0)
    return float(t)


def read_config_file(path: str | Path) -> dict:
    """Plain ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _coerce(key: str, value):
    kinds = {f.name: f.type for f in fields(RunConfig)}
    if key not in kinds:
        raise UsageError(f"unknown configuration key {key!r}")
    if key in LIST_KEYS:
        return value if isinstance(value, list) else _float_list(value)
    kind = kinds[key]
    try:
        if kind == "bool":
            return value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes", "on")
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
    except ValueError as exc:
        raise UsageError(f"bad value for {key}: {value!r}") from exc
    return str(value)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cornerindex", description="Numerical checks for the Euler operator on polygonal domains.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="key = value file; command-line flags take precedence")
    p.add_argument("--domain", help="A | square | P' | Q' | path to a domain file")
    p.add_argument("--h", help="comma-separated mesh sizes")
    p.add_argument("--rho", help="comma-separated corner-disk radii")
    p.add_argument("--grading", type=float)
    p.add_argument("--structured", action="store_const", const=True)
    p.add_argument("--alpha-series", dest="alpha_series", help="comma-separated alphas")
    p.add_argument("--eps", help="comma-separated epsilons")
    p.add_argument("--beta", help="comma-separated half-angles (pi allowed, e.g. 3pi/4)")
    p.add_argument("--quad-points", dest="quad_points", type=int)
    p.add_argument("--theta", help="comma-separated interior angles in radians (pi allowed)")
    p.add_argument("--rounding-radius", dest="rounding_radius", type=float)
    p.add_argument("--bc", help="spectrum: maximal | minimal")
    p.add_argument("--expected", type=int, help="index: expected index value")
    p.add_argument("--forms", type=int, help="bochner: number of seeded test forms")
    p.add_argument("--m", type=int, help="eigenvalues per solve")
    p.add_argument("--tol", type=float, help="eigensolver tolerance")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help=f"output directory (default ${reports.OUTPUT_ENV} or ./reports)")
    return p


def make_config(argv=None) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    values = {}
    cfg_path = args.pop("config")
    if cfg_path:
        values.update({k: _coerce(k, v) for k, v in read_config_file(cfg_path).items()})
    for k, v in args.items():
        if k != "subcommand" and v is not None:
            values[k] = _coerce(k, v)
    cfg = RunConfig(args["subcommand"], **values)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# subcommands: each returns (verdict, lines to print)


def _hs(cfg, dom) -> list[float]:
    """Mesh sizes: as given, or the defaults kept below the shortest domain edge."""
    if cfg.h:
        return list(cfg.h)
    shortest = min(float(np.linalg.norm(b - a)) for _, _, a, b in dom.edges())
    return [min(h, 0.95 * shortest) for h in DEFAULT_HS]


def run_chi(cfg, out):
    dom = named_domain(cfg.domain)
    chi = euler_characteristic(dom)
    rows, ok = [], True
    for h in _hs(cfg, dom):
        mesh = triangulate(dom, h, cfg.grading, cfg.structured)
        v, e, f = mesh.n_vertices, mesh.n_edges, mesh.n_triangles
        ok &= v - e + f == chi
        rows.append({"domain": dom.name, "h": h, "chi": chi, "V": v, "E": e, "F": f, "V-E+F": v - e + f})
    reports.write_csv(out / "chi.csv", rows)
    reports.write_svg(out / "chi.svg", [("V-E+F", [r["h"] for r in rows], [r["V-E+F"] for r in rows])],
                      f"Euler characteristic of {dom.name}", "h", "V - E + F", logx=True,
                      hlines=[(f"chi = {chi}", chi)])
    return (PASS if ok else FAIL), [str(chi)]


def run_angles(cfg, out):
    dom = named_domain(cfg.domain)
    rows = [{"loop": c.loop_index, "vertex": c.vertex_index, "x": float(c.position[0]), "y": float(c.position[1]),
             "interior_angle": c.interior_angle, "on_hole": c.on_hole} for c in interior_angles(dom)]
    sums = gauss_bonnet_sums(dom)
    expect = [2 * math.pi] + [-2 * math.pi] * len(dom.holes)
    ok = all(abs(s - e) <= 1e-12 for s, e in zip(sums, expect))
    reports.write_csv(out / "angles.csv", rows)
    series = [(f"loop {i}", list(lp[:, 0]) + [lp[0, 0]], list(lp[:, 1]) + [lp[0, 1]]) for i, lp in enumerate(dom.loops)]
    reports.write_svg(out / "angles.svg", series, f"corners of {dom.name}", "x", "y")
    lines = [f"loop {r['loop']} vertex {r['vertex']}: {r['interior_angle'] / math.pi:.6g} pi" for r in rows]
    return (PASS if ok else FAIL), lines


def run_turning(cfg, out):
    rows, lines, ok = [], [], True
    for theta in cfg.theta:
        rep = corner_turning_integrals(theta, cfg.rounding_radius, cfg.quad_points)
        err = abs(rep.signed_turning - rep.closed_form)
        ok &= err <= 1e-8 and rep.inequality_holds
        rows.append({"theta": theta, "rounding_radius": rep.rounding_radius, "signed_turning": rep.signed_turning,
                     "absolute_turning": rep.absolute_turning, "closed_form": rep.closed_form,
                     "error": err, "inequality_holds": rep.inequality_holds})
        lines.append(f"theta={theta:.8g}: signed={rep.signed_turning:.12g} abs={rep.absolute_turning:.12g} "
                     f"inequality {'PASS' if rep.inequality_holds else 'FAIL'}")
    reports.write_csv(out / "turning.csv", rows)
    reports.write_svg(out / "turning.svg",
                      [("signed", cfg.theta, [r["signed_turning"] for r in rows]),
                       ("-absolute", cfg.theta, [-r["absolute_turning"] for r in rows]),
                       ("-(pi - theta)", cfg.theta, [-(math.pi - t) for t in cfg.theta])],
                      "turning of a rounded corner", "theta", "integral of k")
    return (PASS if ok else FAIL), lines


def run_capacity(cfg, out):
    rows, ok = [], True
    for a in cfg.alpha_series:
        for e in cfg.eps:
            for b in cfg.beta:
                p = oracles.CapacityParams(a, e, b)
                closed, quad = oracles.capacity_energy(p)
                defect, bound = oracles.l2_defect(p)
                ok &= abs(closed - quad) <= 1e-8 * abs(closed) and defect <= bound
                rows.append({"alpha": a, "eps": e, "beta": b, "closed_form": closed, "quadrature": quad,
                             "bound": bound, "defect": defect})
    reports.write_csv(out / "capacity.csv", rows)
    sched_rows = []
    for b in cfg.beta:
        for a in sorted((x for x in cfg.alpha_series if x < 1), reverse=True):
            s = oracles.capacity_schedule(a, b)
            sched_rows.append({"alpha": a, "beta": b, "eps": s.eps, "log_eps": s.log_eps, "energy": s.energy,
                               "defect": s.defect, "h1_defect_sq": s.h1_defect_sq})
    for b in cfg.beta:
        vals = [r["h1_defect_sq"] for r in sched_rows if r["beta"] == b]
        ok &= all(x > y for x, y in zip(vals, vals[1:]))
    reports.write_csv(out / "capacity_schedule.csv", sched_rows)
    reports.write_svg(out / "capacity.svg",
                      [(f"beta={b:.4g}", [r["alpha"] for r in sched_rows if r["beta"] == b],
                        [r["h1_defect_sq"] for r in sched_rows if r["beta"] == b]) for b in cfg.beta],
                      "squared H1 defect along eps = alpha^(1/alpha)", "alpha", "energy + L2 defect",
                      logx=True, logy=True)
    worst = max(abs(r["closed_form"] - r["quadrature"]) / r["closed_form"] for r in rows)
    return (PASS if ok else FAIL), [f"{len(rows)} cases, max relative error {worst:.2e}"]


def run_bochner(cfg, out):
    rule = oracles.QuadratureRule()
    rows, ok = [], True
    forms = oracles.random_bump_forms(cfg.forms, cfg.seed)
    for form in forms + oracles.violation_forms():
        lhs, rhs, res = oracles.bochner_identity(form, rule)
        if form.bc_compliant:
            ok &= abs(res) <= 1e-8 * (1 + rhs)
        rows.append({"form": form.name, "bc_compliant": form.bc_compliant, "lhs": lhs, "rhs": rhs, "residual": res})
    viol = rows[len(forms)]
    ok &= abs(viol["lhs"]) <= 1e-6 and abs(viol["rhs"] - 24.0) <= 1e-6
    reports.write_csv(out / "bochner.csv", rows)
    reports.write_svg(out / "bochner.svg",
                      [("|residual|", list(range(len(rows))), [abs(r["residual"]) + 1e-18 for r in rows])],
                      "lhs - rhs per test form", "form", "|lhs - rhs|", logy=True)
    return (PASS if ok else FAIL), [f"{r['form']}: lhs={r['lhs']:.12g} rhs={r['rhs']:.12g}" for r in rows]


def _bc(cfg, rho):
    return BoundaryConditionSpec.minimal(rho) if cfg.bc == "minimal" else BoundaryConditionSpec.maximal()


def run_spectrum(cfg, out):
    dom = named_domain(cfg.domain)
    rows, lines, verdicts = [], [], []
    rhos = cfg.rho if cfg.bc == "minimal" else [0.0]
    for h in sorted(_hs(cfg, dom), reverse=True):
        mesh = triangulate(dom, h, cfg.grading, cfg.structured)
        for rho in rhos:
            for k in (0, 1, 2):
                rep = spectral_report(mesh, _bc(cfg, rho), k, cfg.m, cfg.tol, cfg.seed)
                row = {"degree": k, "h": h, "rho": rho, "bc": rep.bc}
                row.update({f"lambda_{i + 1}": v for i, v in enumerate(rep.eigenvalues)})
                row.update({"kernel_count": "AMBIGUOUS" if rep.ambiguous else rep.kernel_count,
                            "gap_ratio": rep.gap_ratio, "verdict": INCONCLUSIVE if rep.ambiguous else PASS})
                rows.append(row)
                verdicts.append(row["verdict"])
                lines.append(f"h={h:g} rho={rho:g} degree {k}: kernel {row['kernel_count']} (gap ratio {rep.gap_ratio:.2e})")
    reports.write_csv(out / "spectrum.csv", rows)
    reports.write_svg(out / "spectrum.svg",
                      [(f"deg {r['degree']} h={r['h']:g} rho={r['rho']:g}", list(range(1, cfg.m + 1)),
                        [abs(r[f"lambda_{i + 1}"]) + 1e-16 for i in range(cfg.m)]) for r in rows],
                      "lowest eigenvalues", "index", "|lambda|", logy=True)
    return (INCONCLUSIVE if INCONCLUSIVE in verdicts else PASS), lines


def run_index(cfg, out):
    dom = named_domain(cfg.domain)
    study = index_study(dom, _hs(cfg, dom), cfg.rho, expected=cfg.expected, grading=cfg.grading,
                        structured=cfg.structured, m=cfg.m, seed=cfg.seed)
    reports.write_csv(out / "index.csv", study.rows(cfg.m))
    series = []
    for rho in cfg.rho:
        pts = [p for p in study.points if p.rho == rho]
        series.append((f"rho={rho:g}", [p.h for p in pts], [np.nan if p.value is None else p.value for p in pts]))
    reports.write_svg(out / "index.svg", series, f"index on {dom.name}", "h", "ind", logx=True,
                      hlines=[(f"chi = {euler_characteristic(dom)}", euler_characteristic(dom))])
    lines = [f"h={p.h:g} rho={p.rho:g}: ind = {p.value if p.value is not None else 'AMBIGUOUS'}" for p in study.points]
    return study.verdict, lines


def run_gap(cfg, out):
    dom = named_domain(cfg.domain)
    mini = gap_study(dom, cfg.rho, _hs(cfg, dom), grading=cfg.grading, structured=cfg.structured, seed=cfg.seed)
    maxi = gap_study(dom, (), _hs(cfg, dom), treatment="maximal", grading=cfg.grading, structured=cfg.structured,
                     seed=cfg.seed)
    reports.write_csv(out / "gap.csv", mini.rows(4) + maxi.rows(4))
    series = [(f"minimal rho={rho:g}", [p.h for p in mini.points if p.rho == rho],
               [p.value for p in mini.points if p.rho == rho]) for rho in cfg.rho]
    reports.write_svg(out / "gap.svg", series, f"lambda_min, degree 1, {dom.name}", "h", "lambda_min", logx=True,
                      hlines=[(f"c = {mini.notes['floor']:.4g}", mini.notes["floor"])])
    lines = [f"rho={r:g}: lambda_min {v['lambda_min']:.6g} (change {v['relative_change']:.2%})"
             for r, v in mini.notes["stabilized"].items()]
    lines.append(f"reported c = {mini.notes['floor']:.6g}; maximal lambda_min <= {max(p.value for p in maxi.points):.2e}")
    return _combine(mini.verdict, maxi.verdict), lines


def _combine(*verdicts):
    if FAIL in verdicts:
        return FAIL
    if INCONCLUSIVE in verdicts:
        return INCONCLUSIVE
    return PASS


def run_cornermap(cfg, out):
    _, _, cmap = build_counterexample_pair()
    rep = validate_corner_map(cmap)
    _, r0 = lipschitz_after_scaling(cmap, 1.0)
    rs = [r0 / 2, r0, 2 * r0, 4 * r0]
    rows = [{"r": r, "max_singular_value": lipschitz_after_scaling(cmap, r)[0], "r0": r0} for r in rs]
    reports.write_csv(out / "cornermap.csv", rows)
    reports.write_csv(out / "cornermap_validation.csv", [{"check": k, "value": v} for k, v in rep.rows()])
    cmap.export(out / "cornermap_pieces.txt")
    reports.write_svg(out / "cornermap.svg", [("sigma_max / r", rs, [r["max_singular_value"] for r in rows])],
                      "Lipschitz constant after scaling", "r", "max singular value", logx=True, logy=True,
                      hlines=[("1", 1.0)])
    ok = rep.valid and abs(rows[2]["max_singular_value"] - 0.5) <= 1e-12
    return (PASS if ok else FAIL), [f"valid={rep.valid} fold pieces={rep.fold_pieces} r0={r0:.12g}"]


def run_all(cfg, out):
    results = acceptance.run_all(verbose=True)
    reports.write_csv(out / "acceptance.csv", acceptance.summary_rows(results))
    reports.write_svg(out / "acceptance.svg", [("seconds", [r.number for r in results], [r.seconds for r in results])],
                      "acceptance run time", "criterion", "seconds", logy=True)
    return (PASS if all(r.passed for r in results) else FAIL), []


RUNNERS = {
    "chi": run_chi, "angles": run_angles, "turning": run_turning, "capacity": run_capacity,
    "bochner": run_bochner, "spectrum": run_spectrum, "index": run_index, "gap": run_gap,
    "cornermap": run_cornermap, "all": run_all,
}


def run(cfg: RunConfig) -> int:
    out = Path(cfg.out) if cfg.out else reports.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    verdict, lines = RUNNERS[cfg.subcommand](cfg, out)
    for line in lines:
        print(line)
    print(f"VERDICT: {verdict}")
    return EXIT[verdict]


def main(argv=None) -> int:
    try:
        cfg = make_config(argv)
    except UsageError as exc:
        print(f"cornerindex: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"cornerindex: error: {exc}", file=sys.stderr)
        return 1
    try:
        return run(cfg)
    except Exception as exc:  # module errors surface as a diagnostic and exit code 1
        print(f"cornerindex: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
