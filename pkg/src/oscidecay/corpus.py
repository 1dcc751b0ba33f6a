"""Reproducibility corpus: canned specs with tagged expected values.

Each case carries checks of the form (quantity, expected, tolerance,
provenance); provenance must be one of paper / trivial / derived and is
validated at load time.  Identical (case, seed) runs produce identical
reports.
"""

from __future__ import annotations

import json
import math
from importlib import resources

from .decay import RaySpec, decay_fit
from .exponents import global_delta, slab_exponent, sublevel_exponent
from .measures import weight_lp_norm
from .newton import newton_polygon
from .problem import ProblemSpec
from .resolution import check_compatibility, coverage_check, resolve

PROVENANCES = {"paper", "trivial", "derived"}


class CorpusError(ValueError):
    pass


def load_cases():
    cases = []
    root = resources.files("oscidecay").joinpath("corpus_data")
    for entry in sorted(root.iterdir()):
        if not entry.name.endswith(".json"):
            continue
        data = json.loads(entry.read_text())
        for check in data["checks"]:
            if check.get("provenance") not in PROVENANCES:
                raise CorpusError(
                    f"{data['name']}: check {check['quantity']} has invalid "
                    f"provenance {check.get('provenance')!r}")
        cases.append(data)
    return cases


class _CaseContext:
    def __init__(self, data, seed):
        self.data = data
        self.seed = seed
        self.spec = ProblemSpec.from_json(data["spec"])
        self._resolution = None
        self._verdict = None
        self._delta = None
        self._sublevel = None

    @property
    def resolution(self):
        if self._resolution is None:
            self._resolution = resolve(self.spec, seed=self.seed)
        return self._resolution

    @property
    def verdict(self):
        if self._verdict is None:
            self._verdict = check_compatibility(self.spec, self.resolution)
        return self._verdict

    @property
    def delta(self):
        if self._delta is None:
            self._delta = global_delta(self.spec, seed=self.seed)
        return self._delta

    @property
    def sublevel(self):
        if self._sublevel is None:
            self._sublevel = sublevel_exponent(self.spec)
        return self._sublevel


def _evaluate(ctx: _CaseContext, quantity: str, params):
    spec = ctx.spec
    if quantity == "newton_distance":
        return float(newton_polygon(spec.phase).newton_distance)
    if quantity == "polygon_vertex_count":
        return float(len(newton_polygon(spec.phase).vertices))
    if quantity == "compatible":
        return 1.0 if ctx.verdict.compatible else 0.0
    if quantity == "offending_s":
        ss = {float(s) for _i, s, _d in ctx.verdict.offending_charts}
        return min(ss) if ss else float("nan")
    if quantity == "n_charts":
        return float(len(ctx.resolution.charts))
    if quantity == "coverage_uncovered_fraction":
        cov = coverage_check(ctx.resolution, spec, samples=20000, seed=ctx.seed)
        return float(cov["uncovered_fraction"])
    if quantity == "sublevel_epsilon":
        return float(ctx.sublevel.exponent)
    if quantity == "sublevel_log_power":
        return float(ctx.sublevel.log_power)
    if quantity == "delta_exponent":
        return float(ctx.delta[0].exponent)
    if quantity == "delta_direction_abs_x":
        return abs(float(ctx.delta[1][0]))
    if quantity == "slab_exponent":
        return float(slab_exponent(spec, tuple(params["direction"])).exponent)
    if quantity == "lp_finite":
        return 1.0 if not math.isinf(weight_lp_norm(spec, params["p"])) else 0.0
    if quantity == "lp_norm":
        return float(weight_lp_norm(spec, params["p"]))
    if quantity == "decay_exponent":
        mags = tuple(float(2 ** k) for k in range(params["kmin"], params["kmax"] + 1))
        ray = RaySpec(tuple(params["ray"]), mags)
        return float(decay_fit(spec, ray).fitted.exponent)
    raise CorpusError(f"unknown corpus quantity {quantity!r}")


def run_case(data, seed: int = 0) -> dict:
    ctx = _CaseContext(data, seed)
    checks = []
    passed = True
    for check in data["checks"]:
        got = _evaluate(ctx, check["quantity"], check.get("params", {}))
        tol = float(check.get("tol", 0.0))
        ok = abs(got - float(check["value"])) <= tol
        passed = passed and ok
        checks.append({
            "quantity": check["quantity"],
            "params": check.get("params", {}),
            "expected": float(check["value"]),
            "got": got,
            "tol": tol,
            "provenance": check["provenance"],
            "passed": ok,
        })
    return {"name": data["name"], "passed": passed, "checks": checks}


def run_corpus(filter_text: str = "", seed: int = 0, out_dir=None) -> dict:
    cases = [c for c in load_cases() if filter_text in c["name"]]
    results = []
    failed = 0
    for data in cases:
        result = run_case(data, seed=seed)
        results.append(result)
        if not result["passed"]:
            failed += 1
        if out_dir:
            import os
            os.makedirs(out_dir, exist_ok=True)
            with open(os.path.join(out_dir, f"{data['name']}.json"), "w") as fh:
                json.dump(result, fh, sort_keys=True, indent=2)
    lines = []
    for r in results:
        for c in r["checks"]:
            lines.append("%-22s %-24s %10.4g %10.4g %8.2g %-8s %s"
                         % (r["name"], c["quantity"], c["expected"], c["got"],
                            c["tol"], c["provenance"],
                            "pass" if c["passed"] else "FAIL"))
    table = "\n".join(lines)
    if not cases and filter_text:
        return {"cases": [], "failed": 0, "table": "",
                "warning": f"no corpus case matches filter {filter_text!r}"}
    return {"cases": results, "failed": failed, "table": table, "seed": seed}
