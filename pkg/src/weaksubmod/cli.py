"""Command-line front end: ``weaksubmod <command> [options]``.

Every command reads an optional JSON config (``--config``) whose top-level
fields are overridden by flags.  Output is JSON (sorted keys) or CSV and is
byte-identical across runs with the same inputs.  Exit status is 0 when every
requested check passes, 1 when a check fails and 2 on invalid input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import guarantees as G
from . import ratios, zoo
from .core import ContractError
from .maximizers import (
    brute_force_opt,
    deterministic_greedy,
    exact_expectation,
    monte_carlo_expectation,
    randomized_greedy,
    trial_seed,
    worker_count,
)

COMMANDS = ("maximize", "opt", "ratio", "profile", "verify", "expect", "guarantee", "pipeline", "sweep")
SUMMARY_COLUMNS = ("mean", "stderr", "opt", "empirical_ratio", "guarantee")
# Exact expectations are used instead of sampling when the branch tree stays small.
EXACT_MAX_K = 6
EXACT_MAX_CAPACITY = 20
GUARANTEE_MAX_N = 16


class CheckFailed(Exception):
    """Raised after output has been written when a requested check failed."""


# ---------------------------------------------------------------------------
# Config handling


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--function", help="function spec: inline JSON or a path to a JSON file")
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--k", type=int)
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--out", help="output path (default stdout)")

    p = argparse.ArgumentParser(prog="weaksubmod", parents=[common],
                                description="Randomized greedy for weakly submodular functions.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("maximize", parents=[common], help="run the randomized greedy")
    sub.add_parser("opt", parents=[common], help="brute-force optimum")
    r = sub.add_parser("ratio", parents=[common], help="local ratio landscape and fitted gammas")
    r.add_argument("--max-pair-size", type=int)
    r.add_argument("--samples", type=int)
    pr = sub.add_parser("profile", parents=[common], help="per-iteration gamma profile")
    pr.add_argument("--at-most", action="store_true", help="minimize over |A| <= i instead of |A| = i")
    v = sub.add_parser("verify", parents=[common], help="bound, lemma or structural checks")
    v.add_argument("--family", help=f"one of {', '.join(ratios.FAMILIES)} or 'lemmas'")
    v.add_argument("--n", type=int)
    v.add_argument("--check", action="append",
                   help="structural check on --function: monotone, submodular, "
                        "proportionally_submodular, weak, pseudo (repeatable)")
    e = sub.add_parser("expect", parents=[common], help="expected value of the randomized greedy")
    e.add_argument("--reference", help="reference set as a JSON list")
    g = sub.add_parser("guarantee", parents=[common], help="evaluate an approximation factor")
    g.add_argument("--formula", default="constants",
                   choices=("constants", "weak", "pseudo", "weak_asymptotic", "pseudo_asymptotic",
                            "prop_submod_limit", "pipeline", "baselines", "partial_dummy", "warm_start",
                            "monotone_profile", "nonmonotone_profile"))
    g.add_argument("--gamma", type=float)
    g.add_argument("--family")
    g.add_argument("--m", type=int)
    sub.add_parser("pipeline", parents=[common], help="warm-started greedy on a product f * g").add_argument(
        "--g-family", choices=G.G_FAMILIES)
    s = sub.add_parser("sweep", parents=[common], help="one summary row per grid point (CSV)")
    s.add_argument("--axis", choices=("k", "n", "seed", "gamma"))
    s.add_argument("--values", help="comma list or lo:hi (inclusive) or lo:hi:step")
    s.add_argument("--generator", choices=tuple(GENERATORS), help="instance family for n sweeps")
    return p


def _load_config(args):
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise zoo.SpecError(f"cannot read config {args.config!r}: {exc}")
        except json.JSONDecodeError as exc:
            raise zoo.SpecError(f"{args.config}: line {exc.lineno} column {exc.colno}: {exc.msg}")
        if not isinstance(cfg, dict):
            raise zoo.SpecError(f"{args.config}: config must be a JSON object")
        cfg["_base_dir"] = str(Path(args.config).parent)
    for key, val in vars(args).items():
        if key not in ("config", "command") and val is not None:
            cfg[key] = val
    cfg.setdefault("seed", 0)
    cfg.setdefault("format", "json")
    tol = cfg.get("tolerance", {})
    cfg["_stderr_slack"] = float(tol.get("stderr_multiple", 4.0))
    cfg["_abs_tol"] = float(tol.get("absolute", 1e-9))
    return cfg


def _function(cfg, required=True):
    src = cfg.get("function")
    if src is None:
        if required:
            raise zoo.SpecError("no function spec given (use --function or a 'function' config field)")
        return None
    base = cfg.get("_base_dir")
    if isinstance(src, str) and not src.lstrip().startswith("{") and base and not Path(src).is_absolute():
        if not Path(src).exists() and (Path(base) / src).exists():
            src = str(Path(base) / src)
    spec, spec_dir = zoo.load_spec(src, base)
    return zoo.build_oracle(spec, spec_dir)


def _k(cfg):
    k = cfg.get("k")
    if k is None:
        raise ContractError("a budget is required (use --k or a 'k' config field)")
    if k < 1:
        raise ContractError(f"invalid budget k={k}")
    return int(k)


def _trials(cfg, default=1):
    t = int(cfg.get("trials", default))
    if t < 1:
        raise ContractError(f"trials must be >= 1, got {t}")
    return t


# ---------------------------------------------------------------------------
# Guarantees and trial summaries


def guarantee_for(f, k):
    """Best applicable factor for ``f`` at budget ``k`` from exhaustive ratio data, or ``(None, reason)``."""
    if f.n > GUARANTEE_MAX_N:
        return None, f"n={f.n} exceeds {GUARANTEE_MAX_N}; no exhaustive guarantee"
    if zoo.check_monotone(f).holds:
        prof = ratios.gamma_profile(f, k, at_most=True)
        return G.factor_monotone(prof, k)[0], "monotone gamma profile"
    best, label = 0.0, "none"
    report = ratios.fit_weak_gamma(f, max_pair_size=None)
    if report.fitted_weak_gamma:
        val = G.factor_weak(report.fitted_weak_gamma, k)
        if val > best:
            best, label = val, f"weak gamma {report.fitted_weak_gamma:.6g}"
    scan = report.scan
    keep = scan.b <= k
    neg_ok = not np.any((scan.cls[keep] == -1) & (scan.sums[keep] < scan.joint[keep] - scan.slack()[keep]))
    if neg_ok:
        prof = ratios.gamma_profile(f, k, at_most=True)
        val = G.factor_nonmonotone_profile(prof, k)
        if val > best:
            best, label = val, "non-monotone gamma profile"
    return best, label


def _summary(values_mc, opt, guarantee, exact=None, stderr_slack=4.0, abs_tol=1e-9):
    out = {"opt": opt, "guarantee": guarantee}
    if values_mc is not None:
        out.update(mean=values_mc.mean, stderr=values_mc.stderr, min=values_mc.min, max=values_mc.max,
                   trials=values_mc.trials)
    if exact is not None:
        out["exact_expected_value"] = exact
    mean = exact if exact is not None else out.get("mean")
    out["empirical_ratio"] = mean / opt if opt > 0 else None
    if guarantee is None or opt <= 0:
        out["pass"] = None
    elif exact is not None:
        out["method"] = "exact"
        out["pass"] = bool(exact >= guarantee * opt - abs_tol)
    else:
        out["method"] = "monte_carlo"
        out["pass"] = bool(out["empirical_ratio"] >= guarantee - stderr_slack * values_mc.stderr / opt)
    return out


def _use_exact(f, k, initial_size=0):
    return k <= EXACT_MAX_K and f.n + 2 * k <= EXACT_MAX_CAPACITY


def _run_summary(f, k, cfg, trials, guarantee, initial=None, opt=None):
    opt = brute_force_opt(f, k).value if opt is None else opt
    mc = monte_carlo_expectation(f, k, trials, cfg["seed"], initial)
    exact = exact_expectation(f, k, initial=initial).exact_expected_value if _use_exact(f, k) else None
    return _summary(mc, opt, guarantee, exact, cfg["_stderr_slack"], cfg["_abs_tol"])


# ---------------------------------------------------------------------------
# Commands


def cmd_maximize(cfg):
    f, k = _function(cfg), _k(cfg)
    trials = _trials(cfg)
    if trials == 1:
        return randomized_greedy(f, k, cfg["seed"]).to_dict()
    g, label = guarantee_for(f, k)
    out = _run_summary(f, k, cfg, trials, g)
    out["guarantee_source"] = label
    return out


def cmd_opt(cfg):
    return brute_force_opt(_function(cfg), _k(cfg)).to_dict()


def cmd_ratio(cfg):
    f = _function(cfg)
    rep = ratios.ratio_report(f, cfg.get("max_pair_size"), cfg.get("samples"), cfg["seed"])
    if cfg["format"] == "csv":
        return _Raw(rep.minima_csv())
    return rep.to_dict()


def cmd_profile(cfg):
    f, k = _function(cfg), _k(cfg)
    prof = ratios.gamma_profile(f, k, at_most=bool(cfg.get("at_most")))
    out = prof.to_dict()
    out["k"] = k
    out["factor_monotone"], out["factor_monotone_exp"] = G.factor_monotone(prof, k)
    out["factor_nonmonotone"] = G.factor_nonmonotone_profile(prof, k)
    out["passed"] = prof.negative_witness is None
    return out


STRUCTURAL_CHECKS = ("monotone", "submodular", "proportionally_submodular", "weak", "pseudo")


def cmd_verify(cfg):
    family = cfg.get("family")
    seed = cfg["seed"]
    if family == "lemmas":
        return ratios.verify_lemmas(_trials(cfg, 50), int(cfg.get("n", 8)), seed)
    if family is not None:
        return ratios.verify_example_bounds(family, _trials(cfg, 50), int(cfg.get("n", 8)),
                                           int(cfg.get("k", 4)), seed)
    f = _function(cfg)
    checks = cfg.get("check") or ["proportionally_submodular"]
    results = {}
    for name in checks:
        if name == "monotone":
            r = zoo.check_monotone(f)
            results[name] = {"passed": r.holds, "witness": r.witness}
        elif name == "submodular":
            r = zoo.check_submodular(f)
            results[name] = {"passed": r.holds, "witness": r.witness}
        elif name == "proportionally_submodular":
            r = zoo.check_proportionally_submodular(f)
            results[name] = {"passed": r.holds, "witness": r.witness}
        elif name == "weak":
            r = ratios.fit_weak_gamma(f)
            results[name] = {"passed": r.fitted_weak_gamma is not None, "gamma": r.fitted_weak_gamma,
                             "witness": r.weak_infeasible_witness}
        elif name == "pseudo":
            r = ratios.fit_pseudo_gamma(f)
            results[name] = {"passed": r.fitted_pseudo_gamma is not None, "gamma": r.fitted_pseudo_gamma,
                             "witness": r.pseudo_infeasible_witness}
        else:
            raise ContractError(f"unknown check {name!r}; expected one of {', '.join(STRUCTURAL_CHECKS)}")
    return {"checks": results, "passed": all(r["passed"] for r in results.values())}


def cmd_expect(cfg):
    f, k = _function(cfg), _k(cfg)
    ref = cfg.get("reference")
    if isinstance(ref, str):
        ref = json.loads(ref)
    if "trials" not in cfg and _use_exact(f, k):
        return exact_expectation(f, k, reference=ref).to_dict()
    mc = monte_carlo_expectation(f, k, _trials(cfg, 1000), cfg["seed"])
    return mc.to_dict()


def cmd_guarantee(cfg):
    formula = cfg.get("formula", "constants")
    gamma, k = cfg.get("gamma"), cfg.get("k")
    if formula == "constants":
        k = k or 10 ** 5
        k += k % 2
        base = G.factor_baselines()
        return {"k": k,
                "prop_submod": G.limit_prop_submod_factor(k),
                "pipeline": {fam: G.factor_product_pipeline(fam, k) for fam in G.G_FAMILIES},
                "baselines": dict(zip(G.G_FAMILIES, base)),
                "partial_dummy_times_e": {
                    "card_sum": G.factor_partial_dummy(k, k // 2, G.card_sum_terms(k)) * math.e,
                    "prop_submod_sum": G.factor_partial_dummy(k, k // 2, G.prop_submod_terms(k)) * math.e}}
    if formula == "baselines":
        return dict(zip(G.G_FAMILIES, G.factor_baselines()))
    if formula in ("weak_asymptotic", "pseudo_asymptotic"):
        fn = G.factor_weak_asymptotic if formula == "weak_asymptotic" else G.factor_pseudo_asymptotic
        return {"gamma": gamma, "value": fn(_need(gamma, "gamma"))}
    if formula == "warm_start":
        fam = cfg.get("family", "submodular")
        alpha = G.WARM_START_ALPHA if gamma is None else gamma
        return {"alpha": alpha, "family": fam, "value": G.claim_warm_start_ratio(alpha, fam)}
    k = int(_need(k, "k"))
    if formula == "weak":
        return {"gamma": gamma, "k": k, "value": G.factor_weak(_need(gamma, "gamma"), k)}
    if formula == "pseudo":
        return {"gamma": gamma, "k": k, "value": G.factor_pseudo(_need(gamma, "gamma"), k)}
    if formula == "prop_submod_limit":
        return {"k": k, "value": G.limit_prop_submod_factor(k)}
    if formula == "pipeline":
        fam = cfg.get("family", "submodular")
        return {"family": fam, "k": k, "value": G.factor_product_pipeline(fam, k)}
    if formula == "partial_dummy":
        m = int(cfg.get("m") or k // 2)
        fam = cfg.get("family", "card_sum")
        terms = G.card_sum_terms(k) if fam == "card_sum" else G.prop_submod_terms(k)
        return {"family": fam, "k": k, "m": m, "value": G.factor_partial_dummy(k, m, terms)}
    f = _function(cfg)
    prof = ratios.gamma_profile(f, k, at_most=True)
    if formula == "monotone_profile":
        exact, expf = G.factor_monotone(prof, k)
        return {"k": k, "gamma": prof.gamma.tolist(), "exact": exact, "exp_form": expf}
    return {"k": k, "gamma": prof.gamma.tolist(), "value": G.factor_nonmonotone_profile(prof, k)}


def _need(x, name):
    if x is None:
        raise ContractError(f"--{name} is required for this formula")
    return x


def infer_g_family(spec):
    """Map the second factor of a product spec to a warm-start family."""
    g = spec["factors"][1]
    kinds = _leaf_types(g)
    if kinds <= {"modular", "coverage"}:
        return "submodular"
    if "metric_diversity" in kinds and kinds <= {"modular", "coverage", "metric_diversity"}:
        return "submod_plus_metric"
    return "prop_submod"


def _leaf_types(spec):
    if spec["type"] in ("sum", "product"):
        out = set()
        for p in spec.get("parts", spec.get("factors", [])):
            out |= _leaf_types(p)
        return out
    return {spec["type"]}


def cmd_pipeline(cfg):
    f, k = _function(cfg), _k(cfg)
    spec = f.spec
    if spec.get("type") != "product":
        raise ContractError("pipeline needs a product spec {'type': 'product', 'factors': [f, g]}")
    if k % 2:
        raise ContractError(f"the k/2 warm start needs an even budget, got k={k}")
    fam = cfg.get("g_family") or infer_g_family(spec)
    warm = deterministic_greedy(f.factors[0], k // 2)
    initial = warm.set if warm.set and len(warm.set) < k else None
    g = G.factor_product_pipeline(fam, k)
    out = _run_summary(f, k, cfg, _trials(cfg, 500), g, initial=initial)
    out.update(g_family=fam, warm_start=warm.set, baseline=G.factor_baselines()[G.BASELINE_BY_FAMILY[fam]])
    return out


GENERATORS = {
    "coverage": lambda n, rng: zoo.random_coverage(n, rng),
    "metric": lambda n, rng: zoo.random_plane_metric(n, rng),
    "cut_sum": lambda n, rng: {"type": "sum", "parts": [zoo.random_coverage(n, rng), zoo.random_cut(n, rng)]},
    "prop_submod": lambda n, rng: zoo.random_prop_submod(n, rng, monotone=True),
}


def _parse_values(text):
    if isinstance(text, list):
        vals = text
    elif ":" in str(text):
        parts = [float(x) for x in str(text).split(":")]
        lo, hi = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1.0
        if step <= 0:
            raise ContractError("sweep step must be positive")
        vals = list(np.arange(lo, hi + step / 2, step))
    else:
        vals = [float(x) for x in str(text).split(",") if x.strip()]
    if not vals:
        raise ContractError("sweep range is empty")
    return [int(v) if float(v).is_integer() else float(v) for v in vals]


def cmd_sweep(cfg):
    axis = cfg.get("axis")
    if axis not in ("k", "n", "seed", "gamma"):
        raise ContractError("sweep needs --axis k|n|seed|gamma")
    values = _parse_values(cfg.get("values", []))
    trials = _trials(cfg, 1 if axis == "seed" else 200)

    def row(v):
        if axis == "gamma":
            return {axis: v, "mean": None, "stderr": None, "opt": None, "empirical_ratio": None,
                    "guarantee": G.factor_weak_asymptotic(v)}
        if axis == "n":
            gen = GENERATORS[cfg.get("generator", "coverage")]
            f = zoo.build_oracle(gen(int(v), np.random.default_rng([cfg["seed"], int(v)])))
            k = _k(cfg)
        else:
            f = _function(cfg)
            k = int(v) if axis == "k" else _k(cfg)
        g, _ = guarantee_for(f, k)
        opt = brute_force_opt(f, k).value
        if axis == "seed":
            tr = randomized_greedy(f, k, trial_seed(int(v), 0))
            mean, se = tr.final_value, 0.0
        else:
            mc = monte_carlo_expectation(f, k, trials, cfg["seed"], workers=1)
            mean, se = mc.mean, mc.stderr
        return {axis: v, "mean": mean, "stderr": se, "opt": opt,
                "empirical_ratio": mean / opt if opt > 0 else None, "guarantee": g}

    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(row, values))
    else:
        rows = [row(v) for v in values]
    return _Table([axis, *SUMMARY_COLUMNS], rows)


# ---------------------------------------------------------------------------
# Output


class _Raw(str):
    pass


class _Table:
    def __init__(self, columns, rows):
        self.columns, self.rows = columns, rows


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, list):
        return " ".join(_csv_cell(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(result, fmt):
    if isinstance(result, _Raw):
        return str(result)
    if isinstance(result, _Table):
        if fmt == "json":
            return json.dumps(_jsonable(result.rows), indent=2, sort_keys=True) + "\n"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(result.columns)
        for r in result.rows:
            w.writerow([_csv_cell(_jsonable(r[c])) for c in result.columns])
        return buf.getvalue()
    data = _jsonable(result)
    if fmt == "csv":
        flat = {k: v for k, v in sorted(data.items())
                if not isinstance(v, dict) and not (isinstance(v, list) and any(isinstance(x, (dict, list)) for x in v))}
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(flat.keys())
        w.writerow([_csv_cell(v) for v in flat.values()])
        return buf.getvalue()
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _failed(result):
    if isinstance(result, _Table):
        return False
    if isinstance(result, dict):
        return result.get("passed") is False or result.get("pass") is False
    return False


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        result = HANDLERS[args.command](cfg)
    except (zoo.SpecError, ContractError, ValueError) as exc:
        print(f"weaksubmod {args.command}: error: {exc}", file=sys.stderr)
        return 2
    text = render(result, cfg["format"])
    if cfg.get("out"):
        Path(cfg["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    return 1 if _failed(result) else 0


if __name__ == "__main__":
    sys.exit(main())
