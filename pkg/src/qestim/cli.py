"""Command-line front-end: load JSON models, run analyses, emit JSON/CSV reports.

Commands: analyze-state, analyze-channel, cycle-bench, twirl, simulate.
Exit codes: 0 success, 1 input error, 2 verdict failure under --require
flags, 3 internal numerical failure.  All outputs are deterministic given
the input file, flags and seed, and are written atomically.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__, learnability, pauli, sensing, states
from .errors import QestimError
from .estimability import check_lemma1, check_theorem1, qfim
from .states import evaluate, state_model_from_dict

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_VERDICT = 2
EXIT_NUMERICAL = 3


class VerdictFailure(Exception):
    """Raised when a --require flag is not met (exit code 2)."""


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _write_json(payload: dict, out: str | None) -> None:
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
    _write_text(text, out)


def _write_text(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qestim-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_json(path: str) -> tuple[dict, str]:
    with open(path, "rb") as fh:
        raw = fh.read()
    spec = json.loads(raw.decode("utf-8"))
    if not isinstance(spec, dict):
        raise QestimError("top-level JSON must be an object")
    return spec, hashlib.sha256(raw).hexdigest()


def _provenance(input_hash: str, **extras) -> dict:
    threads = os.environ.get("QESTIM_THREADS", "0")
    prov = {"tool": "qestim", "version": __version__, "input_sha256": input_hash,
            "threads": threads}
    prov.update(extras)
    return prov


def _theta_overrides(pairs, names, base):
    theta = np.asarray(base, dtype=float).copy()
    for item in pairs or []:
        if "=" not in item:
            raise QestimError(f"--theta0 entries must be name=value, got {item!r}")
        name, value = item.split("=", 1)
        if name not in names:
            raise QestimError(f"unknown parameter {name!r}; expected one of {list(names)}")
        theta[list(names).index(name)] = float(value)
    return theta


def _reject_unknown(spec: dict, allowed: set, what: str) -> None:
    unknown = set(spec) - allowed
    if unknown:
        raise QestimError(f"unknown fields in {what}: {sorted(unknown)}")


# ---------------------------------------------------------------------------
# analyze-state
# ---------------------------------------------------------------------------

def cmd_analyze_state(args) -> int:
    spec, digest = _load_json(args.model)
    model, theta0 = state_model_from_dict(spec)
    theta0 = _theta_overrides(args.theta0, model.param_names, theta0)
    em = evaluate(model, theta0)
    q = qfim(em, args.rank_tol)
    targets = [args.param] if args.param else list(model.param_names)
    verdicts = []
    for name in targets:
        k = model.param_names.index(name)
        v_span = check_theorem1(em, k, args.tol)
        e = np.zeros(model.num_params)
        e[k] = 1.0
        v_supp = check_lemma1(q, e, args.tol, name)
        entry = {
            "parameter": name,
            "estimable": v_span.estimable,
            "bound": v_supp.bound,
            "support_residual": v_supp.residual,
            "span_residual": v_span.residual,
            "tolerance": args.tol,
            "routes_agree": v_span.estimable == v_supp.estimable,
        }
        if v_span.dependency is not None:
            others = [n for n in model.param_names if n != name]
            entry["dependency"] = {n: c for n, c in zip(others, v_span.dependency.coefficients)
                                   if abs(c) > 1e-10}
        verdicts.append(entry)
    report = {
        "provenance": _provenance(digest, tolerance=args.tol),
        "model": {"kind": model.kind, "parameters": list(model.param_names),
                  "theta0": dict(zip(model.param_names, theta0))},
        "qfim": {"matrix": q.matrix, "eigenvalues": q.eigenvalues, "rank": q.rank,
                 "rank_tol": q.rank_tol_used},
        "verdicts": verdicts,
    }
    _write_json(report, args.out)
    if args.require_estimable and not all(v["estimable"] for v in verdicts):
        raise VerdictFailure("a requested parameter admits no unbiased estimator")
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze-channel
# ---------------------------------------------------------------------------

_CHANNEL_KINDS = {
    "pauli": lambda spec: learnability.pauli_eigenvalue_family(int(spec.get("n", 1))),
    "depolarizing": lambda spec: learnability.depolarizing_family(int(spec.get("n", 1))),
    "rz_noise": lambda spec: learnability.rz_noise_family(),
    "shared_rate": lambda spec: learnability.shared_rate_family(),
}


def cmd_analyze_channel(args) -> int:
    spec, digest = _load_json(args.channel)
    _reject_unknown(spec, {"kind", "n", "theta0"}, "channel config")
    kind = spec.get("kind")
    if kind not in _CHANNEL_KINDS:
        raise QestimError(f"channel kind must be one of {sorted(_CHANNEL_KINDS)}")
    ch = _CHANNEL_KINDS[kind](spec)
    theta0 = states._theta_from_mapping(ch.param_names, spec.get("theta0", {}))
    theta0 = _theta_overrides(args.theta0, ch.param_names, theta0)
    targets = [args.param] if args.param else list(ch.param_names)
    verdicts = []
    for name in targets:
        v = learnability.check_corollary1(ch, theta0, name, args.tol)
        entry = {"parameter": name, "learnable": v.estimable, "residual": v.residual,
                 "tolerance": args.tol}
        if v.dependency is not None:
            others = [n for n in ch.param_names if n != name]
            entry["dependency"] = {n: c for n, c in zip(others, v.dependency.coefficients)
                                   if abs(c) > 1e-10}
        verdicts.append(entry)
    report = {
        "provenance": _provenance(digest, tolerance=args.tol),
        "channel": {"kind": kind, "parameters": list(ch.param_names),
                    "theta0": dict(zip(ch.param_names, theta0))},
        "verdicts": verdicts,
    }
    _write_json(report, args.out)
    if args.require_estimable and not all(v["learnable"] for v in verdicts):
        raise VerdictFailure("a requested channel parameter is not learnable")
    return EXIT_OK


# ---------------------------------------------------------------------------
# cycle-bench
# ---------------------------------------------------------------------------

def _parse_depths(text: str) -> tuple[int, ...]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(d) for d in text.split(","))


def _cycle_model_from_dict(spec: dict, depths_override) -> learnability.CycleModel:
    _reject_unknown(spec, {"gate", "parameters", "depths", "split_phase"}, "cycle config")
    gate = spec.get("gate")
    params = dict(spec.get("parameters", {}))
    depths = depths_override or tuple(int(d) for d in spec.get("depths",
                                                               learnability.DEFAULT_DEPTHS))
    if gate == "rz":
        allowed = {"phi", "lam1", "lam2", "alpha", "theta", "spam_prep", "spam_meas"}
        _reject_unknown(params, allowed, "rz parameters")
        return learnability.rz_cycle_model(depths=depths,
                                           split_phase=bool(spec.get("split_phase", False)),
                                           **params)
    if gate == "cnot":
        allowed = {"eigenvalues", "spam_prep", "spam_meas"}
        _reject_unknown(params, allowed, "cnot parameters")
        if "eigenvalues" not in params:
            raise QestimError("cnot cycle config requires 'eigenvalues'")
        return learnability.cnot_cycle_model(params["eigenvalues"],
                                             params.get("spam_prep"),
                                             params.get("spam_meas"), depths=depths)
    raise QestimError("cycle config 'gate' must be 'rz' or 'cnot'")


def cmd_cycle_bench(args) -> int:
    spec, digest = _load_json(args.cycle)
    depths = _parse_depths(args.depths) if args.depths else None
    model = _cycle_model_from_dict(spec, depths)
    report = learnability.learnability_report(model, tol=args.tol)
    payload = {
        "provenance": _provenance(digest, tolerance=args.tol,
                                  gram_rank_tol=report.gram_rank_tol),
        "gate": spec.get("gate"),
        "depths": list(report.depths_used),
        "parameters": list(report.param_names),
        "verdicts": {name: {"learnable": learnable, "residual": residual}
                     for name, (learnable, residual) in report.verdicts.items()},
        "relations": [{"pivot": r.pivot, "coefficients": r.coefficients,
                       "rendering": r.rendering} for r in report.relations],
        "raw_scaled_parameters": list(report.raw_scaled),
    }
    _write_json(payload, args.out)
    if args.require_learnable:
        wanted = args.require_learnable.split(",")
        missing = [w for w in wanted if not report.verdicts.get(w, (False, 0))[0]]
        if missing:
            raise VerdictFailure(f"parameters not learnable: {missing}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# twirl
# ---------------------------------------------------------------------------

def cmd_twirl(args) -> int:
    spec, digest = _load_json(args.ptm)
    # 'provenance' is tolerated so twirl outputs re-ingest as inputs
    _reject_unknown(spec, {"n", "ptm", "provenance"}, "ptm config")
    a = np.asarray(spec["ptm"], dtype=float)
    n = int(spec.get("n", pauli.num_qubits(a.shape[0])))
    if a.shape != (4**n, 4**n):
        raise QestimError(f"ptm must be a {4**n}x{4**n} row-major array for n={n}")
    twirled = pauli.symmetric_clifford_twirl(a)
    payload = {"provenance": _provenance(digest), "n": n, "ptm": twirled}
    _write_json(payload, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _scenario_from_dict(spec: dict) -> sensing.Scenario:
    allowed = {"kind", "n", "phi", "weights", "lambdas", "lam1", "alpha", "parameter"}
    _reject_unknown(spec, allowed, "scenario config")
    kwargs = {k: v for k, v in spec.items() if k != "kind"}
    if "weights" in kwargs:
        kwargs["weights"] = np.asarray(kwargs["weights"], dtype=float)
    if "lambdas" in kwargs:
        kwargs["lambdas"] = np.asarray(kwargs["lambdas"], dtype=float)
    return sensing.build_scenario(spec["kind"], **kwargs)


def cmd_simulate(args) -> int:
    spec, digest = _load_json(args.scenario)
    sc = _scenario_from_dict(spec)
    rec, report = sensing.run_scenario(sc, args.shots, args.seed)
    payload = {
        "provenance": _provenance(digest, seed=args.seed, shots=args.shots),
        "scenario": {"kind": sc.kind,
                     "true_theta": dict(zip(sc.model.param_names, sc.true_theta)),
                     "parameter": sc.measurement.parameter},
        "report": {
            "mean_estimate": report.mean_estimate,
            "mean_stderr": report.mean_stderr,
            "per_shot_variance": report.per_shot_variance,
            "variance_stderr": report.variance_stderr,
            "qcrb_bound": report.qcrb_bound,
            "z_score_bias": report.z_score_bias,
        },
    }
    _write_json(payload, args.out)
    if args.histogram:
        lines = ["outcome,count,probability,estimator_value"]
        probs = sc.born_probabilities()
        for i, c in enumerate(rec.outcome_counts):
            lines.append(f"{i},{int(c)},{float(probs[i])!r},"
                         f"{float(sc.measurement.estimator_values[i])!r}")
        _write_text("\n".join(lines) + "\n", args.histogram)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qestim",
                                     description="Unbiased-estimability analysis toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, require_flag=True):
        p.add_argument("--param", help="restrict the verdict to one parameter")
        p.add_argument("--theta0", nargs="*", metavar="NAME=VALUE",
                       help="fiducial-point overrides")
        p.add_argument("--tol", type=float, default=1e-7, help="span/support tolerance")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        if require_flag:
            p.add_argument("--require-estimable", action="store_true",
                           help="exit 2 if any requested parameter is not estimable")

    p = sub.add_parser("analyze-state", help="QFIM, estimability verdicts and bounds")
    p.add_argument("model", help="model JSON file")
    common(p)
    p.add_argument("--rank-tol", type=float, default=None, help="QFIM rank tolerance")
    p.set_defaults(func=cmd_analyze_state)

    p = sub.add_parser("analyze-channel", help="channel-parameter learnability verdicts")
    p.add_argument("channel", help="channel JSON file")
    common(p)
    p.set_defaults(func=cmd_analyze_channel)

    p = sub.add_parser("cycle-bench", help="cycle-benchmarking learnability report")
    p.add_argument("cycle", help="cycle-model JSON file")
    p.add_argument("--depths", default=None, help="e.g. 0..8 or 0,1,2,4,8")
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--out", default=None)
    p.add_argument("--require-learnable", default=None, metavar="NAMES",
                   help="comma-separated parameters that must be learnable (exit 2 otherwise)")
    p.set_defaults(func=cmd_cycle_bench)

    p = sub.add_parser("twirl", help="symmetric Clifford twirl of a PTM")
    p.add_argument("ptm", help="PTM JSON file")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_twirl)

    p = sub.add_parser("simulate", help="Monte-Carlo run of a sensing scenario")
    p.add_argument("scenario", help="scenario JSON file")
    p.add_argument("--shots", type=int, default=100000)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--out", default=None)
    p.add_argument("--histogram", default=None, help="also write the outcome histogram CSV")
    p.set_defaults(func=cmd_simulate)
    return parser


def _error_payload(exc: Exception, **extra) -> str:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    payload.update(extra)
    return json.dumps(payload, sort_keys=True)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VerdictFailure as exc:
        print(_error_payload(exc), file=sys.stderr)
        return EXIT_VERDICT
    except json.JSONDecodeError as exc:
        print(_error_payload(exc, line=exc.lineno, column=exc.colno), file=sys.stderr)
        return EXIT_INPUT
    except (QestimError, FileNotFoundError, KeyError, ValueError) as exc:
        print(_error_payload(exc), file=sys.stderr)
        return EXIT_INPUT
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(_error_payload(exc), file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
