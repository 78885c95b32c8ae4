"""Command-line interface: ``sspriv <subcommand> ...``.

Secret specs, mechanism configs, parameter sets and priors are JSON
documents, passed either inline or as a file path. See README for schemas.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bounds, distortion, experiments, mechanisms, privacy
from .model import (
    Dataset,
    GroupPartition,
    LpSpec,
    MechanismConfig,
    ModelError,
    PriorSpec,
    estimate_params,
    load_json_or_path,
    params_from_dict,
    spec_from_dict,
)


def _groups(text: str | None) -> GroupPartition | None:
    """``"0,1;2"`` -> {0,1},{2}."""
    if not text:
        return None
    return GroupPartition([[int(i) for i in part.split(",") if i.strip()] for part in text.split(";")])


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _p(text: str) -> float:
    return math.inf if text.lower() in ("inf", "infinity") else float(text)


def _spec(args):
    if not args.secrets:
        raise ModelError("--secrets is required")
    return spec_from_dict(load_json_or_path(args.secrets))


def _config(args) -> MechanismConfig:
    if not args.config:
        raise ModelError("--config is required")
    return MechanismConfig.from_dict(load_json_or_path(args.config))


def _lp(args, spec):
    if args.p is None:
        return None
    p = _p(args.p)
    if args.eps_p is not None:
        return LpSpec(p, args.eps_p)
    return LpSpec.matching(p, spec.tolerances)


def _read_csv(path, args) -> Dataset:
    return Dataset.from_csv(path, header=not args.no_header, delimiter=args.delimiter)


def _is_json(path: str) -> bool:
    return str(path).lower().endswith(".json") or str(path).lstrip().startswith("{")


def _write(args, text: str) -> None:
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _csv_text(data: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(data.labels)
    for row in data.samples:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True) + "\n"


def cmd_release(args) -> int:
    mech = args.mechanism
    seed = args.seed
    if mech in ("alg1", "alg2", "alg3"):
        spec, cfg = _spec(args), _config(args)
        if args.params:
            source = params_from_dict(load_json_or_path(args.params))
        elif args.input:
            source = estimate_params(_read_csv(args.input, args), args.family).to_params()
        else:
            raise ModelError(f"{mech} needs --params or --input")
        out = mechanisms.release(mech, source, spec, cfg, seed)
        _write(args, _dump(out.to_dict()))
        return 0
    if not args.input:
        raise ModelError(f"{mech} needs --input")
    data = _read_csv(args.input, args)
    if mech == "dataset":
        out = mechanisms.release_dataset(data, _spec(args), _config(args), seed)
    else:
        out = mechanisms.release(mech, data, None, _config(args), seed)
    if args.format == "json":
        doc = out.to_dict()
        doc["labels"] = list(out.dataset.labels)
        doc["samples"] = out.dataset.samples.tolist()
        _write(args, _dump(doc))
    else:
        _write(args, _csv_text(out.dataset))
    return 0


def cmd_privacy(args) -> int:
    spec = _spec(args)
    part = _groups(args.groups)
    lp = _lp(args, spec)
    if args.metric == "lp" and lp is None:
        raise ModelError("--p is required for the lp metric")
    if args.method == "analytic":
        rep = privacy.analytic_privacy_alg1(spec, _config(args), args.metric, part, lp)
    elif args.method == "surrogate":
        if not (args.original and args.released):
            raise ModelError("surrogate privacy needs --original and --released")
        rep = privacy.surrogate_privacy(_read_csv(args.original, args), _read_csv(args.released, args),
                                        spec, args.metric, part, lp)
    else:
        cfg = _config(args)
        prior = (PriorSpec(**load_json_or_path(args.prior)) if args.prior
                 else PriorSpec.bin_aligned(cfg, args.prior_bins))
        if args.guesses:
            rep = privacy.multi_shot_privacy(args.mechanism, cfg, prior, spec, args.guesses,
                                             args.trials, args.seed, args.workers)
        else:
            rep = privacy.monte_carlo_privacy(args.mechanism, cfg, prior, spec, args.metric, part, lp,
                                              args.attacker, args.trials, args.seed, args.workers)
    _write(args, _dump(rep.to_dict()))
    return 0


def _load_side(path, args):
    if _is_json(path):
        return params_from_dict(load_json_or_path(path))
    return _read_csv(path, args)


def cmd_distortion(args) -> int:
    if args.mechanism:
        value = distortion.mechanism_distortion(args.mechanism, _config(args), _spec(args))
        record = {"value": value, "estimator": "closed-form-sup", "mechanism": args.mechanism}
    else:
        if not (args.a and args.b):
            raise ModelError("give --a and --b, or --mechanism with --config/--secrets")
        a, b = _load_side(args.a, args), _load_side(args.b, args)
        if isinstance(a, Dataset) != isinstance(b, Dataset):
            raise ModelError("--a and --b must both be CSVs or both be parameter files")
        if not isinstance(a, Dataset):
            record = {"value": distortion.w2_gaussian(a, b), "estimator": "gaussian-closed-form"}
        else:
            est = args.estimator
            if est == "auto":
                est = "exact" if a.m <= distortion.EXACT_CAP else "sliced"
            if est == "exact":
                value = distortion.w2_empirical_exact(a, b)
            else:
                value = distortion.w2_empirical_sliced(a, b, args.projections, args.seed)
            record = {"value": value, "estimator": est}
            if est == "sliced":
                record["projections"] = args.projections
    _write(args, _dump(record))
    return 0


def _t_grid(args) -> list[float]:
    if args.T:
        return _floats(args.T)
    lo, hi, n = args.grid.split(":")
    return np.linspace(float(lo), float(hi), int(n)).tolist()


def cmd_bounds(args) -> int:
    eps = np.asarray(_floats(args.eps) if args.eps else _spec(args).tolerances)
    d = eps.size
    part = _groups(args.groups) or GroupPartition.singletons(d)
    lp = LpSpec(_p(args.p or "2"), args.eps_p) if args.eps_p else LpSpec.matching(_p(args.p or "2"), eps)
    gamma = args.gamma
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["T", "union", "inter", "group", "lp"])
    for T in _t_grid(args):
        writer.writerow([
            repr(float(T)),
            repr(bounds.lower_bound_union(T, eps, gamma, proof_form=args.proof_form)),
            repr(bounds.lower_bound_inter(T, eps, gamma)),
            repr(bounds.lower_bound_group(T, eps, part, gamma, literal=args.literal_group)),
            repr(bounds.lower_bound_lp(T, lp, d, gamma)),
        ])
    _write(args, buf.getvalue())
    return 0


def cmd_sweep(args) -> int:
    if args.input:
        data = _read_csv(args.input, args)
    else:
        data = experiments.generate_synthetic(m=args.m, t=args.t, seed=args.seed)
    spec = _spec(args) if args.secrets else None
    mechs = [m for m in args.mechanisms.split(",") if m] if args.mechanisms is not None else experiments.MECHANISMS
    grids = {}
    for item in args.grid or []:
        name, _, values = item.partition("=")
        grids[name] = tuple(_floats(values))
    records = experiments.run_sweep(
        data, spec, mechs, grids, _groups(args.groups), seed=args.seed, repeats=args.repeats,
        n_projections=args.projections, workers=args.workers,
    )
    fmt = "jsonl" if args.format in ("jsonl", "json") else "csv"
    experiments.emit(records, args.output or sys.stdout, fmt)
    return 0


def cmd_synth(args) -> int:
    means = _floats(args.means) if args.means else experiments.DEFAULT_MEANS
    data = experiments.generate_synthetic(m=args.m, t=args.t, secret_means=means, seed=args.seed)
    _write(args, _csv_text(data))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--output", "-o")
    common.add_argument("--format", choices=("csv", "json", "jsonl"), default="csv")
    common.add_argument("--no-header", action="store_true", help="input CSVs have no header row")
    common.add_argument("--delimiter", default=",")

    parser = argparse.ArgumentParser(prog="sspriv", description="Summary-statistic privacy toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("release", parents=[common], help="apply a release mechanism")
    p.add_argument("--input")
    p.add_argument("--params", help="parameter JSON (alg1/alg2/alg3)")
    p.add_argument("--family", default="diag-gaussian")
    p.add_argument("--secrets")
    p.add_argument("--mechanism", required=True,
                   choices=mechanisms.QUANTIZATION + mechanisms.BASELINES)
    p.add_argument("--config")
    p.set_defaults(func=cmd_release)

    p = sub.add_parser("privacy", parents=[common], help="privacy of a mechanism or release")
    p.add_argument("--metric", choices=("union", "inter", "group", "lp"), default="union")
    p.add_argument("--method", choices=("analytic", "surrogate", "mc"), default="analytic")
    p.add_argument("--secrets")
    p.add_argument("--config")
    p.add_argument("--groups", help='e.g. "0,1;2"')
    p.add_argument("--p", help="norm order, number or inf")
    p.add_argument("--eps-p", type=float, dest="eps_p")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--attacker", choices=("posterior-bin", "grid"), default="posterior-bin")
    p.add_argument("--mechanism", default="alg1")
    p.add_argument("--prior", help='JSON {"lo": [...], "hi": [...]}; default: bin-aligned')
    p.add_argument("--prior-bins", type=int, default=1, dest="prior_bins")
    p.add_argument("--guesses", type=int, help="multi-shot: number of guesses at a single secret")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--original")
    p.add_argument("--released")
    p.set_defaults(func=cmd_privacy)

    p = sub.add_parser("distortion", parents=[common], help="W2 distortion")
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--estimator", choices=("auto", "exact", "sliced"), default="auto")
    p.add_argument("--projections", type=int, default=64)
    p.add_argument("--mechanism", choices=("alg1", "alg2", "alg3"))
    p.add_argument("--config")
    p.add_argument("--secrets")
    p.set_defaults(func=cmd_distortion)

    p = sub.add_parser("bounds", parents=[common], help="lower-bound table over T")
    p.add_argument("--eps", help="comma-separated tolerances (or use --secrets)")
    p.add_argument("--secrets")
    p.add_argument("--groups")
    p.add_argument("--p")
    p.add_argument("--eps-p", type=float, dest="eps_p")
    p.add_argument("--gamma", type=float)
    p.add_argument("--T", help="comma-separated budgets")
    p.add_argument("--grid", default="0.05:0.95:19", help="lo:hi:n")
    p.add_argument("--proof-form", action="store_true", dest="proof_form")
    p.add_argument("--literal-group", action="store_true", dest="literal_group")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("sweep", parents=[common], help="tradeoff sweep")
    p.add_argument("--input")
    p.add_argument("--m", type=int, default=2000)
    p.add_argument("--t", type=int, default=5)
    p.add_argument("--secrets")
    p.add_argument("--mechanisms", help="comma-separated; default all four")
    p.add_argument("--grid", action="append", help='e.g. "alg1=2,4,6" (repeatable)')
    p.add_argument("--groups")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--projections", type=int, default=64)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", parents=[common], help="synthetic WWT-like data")
    p.add_argument("--m", type=int, default=2000)
    p.add_argument("--t", type=int, default=5)
    p.add_argument("--means", help="comma-separated secret-column means")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ModelError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"sspriv: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
