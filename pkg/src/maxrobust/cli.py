"""Command-line front end.

Subcommands: gen-data, train, margin, attack, oracle, sweep, emit-figure.
Exit codes: 0 success, 2 configuration or input errors, 3 runtime
failures (divergence, I/O), 4 completed but an oracle solve missed its
tolerance (results carry an unconverged certificate).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .attacks import AttackConfig, attack_report, max_robust_eps, robust_error, write_attack_report
from .data import (
    DatasetFormatError,
    generate_gaussian_separable,
    load_dataset,
    save_dataset,
)
from .fourier import band_mask, hermitian_mask
from .models import ModelFormatError, load_model, margin, save_model
from .norms import NormKind, dual
from .optimizers import (
    AdvSpec,
    DivergenceError,
    TrainConfig,
    adversarial_training_linear,
    regularization_path,
    train_conv_gd,
    train_proximal,
    train_steepest,
)
from .oracle import OracleError, min_norm_solve
from .sweep import (
    SweepSpec,
    load_records_csv,
    parse_method,
    run_sweep,
    summarize_by_ratio,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_UNCONVERGED = 4

RATIO_FIGURES = {
    "linear-l2": "l2",
    "linear-l1": "l1",
    "linear-linf": "linf",
    "conv-fourier": "fourier-linf",
}
FIGURE_IDS = tuple(RATIO_FIGURES) + ("tradeoff-reg", "tradeoff-adv")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maxrobust", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="generate a separable Gaussian dataset")
    g.add_argument("--d", type=int, required=True, help="signal dimension")
    g.add_argument("--n", type=int, required=True, help="sample count")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--no-augment", action="store_true", help="omit the bias column")
    g.add_argument("--out", required=True, help="output .npz path")

    t = sub.add_parser("train", help="train a model on a saved dataset")
    t.add_argument("--data", required=True)
    t.add_argument("--method", required=True,
                   help="gd|signgd|cd[-ls]|prox-<norm>|adv-<norm>[:factor]|conv-gd")
    t.add_argument("--steps", type=int, default=10000)
    t.add_argument("--step-size", type=float, default=None)
    t.add_argument("--loss", default="exponential", choices=("exponential", "logistic"))
    t.add_argument("--lam", type=float, default=1e-6, help="prox methods: penalty weight")
    t.add_argument("--eps", type=float, default=None,
                   help="adv methods: explicit budget (overrides oracle factor)")
    t.add_argument("--ls-max-step", type=float, default=None,
                   help="enable backtracking line search from this max step")
    t.add_argument("--depth", type=int, default=2, help="conv-gd: layer count")
    t.add_argument("--record-every", type=int, default=100)
    t.add_argument("--out", required=True, help="model .npz path")
    t.add_argument("--trace", default=None, help="write the training trace here")
    t.add_argument("--trace-format", default=None, choices=("jsonl", "csv"),
                   help="default jsonl, or inferred from the --trace extension")

    m = sub.add_parser("margin", help="normalized margin of a saved model")
    m.add_argument("--model", required=True)
    m.add_argument("--data", required=True)
    m.add_argument("--attack-norm", "--norm", required=True)
    m.add_argument("--eps-hat", action="store_true",
                   help="also bisect the largest survivable budget")

    a = sub.add_parser("attack", help="evaluate attacks at a fixed budget")
    a.add_argument("--model", required=True)
    a.add_argument("--data", required=True)
    a.add_argument("--attack-norm", "--norm", required=True)
    a.add_argument("--eps", type=float, required=True)
    a.add_argument("--method", default="closed-form",
                   choices=("closed-form", "pgd", "fourier-iterative"))
    a.add_argument("--steps", type=int, default=20)
    a.add_argument("--band", "--mask", default=None,
                   help="fourier-linf only: low:K, high:K, or comma-separated bins")
    a.add_argument("--report", default=None, help="write a per-point CSV here")

    o = sub.add_parser("oracle", help="certified max-margin solve")
    o.add_argument("--data", required=True)
    o.add_argument("--attack-norm", "--norm", required=True)
    o.add_argument("--tol", type=float, default=1e-8)
    o.add_argument("--max-iter", type=int, default=1_000_000)
    o.add_argument("--out", default=None, help="save the solution as a model .npz")

    s = sub.add_parser("sweep", help="run a full sweep from a JSON config")
    s.add_argument("--config", default=None, help="JSON file of SweepSpec fields")
    s.add_argument("--d", type=int, default=None, help="override the config dimension")
    s.add_argument("--ratios", default=None, help="comma-separated d/n ratios")
    s.add_argument("--seeds", default=None, help="comma-separated seeds")
    s.add_argument("--methods", default=None, help="comma-separated method tokens")
    s.add_argument("--attack-norms", default=None, help="comma-separated norm tokens")
    s.add_argument("--steps", type=int, default=None, help="override training steps")
    s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config field (VALUE parsed as JSON when possible)")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--workers", type=int, default=None)

    f = sub.add_parser("emit-figure", help="tabulate data behind a figure")
    f.add_argument("figure", choices=FIGURE_IDS)
    f.add_argument("--from", dest="records", default=None,
                   help="sweep records.csv (ratio figures)")
    f.add_argument("--out", default=None, help="write CSV here instead of stdout only")
    f.add_argument("--d", type=int, default=100)
    f.add_argument("--n", type=int, default=25)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--steps", type=int, default=10000)
    f.add_argument("--reg-kind", default="l1", help="tradeoff-reg: penalty norm")
    f.add_argument("--attack-norm", default="linf", help="tradeoff-adv: attack norm")
    return p


def _parse_band(token: str, d: int) -> np.ndarray:
    if ":" in token:
        side, _, count = token.partition(":")
        return band_mask(d, side, int(count))
    indices = [int(x) for x in token.split(",") if x.strip()]
    return hermitian_mask(d, indices)


def _train_config(args, norm_kind=None, reg=None, adv=None) -> TrainConfig:
    kwargs = dict(
        steps=args.steps,
        loss=args.loss,
        norm_kind=norm_kind,
        reg=reg,
        adv=adv,
        record_every=args.record_every,
    )
    if args.step_size is not None:
        kwargs["step_size"] = args.step_size
    if args.ls_max_step is not None:
        kwargs["line_search_max_step"] = args.ls_max_step
    return TrainConfig(**kwargs)


def _run_train(args) -> int:
    ds = load_dataset(args.data)
    family, detail = parse_method(args.method)
    if family in ("plain", "plain-ls"):
        if family == "plain-ls" and args.ls_max_step is None:
            args.ls_max_step = 100.0
        cfg = _train_config(args, norm_kind=detail)
        trace = train_steepest(ds, cfg)
    elif family == "prox":
        cfg = _train_config(args)
        trace = train_proximal(ds, detail, args.lam, cfg)
    elif family == "adv":
        kind, factor = detail
        eps = args.eps
        if eps is None:
            eps = factor * min_norm_solve(ds, kind, tol=1e-5, max_iter=500_000).max_margin
        if args.step_size is None:
            args.step_size = 0.1
        cfg = _train_config(args, adv=AdvSpec(eps=eps, attack_norm=kind))
        trace = adversarial_training_linear(ds, eps, kind, cfg)
    elif family == "conv":
        cfg = _train_config(args)
        trace = train_conv_gd(ds, cfg, depth=args.depth)
    else:
        raise ValueError("the oracle token is not a training method; use the oracle command")
    save_model(trace.final_model, args.out)
    if args.trace:
        fmt = args.trace_format or ("csv" if args.trace.endswith(".csv") else "jsonl")
        if fmt == "csv":
            trace.to_csv(args.trace)
        else:
            trace.to_jsonl(args.trace)
    final = {k: trace.final_margin(k) for k in trace.margins}
    print(f"trained {args.method} for {trace.steps[-1]} steps")
    for kind_token, value in final.items():
        print(f"  margin[{kind_token.value}] = {value:.6g}")
    return EXIT_OK


def _run_attack(args) -> int:
    model = load_model(args.model)
    ds = load_dataset(args.data)
    kind = NormKind.parse(args.attack_norm)
    mask = _parse_band(args.band, ds.d) if args.band else None
    cfg = AttackConfig(
        norm_kind=kind, eps=args.eps, steps=args.steps,
        band_mask=mask, method=args.method,
    )
    err = robust_error(model, ds, cfg)
    print(f"robust error at eps={args.eps:g} under {kind.value}: {err:.6g}")
    if args.report:
        write_attack_report(args.report, attack_report(model, ds, cfg))
        print(f"wrote per-point report to {args.report}")
    return EXIT_OK


def _run_oracle(args) -> int:
    ds = load_dataset(args.data)
    kind = NormKind.parse(args.attack_norm)
    sol = min_norm_solve(ds, kind, tol=args.tol, max_iter=args.max_iter)
    print(f"attack norm        : {kind.value}")
    print(f"objective norm     : {dual(kind).value}")
    print(f"max margin         : {sol.max_margin:.12g}")
    print(f"objective value    : {sol.objective:.12g}")
    print(f"kkt residual       : {sol.kkt_residual:.3e}")
    print(f"iterations         : {sol.iterations}")
    print(f"converged          : {sol.converged}")
    if args.out:
        save_model(sol.model(), args.out)
    return EXIT_OK if sol.converged else EXIT_UNCONVERGED


def _parse_set(entries) -> dict:
    out = {}
    for entry in entries:
        key, sep, value = entry.partition("=")
        if not sep:
            raise ValueError(f"--set needs KEY=VALUE, got {entry!r}")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def _run_sweep(args) -> int:
    raw = {}
    if args.config:
        raw = json.loads(Path(args.config).read_text())
        if not isinstance(raw, dict):
            raise ValueError("sweep config must be a JSON object")
    if args.d is not None:
        raw["d"] = args.d
    if args.steps is not None:
        raw["steps"] = args.steps
    for field_name in ("ratios", "seeds"):
        value = getattr(args, field_name)
        if value is not None:
            raw[field_name] = [int(x) for x in value.split(",") if x.strip()]
    for field_name in ("methods", "attack_norms"):
        value = getattr(args, field_name)
        if value is not None:
            raw[field_name] = [x.strip() for x in value.split(",") if x.strip()]
    raw.update(_parse_set(args.set))
    spec = SweepSpec.from_dict(raw)
    records = run_sweep(spec, args.out, workers=args.workers)
    print(f"wrote {len(records)} records to {Path(args.out) / 'records.csv'}")
    if any(not r.oracle_converged for r in records):
        print("warning: some oracle solves missed tolerance", file=sys.stderr)
        return EXIT_UNCONVERGED
    return EXIT_OK


def _emit_ratio_figure(args) -> tuple[list[str], list[list[str]]]:
    if not args.records:
        raise ValueError(f"figure {args.figure} needs --from <records.csv>")
    records = load_records_csv(args.records)
    norm_token = RATIO_FIGURES[args.figure]
    methods = sorted({r["method"] for r in records if r["attack_norm"] == norm_token})
    if not methods:
        raise ValueError(f"no records under attack norm {norm_token} in {args.records}")
    per_method = {m: summarize_by_ratio(records, m, norm_token) for m in methods}
    ratios = sorted({ratio for rows in per_method.values() for ratio, _, _ in rows})
    header = ["ratio"]
    for m in methods:
        header.extend([f"{m}_mean", f"{m}_std"])
    body = []
    for ratio in ratios:
        row = [repr(float(ratio))]
        for m in methods:
            hit = next((x for x in per_method[m] if x[0] == ratio), None)
            row.extend(["" if hit is None else repr(hit[1]),
                        "" if hit is None else repr(hit[2])])
        body.append(row)
    return header, body


def _emit_tradeoff_reg(args) -> tuple[list[str], list[list[str]]]:
    from .norms import dual as dual_of

    reg_kind = NormKind.parse(args.reg_kind)
    attack_kind = dual_of(reg_kind)
    augment = reg_kind is not NormKind.FOURIER_L1
    ds = generate_gaussian_separable(args.d, args.n, args.seed, augment=augment)
    lambdas = tuple(10.0 ** (-k) for k in range(1, 7))
    cfg = TrainConfig(steps=args.steps)
    path = regularization_path(ds, reg_kind, lambdas, cfg)
    oracle_margin = min_norm_solve(ds, attack_kind, tol=1e-5, max_iter=500_000).max_margin
    header = ["lam", "margin", "margin_over_oracle"]
    body = []
    for lam, trace in path:
        m = trace.final_margin(attack_kind)
        body.append([repr(float(lam)), repr(float(m)), repr(float(m / oracle_margin))])
    return header, body


def _emit_tradeoff_adv(args) -> tuple[list[str], list[list[str]]]:
    kind = NormKind.parse(args.attack_norm)
    ds = generate_gaussian_separable(args.d, args.n, args.seed, augment=True)
    star = min_norm_solve(ds, kind, tol=1e-5, max_iter=500_000).max_margin
    factors = (0.25, 0.5, 1.0, 1.5, 2.0)
    header = ["factor", "train_eps", "eps_hat", "eps_hat_over_oracle"]
    body = []
    for factor in factors:
        eps = factor * star
        cfg = TrainConfig(steps=args.steps, step_size=0.1,
                          adv=AdvSpec(eps=eps, attack_norm=kind))
        trace = adversarial_training_linear(ds, eps, kind, cfg)
        eps_hat = max_robust_eps(trace.final_model, ds, kind)
        body.append([repr(float(factor)), repr(float(eps)),
                     repr(float(eps_hat)), repr(float(eps_hat / star))])
    return header, body


def _run_emit_figure(args) -> int:
    if args.figure in RATIO_FIGURES:
        header, body = _emit_ratio_figure(args)
    elif args.figure == "tradeoff-reg":
        header, body = _emit_tradeoff_reg(args)
    else:
        header, body = _emit_tradeoff_adv(args)
    lines = [",".join(header)] + [",".join(row) for row in body]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.figure} data to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _dispatch(args) -> int:
    if args.command == "gen-data":
        ds = generate_gaussian_separable(args.d, args.n, args.seed,
                                         augment=not args.no_augment)
        save_dataset(ds, args.out)
        print(f"wrote dataset d={ds.d} n={ds.X.shape[0]} seed={ds.seed} "
              f"augmented={ds.augmented} to {args.out}")
        return EXIT_OK
    if args.command == "train":
        return _run_train(args)
    if args.command == "margin":
        model = load_model(args.model)
        ds = load_dataset(args.data)
        kind = NormKind.parse(args.attack_norm)
        value = margin(model, ds, kind)
        print(f"margin under {kind.value} attack: {value:.12g}")
        if args.eps_hat:
            eps_hat = max_robust_eps(model, ds, kind)
            print(f"largest survivable eps: {eps_hat:.12g}")
        return EXIT_OK
    if args.command == "attack":
        return _run_attack(args)
    if args.command == "oracle":
        return _run_oracle(args)
    if args.command == "sweep":
        return _run_sweep(args)
    if args.command == "emit-figure":
        return _run_emit_figure(args)
    raise ValueError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except (ValueError, KeyError, json.JSONDecodeError, DatasetFormatError,
            ModelFormatError, OracleError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (RuntimeError, OSError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
