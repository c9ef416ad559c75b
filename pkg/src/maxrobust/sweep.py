"""Reproducible robustness sweeps across training methods, sizes, and seeds.

A sweep trains one model per (method, dimension ratio, seed) cell, then
scores it under each evaluation attack norm: final normalized margin,
largest survivable attack budget, and the certified optimum for that
dataset and norm. Records land in a CSV whose bytes depend only on the
config (workers and wall clock never touch it) plus a manifest recording
the resolved config, its hash, and library versions. Runtimes go to the
manifest's non-reproducible section only.

Method tokens:

    gd / signgd / cd        steepest descent w.r.t. l2 / linf / l1
    gd-ls / signgd-ls / cd-ls   same with backtracking line search
    prox-l1, prox-l2, prox-linf, prox-fourier-l1
                            warm-started proximal path down to ``lam``
    adv-<norm>:<factor>     adversarial training, eps = factor * oracle margin
    conv-gd                 deep circular-convolution net, plain GD
    oracle                  certified max-margin reference rows

Fourier-family methods (conv-gd, prox-fourier-l1) run on non-augmented
datasets; everything else trains with a bias column.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__ as _pkg_version
from .attacks import max_robust_eps
from .data import Dataset, generate_gaussian_separable
from .models import margin
from .norms import NormKind
from .optimizers import (
    AdvSpec,
    TrainConfig,
    adversarial_training_linear,
    regularization_path,
    train_conv_gd,
    train_steepest,
)
from .oracle import min_norm_solve

log = logging.getLogger(__name__)

WORKERS_ENV = "MAXROBUST_WORKERS"

PLAIN_METHODS = {"gd": NormKind.L2, "signgd": NormKind.LINF, "cd": NormKind.L1}
PROX_METHODS = {
    "prox-l1": NormKind.L1,
    "prox-l2": NormKind.L2,
    "prox-linf": NormKind.LINF,
    "prox-fourier-l1": NormKind.FOURIER_L1,
}
FOURIER_METHODS = ("prox-fourier-l1", "conv-gd")

SWEEP_COLUMNS = (
    "method",
    "attack_norm",
    "d",
    "n",
    "seed",
    "steps",
    "margin",
    "eps_hat",
    "oracle_margin",
    "margin_ratio",
    "eps_ratio",
    "oracle_converged",
)


def parse_method(token: str):
    """Split a method token into (family, detail). Raises ValueError on junk."""
    if token in PLAIN_METHODS:
        return "plain", PLAIN_METHODS[token]
    if token.endswith("-ls") and token[:-3] in PLAIN_METHODS:
        return "plain-ls", PLAIN_METHODS[token[:-3]]
    if token in PROX_METHODS:
        return "prox", PROX_METHODS[token]
    if token == "conv-gd":
        return "conv", None
    if token == "oracle":
        return "oracle", None
    if token.startswith("adv-"):
        body = token[4:]
        norm_token, _, factor_token = body.partition(":")
        kind = NormKind.parse(norm_token)
        factor = float(factor_token) if factor_token else 1.0
        if factor < 0:
            raise ValueError(f"adversarial budget factor must be >= 0, got {factor}")
        return "adv", (kind, factor)
    raise ValueError(f"unknown method token: {token!r}")


@dataclass(frozen=True)
class SweepSpec:
    """Resolved sweep configuration; the manifest hash covers exactly this."""

    d: int = 100
    ratios: tuple[int, ...] = (1, 2, 4, 8, 16, 32)
    seeds: tuple[int, ...] = (0, 1, 2)
    methods: tuple[str, ...] = ("gd", "signgd", "cd")
    attack_norms: tuple[str, ...] = ("l1", "l2", "linf")
    steps: int = 10000
    step_size: float = 0.5
    signgd_step_size: float = 0.02  # unit linf velocity: keep well under the l2 scale
    cd_step_size: float = 0.1
    ls_max_step: float = 100.0
    adv_step_size: float = 0.1
    lam: float = 1e-6
    conv_depth: int = 2
    loss: str = "exponential"
    augment: bool = False  # origin teachers need no bias; matches the oracle geometry
    oracle_tol: float = 1e-4
    oracle_max_iter: int = 500_000

    def __post_init__(self):
        for token in self.methods:
            parse_method(token)
        for token in self.attack_norms:
            NormKind.parse(token)
        if self.d < 1 or self.steps < 1:
            raise ValueError("d and steps must be positive")
        if any(r < 1 for r in self.ratios):
            raise ValueError("ratios must be positive")

    @classmethod
    def from_dict(cls, raw: dict) -> "SweepSpec":
        import dataclasses

        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown sweep config keys: {sorted(unknown)}")
        coerced = dict(raw)
        for key in ("ratios", "seeds", "methods", "attack_norms"):
            if key in coerced:
                coerced[key] = tuple(coerced[key])
        return cls(**coerced)

    def to_dict(self) -> dict:
        import dataclasses

        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    def step_size_for(self, kind) -> float:
        from .norms import NormKind

        if kind is NormKind.LINF:
            return self.signgd_step_size
        if kind is NormKind.L1:
            return self.cd_step_size
        return self.step_size


@dataclass(frozen=True)
class SweepRecord:
    method: str
    attack_norm: str
    d: int
    n: int
    seed: int
    steps: int
    margin: float
    eps_hat: float
    oracle_margin: float
    margin_ratio: float
    eps_ratio: float
    oracle_converged: bool
    runtime_s: float  # manifest only, never in the CSV

    def csv_values(self) -> tuple:
        return (
            self.method,
            self.attack_norm,
            str(self.d),
            str(self.n),
            str(self.seed),
            str(self.steps),
            repr(float(self.margin)),
            repr(float(self.eps_hat)),
            repr(float(self.oracle_margin)),
            repr(float(self.margin_ratio)),
            repr(float(self.eps_ratio)),
            "true" if self.oracle_converged else "false",
        )


_oracle_cache: dict = {}


def cached_oracle(ds: Dataset, kind: NormKind, tol: float, max_iter: int):
    key = (ds.d, ds.X.shape[0], ds.seed, ds.augmented, kind, tol, max_iter)
    hit = _oracle_cache.get(key)
    if hit is None:
        hit = min_norm_solve(ds, kind, tol=tol, max_iter=max_iter)
        _oracle_cache[key] = hit
    return hit


def method_uses_bias(token: str, spec: "SweepSpec") -> bool:
    # Fourier geometry is defined on the circulant coordinates alone
    return spec.augment and token not in FOURIER_METHODS


def eval_norms_for(token: str, spec: SweepSpec) -> tuple[NormKind, ...]:
    family, detail = parse_method(token)
    if token in FOURIER_METHODS:
        return (NormKind.FOURIER_LINF,)
    if family == "adv":
        return (detail[0],)
    return tuple(NormKind.parse(t) for t in spec.attack_norms)


def _prox_lambdas(final_lam: float) -> tuple[float, ...]:
    decades = max(int(round(np.log10(0.1 / final_lam))), 0)
    return tuple(0.1 * (0.1 ** k) for k in range(decades)) + (final_lam,)


def train_cell_model(token: str, ds: Dataset, spec: SweepSpec):
    """Train one model for a method token; oracle rows return None."""
    family, detail = parse_method(token)
    if family == "plain":
        cfg = TrainConfig(
            steps=spec.steps, step_size=spec.step_size_for(detail), loss=spec.loss,
            norm_kind=detail,
        )
        return train_steepest(ds, cfg).final_model
    if family == "plain-ls":
        cfg = TrainConfig(
            steps=spec.steps, step_size=spec.step_size_for(detail), loss=spec.loss,
            norm_kind=detail, line_search_max_step=spec.ls_max_step,
        )
        return train_steepest(ds, cfg).final_model
    if family == "prox":
        cfg = TrainConfig(steps=spec.steps, step_size=spec.step_size, loss=spec.loss)
        path = regularization_path(ds, detail, _prox_lambdas(spec.lam), cfg)
        return path[-1][1].final_model
    if family == "adv":
        kind, factor = detail
        ref = cached_oracle(ds, kind, spec.oracle_tol, spec.oracle_max_iter)
        cfg = TrainConfig(
            steps=spec.steps, step_size=spec.adv_step_size, loss=spec.loss,
            adv=AdvSpec(eps=factor * ref.max_margin, attack_norm=kind),
        )
        return adversarial_training_linear(ds, cfg.adv.eps, kind, cfg).final_model
    if family == "conv":
        cfg = TrainConfig(steps=spec.steps, step_size=spec.step_size, loss=spec.loss)
        return train_conv_gd(ds, cfg, depth=spec.conv_depth).final_model
    return None  # oracle


def run_cell(token: str, d: int, n: int, seed: int, spec: SweepSpec) -> list[SweepRecord]:
    """All records for one (method, size, seed) cell."""
    started = time.perf_counter()
    ds = generate_gaussian_separable(d, n, seed, augment=method_uses_bias(token, spec))
    model = train_cell_model(token, ds, spec)
    records = []
    for kind in eval_norms_for(token, spec):
        ref = cached_oracle(ds, kind, spec.oracle_tol, spec.oracle_max_iter)
        if model is None:
            m = eps = ref.max_margin
        else:
            try:
                m = margin(model, ds, kind)
            except Exception:
                m = float("nan")
            eps = max_robust_eps(model, ds, kind)
        denom = ref.max_margin if ref.max_margin > 0 else float("nan")
        records.append(
            SweepRecord(
                method=token,
                attack_norm=kind.value,
                d=d,
                n=n,
                seed=seed,
                steps=spec.steps,
                margin=m,
                eps_hat=eps,
                oracle_margin=ref.max_margin,
                margin_ratio=m / denom,
                eps_ratio=eps / denom,
                oracle_converged=ref.converged,
                runtime_s=time.perf_counter() - started,
            )
        )
    return records


def _cell_worker(args):
    token, d, n, seed, spec = args
    return run_cell(token, d, n, seed, spec)


def sweep_cells(spec: SweepSpec):
    cells = []
    for token in spec.methods:
        for ratio in spec.ratios:
            n = max(spec.d // ratio, 1)
            for seed in spec.seeds:
                cells.append((token, spec.d, n, seed))
    return cells


def resolve_workers(requested: int | None) -> int:
    if requested is not None:
        return max(int(requested), 1)
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(int(env), 1)
    return 1


def run_sweep(spec: SweepSpec, out_dir, workers: int | None = None) -> list[SweepRecord]:
    """Run every cell, write records.csv and manifest.json, return the records."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    nworkers = resolve_workers(workers)
    cells = sweep_cells(spec)
    total_start = time.perf_counter()
    jobs = [(token, d, n, seed, spec) for (token, d, n, seed) in cells]
    if nworkers == 1:
        results = [_cell_worker(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            results = list(pool.map(_cell_worker, jobs, chunksize=1))
    records = [rec for batch in results for rec in batch]
    records.sort(key=lambda r: (r.method, r.attack_norm, r.d, r.n, r.seed))
    write_records_csv(out / "records.csv", records)
    write_manifest(
        out / "manifest.json",
        spec,
        records,
        total_runtime_s=time.perf_counter() - total_start,
        workers=nworkers,
    )
    return records


def write_records_csv(path, records) -> None:
    lines = [",".join(SWEEP_COLUMNS)]
    lines.extend(",".join(rec.csv_values()) for rec in records)
    Path(path).write_text("\n".join(lines) + "\n")


def load_records_csv(path) -> list[dict]:
    text = Path(path).read_text().strip().splitlines()
    header = text[0].split(",")
    rows = []
    for line in text[1:]:
        parts = line.split(",")
        row = dict(zip(header, parts))
        for key in ("d", "n", "seed", "steps"):
            row[key] = int(row[key])
        for key in ("margin", "eps_hat", "oracle_margin", "margin_ratio", "eps_ratio"):
            row[key] = float(row[key])
        row["oracle_converged"] = row["oracle_converged"] == "true"
        rows.append(row)
    return rows


def config_hash(spec: SweepSpec) -> str:
    canonical = json.dumps(spec.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def write_manifest(path, spec, records, total_runtime_s, workers) -> None:
    manifest = {
        "config": spec.to_dict(),
        "config_sha256": config_hash(spec),
        "package_version": _pkg_version,
        "numpy_version": np.__version__,
        "python_version": platform.python_version(),
        "record_count": len(records),
        "non_reproducible": {
            "total_runtime_s": total_runtime_s,
            "workers": workers,
            "cell_runtime_s": {
                f"{r.method}/{r.attack_norm}/n={r.n}/seed={r.seed}": r.runtime_s
                for r in records
            },
        },
    }
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def summarize_by_ratio(records, method: str, attack_norm: str):
    """Mean and spread of eps_ratio per d/n ratio for one method and norm."""
    rows = [
        r for r in records
        if (r["method"] if isinstance(r, dict) else r.method) == method
        and (r["attack_norm"] if isinstance(r, dict) else r.attack_norm) == attack_norm
    ]
    by_n: dict = {}
    for r in rows:
        n = r["n"] if isinstance(r, dict) else r.n
        by_n.setdefault(n, []).append(r["eps_ratio"] if isinstance(r, dict) else r.eps_ratio)
    out = []
    for n in sorted(by_n, reverse=True):
        vals = np.asarray(by_n[n])
        d = rows[0]["d"] if isinstance(rows[0], dict) else rows[0].d
        out.append((d / n, float(np.mean(vals)), float(np.std(vals))))
    return out
