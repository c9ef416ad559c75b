"""Training loops whose geometry picks the robustness they converge to.

Steepest descent with respect to a norm drives the iterate direction toward
the maximum-margin separator of that norm, which is the maximally robust
classifier against the dual-norm attack. Gradients on separable data decay
exponentially, so descent directions are computed in the log domain: the
unit gradient direction is exact while the magnitude is tracked as a log.

Three one-shot training modes share the machinery: plain steepest descent
(l2 = gradient descent, linf = sign descent, l1 = greedy coordinate
descent), proximal descent on an explicitly regularized risk, and
closed-form adversarial training for linear models. A fourth loop trains
2-layer (or deeper) linear convolutional nets by plain gradient descent.
"""

from __future__ import annotations

import csv
import json
import logging
import time
import warnings
from dataclasses import dataclass, field, replace
from functools import reduce

import numpy as np

from . import fourier, losses
from .data import Dataset
from .models import (
    ConvLinearNet,
    LinearModel,
    Model,
    UndefinedMarginError,
    attackable_weight,
    effective_weight,
    margin,
)
from .norms import NormKind, dual, dual_witness, norm, project_l1_ball

log = logging.getLogger(__name__)

ARMIJO_C = 1e-4
MIN_STEP = 1e-12
DIVERGENCE_FACTOR = 100.0

REG_KINDS = (NormKind.L1, NormKind.L2, NormKind.LINF, NormKind.FOURIER_L1)
STEEPEST_KINDS = (NormKind.L1, NormKind.L2, NormKind.LINF)


class DivergenceError(RuntimeError):
    """Raised when the training loss runs away from its best value.

    Carries the partial trace recorded before the abort in ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class RegSpec:
    """Explicit regularizer: coeff * ||w||_kind added to the risk."""

    kind: NormKind
    coeff: float

    def __post_init__(self):
        if self.kind not in REG_KINDS:
            raise ValueError(
                f"regularizer kind must be one of {[k.value for k in REG_KINDS]}"
            )
        if self.coeff < 0:
            raise ValueError("regularization coefficient must be nonnegative")


@dataclass(frozen=True)
class AdvSpec:
    """Adversarial training budget: eps ball in the given attack norm."""

    eps: float
    attack_norm: NormKind

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("adversarial budget must be nonnegative")


@dataclass(frozen=True)
class TrainConfig:
    """Knobs shared by all training loops.

    Exactly one mode must be active: plain steepest descent (norm_kind
    set), proximal (reg set), or adversarial (adv set).
    ``line_search_max_step`` switches the step size from the constant
    ``step_size`` to Armijo backtracking started at that value.
    ``init_scale`` only affects conv layer initialization.
    """

    steps: int = 10000
    step_size: float = 0.5
    loss: str = "exponential"
    norm_kind: NormKind | None = None
    reg: RegSpec | None = None
    adv: AdvSpec | None = None
    line_search_max_step: float | None = None
    record_every: int = 100
    seed: int = 0
    init_scale: float = 0.1

    def __post_init__(self):
        losses.check_loss(self.loss)
        if self.steps < 1:
            raise ValueError("steps must be positive")
        if self.step_size <= 0:
            raise ValueError("step size must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be positive")
        if self.line_search_max_step is not None and self.line_search_max_step <= 0:
            raise ValueError("line-search max step must be positive")
        if self.init_scale <= 0:
            raise ValueError("init scale must be positive")

    @property
    def mode(self) -> str:
        active = [
            name
            for name, flag in (
                ("plain", self.norm_kind is not None),
                ("prox", self.reg is not None),
                ("adversarial", self.adv is not None),
            )
            if flag
        ]
        if len(active) != 1:
            raise ValueError(
                f"exactly one training mode must be active, got {active or 'none'}"
            )
        return active[0]


TRACE_COLUMNS = (
    ["step", "log_risk"]
    + [f"margin_{k.value.replace('-', '_')}" for k in NormKind]
    + [f"wnorm_{k.value.replace('-', '_')}" for k in NormKind]
)


@dataclass
class TrainTrace:
    """Sampled training history plus the final model.

    Margins and weight norms are measured on the attackable weight
    coordinates (the bias column of augmented data is excluded). Margins
    at an all-zero iterate are recorded as NaN.
    """

    steps: list = field(default_factory=list)
    log_risk: list = field(default_factory=list)
    margins: dict = field(default_factory=lambda: {k: [] for k in NormKind})
    weight_norms: dict = field(default_factory=lambda: {k: [] for k in NormKind})
    wall_clock: float = 0.0
    final_model: Model | None = None

    def record(self, ds: Dataset, step: int, log_risk: float, model: Model) -> None:
        self.steps.append(int(step))
        self.log_risk.append(float(log_risk))
        w_attack = attackable_weight(model, ds)
        for kind in NormKind:
            try:
                m = margin(model, ds, kind)
            except UndefinedMarginError:
                m = float("nan")
            self.margins[kind].append(m)
            self.weight_norms[kind].append(
                norm(w_attack, kind) if np.any(w_attack) else 0.0
            )

    def rows(self):
        for i, step in enumerate(self.steps):
            row = {"step": step, "log_risk": self.log_risk[i]}
            for kind in NormKind:
                key = kind.value.replace("-", "_")
                row[f"margin_{key}"] = self.margins[kind][i]
                row[f"wnorm_{key}"] = self.weight_norms[kind][i]
            yield row

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=TRACE_COLUMNS)
            writer.writeheader()
            for row in self.rows():
                writer.writerow(
                    {k: repr(v) if isinstance(v, float) else v for k, v in row.items()}
                )

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for row in self.rows():
                fh.write(json.dumps(row) + "\n")

    def final_margin(self, attack_norm: NormKind) -> float:
        return self.margins[attack_norm][-1]


def stabilized_gradient(ds: Dataset, w, loss: str = "exponential"):
    """Unit risk-gradient direction and the log of its l2 magnitude.

    The per-point weights -zeta'(m_i) underflow once margins grow, so they
    are combined through a log-sum-exp softmax: the returned direction
    g/||g||_2 is exact in floating point while log||g||_2 tracks the true
    magnitude. Returns (zeros, -inf) at an exactly balanced point.
    """
    w = np.asarray(w, dtype=np.float64)
    m = ds.y * (ds.X @ w)
    lw = losses.log_loss_weights(m, loss)
    shift = np.max(lw)
    p = np.exp(lw - shift)
    G = -(ds.X.T @ (ds.y * p))
    scale = np.linalg.norm(G)
    if scale == 0.0:
        return np.zeros_like(w), float("-inf")
    log_norm = shift - np.log(ds.n) + np.log(scale)
    return G / scale, float(log_norm)


def steepest_direction(g, norm_kind: NormKind) -> np.ndarray:
    """The steepest-descent update direction for gradient g under a norm.

    Closed forms:
      l2    -g                        (gradient descent)
      linf  -||g||_1 * sign(g)        (sign descent)
      l1    -g_i * e_i, i = argmax |g_i|, ties to the lowest index
             (greedy coordinate descent)
    """
    g = np.asarray(g, dtype=np.float64)
    if norm_kind is NormKind.L2:
        return -g
    if norm_kind is NormKind.LINF:
        return -np.sum(np.abs(g)) * np.sign(g)
    if norm_kind is NormKind.L1:
        delta = np.zeros_like(g)
        i = int(np.argmax(np.abs(g)))
        delta[i] = -g[i]
        return delta
    raise ValueError(f"no steepest-descent closed form for {norm_kind}")


def steepest_step(w, g, norm_kind: NormKind, step_size: float) -> np.ndarray:
    """One steepest-descent update: w + step_size * steepest_direction(g)."""
    w = np.asarray(w, dtype=np.float64)
    return w + step_size * steepest_direction(g, norm_kind)


def armijo_backtrack(
    f, x, direction, slope, max_step, c: float = ARMIJO_C, min_step: float = MIN_STEP
) -> float:
    """Backtracking Armijo line search on an arbitrary objective.

    Halves the step from ``max_step`` until
    ``f(x + step * direction) <= f(x) + c * step * slope``; ``slope`` is
    the directional derivative at x and must be negative (a descent
    direction). Steps floored at ``min_step`` are accepted with a warning.
    """
    if slope >= 0:
        raise ValueError(f"not a descent direction: slope {slope:.3e} >= 0")
    x = np.asarray(x, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    f0 = f(x)
    step = float(max_step)
    while True:
        if f(x + step * direction) <= f0 + c * step * slope:
            return step
        if step <= min_step:
            warnings.warn(
                f"line search floored at {min_step:.0e} without sufficient decrease",
                RuntimeWarning,
            )
            return step
        step = max(step * 0.5, min_step)


def backtracking_line_search(
    ds: Dataset, w, direction, max_step, loss: str = "exponential"
) -> float:
    """Armijo search for training: sufficient decrease on the log risk.

    The log transform is monotone, so accepted steps strictly decrease the
    risk itself while staying numerically meaningful when the risk spans
    hundreds of orders of magnitude.
    """
    w = np.asarray(w, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)

    def logrisk(v):
        return losses.log_risk(ds.y * (ds.X @ v), loss)

    ghat, log_gnorm = stabilized_gradient(ds, w, loss)
    f0 = logrisk(w)
    # d/dt log R(w + t u) = <grad R, u> / R = exp(log||g|| - log R) <ghat, u>
    slope = np.exp(log_gnorm - f0) * float(ghat @ direction)
    return armijo_backtrack(logrisk, w, direction, slope, max_step)


def dual_norm_subgradient(w, attack_norm: NormKind) -> np.ndarray:
    """A subgradient of w -> ||w||_dual(attack_norm).

    l1 penalties use sign(w) (0 at 0); linf penalties distribute mass
    equally over the maximal coordinates; l2 uses w/||w||_2; Fourier
    penalties phase-align in the spectrum. Each is a maximizer of <w, u>
    over the attack-norm unit ball, hence a valid subgradient.
    """
    w = np.asarray(w, dtype=np.float64)
    if not np.any(w):
        return np.zeros_like(w)
    if attack_norm is NormKind.L1:
        # penalty ||w||_inf: spread over all argmax coordinates
        a = np.abs(w)
        top = a == np.max(a)
        s = np.zeros_like(w)
        s[top] = np.sign(w[top]) / np.count_nonzero(top)
        return s
    return dual_witness(w, attack_norm)


def _split_bias(w: np.ndarray, augmented: bool):
    if augmented:
        return w[:-1], w[-1:]
    return w, w[:0]


def _embed_signal(sig: np.ndarray, bias: np.ndarray) -> np.ndarray:
    return np.concatenate([sig, bias]) if bias.size else sig


def _check_knob_config(cfg: TrainConfig, expect_norm=None, allow_reg=None, allow_adv=None):
    """Reject configs whose mode fields contradict the requested run."""
    if cfg.norm_kind is not None and expect_norm is not None and cfg.norm_kind is not expect_norm:
        raise ValueError(f"config norm_kind {cfg.norm_kind} conflicts with {expect_norm}")
    if cfg.reg is not None and cfg.reg != allow_reg:
        raise ValueError("config reg field conflicts with the requested run")
    if cfg.adv is not None and cfg.adv != allow_adv:
        raise ValueError("config adv field conflicts with the requested run")


def _train_linear_core(ds: Dataset, cfg: TrainConfig, norm_kind: NormKind, adv):
    """Shared loop for plain steepest descent and adversarial training."""
    start = time.perf_counter()
    trace = TrainTrace()
    w = np.zeros(ds.ambient_dim)
    best = np.inf
    use_adv = adv is not None and adv.eps > 0

    def objective(v):
        m = ds.y * (ds.X @ v)
        if use_adv:
            sig, _ = _split_bias(v, ds.augmented)
            m = m - adv.eps * (norm(sig, dual(adv.attack_norm)) if np.any(sig) else 0.0)
        return losses.log_risk(m, cfg.loss)

    for t in range(cfg.steps):
        m = ds.y * (ds.X @ w)
        if use_adv:
            w_sig, _ = _split_bias(w, ds.augmented)
            sub_sig = dual_norm_subgradient(w_sig, adv.attack_norm)
            m = m - adv.eps * float(w_sig @ sub_sig)  # w.s equals the dual-norm penalty
        logrisk = losses.log_risk(m, cfg.loss)
        if logrisk > max(best, 0.0) + np.log(DIVERGENCE_FACTOR):
            trace.wall_clock = time.perf_counter() - start
            trace.final_model = LinearModel(w=w.copy())
            raise DivergenceError(
                f"loss diverged at step {t}: log risk {logrisk:.3f} vs best "
                f"{best:.3f} (step size {cfg.step_size})",
                trace=trace,
            )
        best = min(best, logrisk)
        if t % cfg.record_every == 0:
            trace.record(ds, t, logrisk, LinearModel(w=w.copy()))
        lw = losses.log_loss_weights(m, cfg.loss)
        shift = np.max(lw)
        p = np.exp(lw - shift)
        G = -(ds.X.T @ (ds.y * p))
        if use_adv:
            sub = _embed_signal(sub_sig, np.zeros(1) if ds.augmented else np.zeros(0))
            G = G + adv.eps * np.sum(p) * sub
        scale = np.linalg.norm(G)
        if scale == 0.0:
            continue  # balanced point: stay put
        ghat = G / scale
        direction = steepest_direction(ghat, norm_kind)
        # unit velocity in the descent geometry: the dual-norm coefficient is a
        # positive scalar, so this rescales speed without bending the path
        direction = direction / norm(direction, norm_kind)
        if cfg.line_search_max_step is not None:
            log_gnorm = shift - np.log(ds.n) + np.log(scale)
            slope = np.exp(log_gnorm - logrisk) * float(ghat @ direction)
            gamma = armijo_backtrack(
                objective, w, direction, slope, cfg.line_search_max_step
            )
        else:
            gamma = cfg.step_size
        w = w + gamma * direction
    final_logrisk = objective(w)
    if not trace.steps or trace.steps[-1] != cfg.steps:
        trace.record(ds, cfg.steps, final_logrisk, LinearModel(w=w.copy()))
    trace.wall_clock = time.perf_counter() - start
    trace.final_model = LinearModel(w=w.copy())
    return trace


def train_steepest(ds: Dataset, cfg: TrainConfig) -> TrainTrace:
    """Plain steepest descent from w = 0 in the configured norm geometry.

    The iterate direction converges to the maximum-margin separator with
    respect to cfg.norm_kind, hence to the maximally robust classifier
    against dual-norm attacks; the trace records the margin trajectory.
    """
    if cfg.mode != "plain":
        raise ValueError("train_steepest needs a plain-mode config (norm_kind set)")
    if cfg.norm_kind not in STEEPEST_KINDS:
        raise ValueError("steepest descent supports l1, l2, linf geometries")
    return _train_linear_core(ds, cfg, cfg.norm_kind, adv=None)


def adversarial_training_linear(
    ds: Dataset, eps: float, attack_norm: NormKind, cfg: TrainConfig | None = None
) -> TrainTrace:
    """Gradient descent on the closed-form adversarial risk of a linear model.

    The inner maximization over the eps-ball is exact for linear models:
    the adversarial margin is m_i - eps * ||w||_dual(attack), so training
    needs no attack loop. With eps = 0 the computation reduces, bit for
    bit, to plain l2 steepest descent.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    adv = AdvSpec(eps=eps, attack_norm=attack_norm)
    if cfg is None:
        cfg = TrainConfig(norm_kind=NormKind.L2)
    _check_knob_config(cfg, expect_norm=NormKind.L2, allow_adv=adv)
    return _train_linear_core(ds, cfg, NormKind.L2, adv=adv)


def prox(kind: NormKind, theta: float, w) -> np.ndarray:
    """Proximal operator of theta * ||.||_kind at w.

    l1: soft threshold by theta. l2: block shrink toward 0 by theta.
    linf: Moreau identity, w minus the projection of w onto the l1 ball of
    radius theta. fourier-l1: complex soft threshold in the spectrum
    (magnitudes shrink by theta, phases preserved), mapped back to a real
    vector.
    """
    w = np.asarray(w, dtype=np.float64)
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    if theta == 0:
        return w.copy()
    if kind is NormKind.L1:
        return np.sign(w) * np.maximum(np.abs(w) - theta, 0.0)
    if kind is NormKind.L2:
        n = np.linalg.norm(w)
        if n <= theta:
            return np.zeros_like(w)
        return (1.0 - theta / n) * w
    if kind is NormKind.LINF:
        return w - project_l1_ball(w, theta)
    if kind is NormKind.FOURIER_L1:
        return fourier.idft(fourier.complex_soft_threshold(fourier.dft(w), theta))
    raise ValueError(f"no prox for norm kind {kind}")


def train_proximal(
    ds: Dataset, reg_kind: NormKind, lam: float, cfg: TrainConfig | None = None, w0=None
) -> TrainTrace:
    """Proximal gradient descent on risk(w) + lam * ||w||_reg_kind.

    Steps use raw risk gradients (the regularizer anchors the objective's
    scale) with the standard quadratic-upper-bound backtracking, so no
    per-lambda step tuning is needed. For augmented datasets the penalty
    covers only the signal coordinates; the bias coordinate takes plain
    gradient steps. lam = 0 delegates to plain l2 steepest descent so the
    unregularized path is recovered exactly.
    """
    reg_kind = NormKind.parse(reg_kind)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if lam == 0:
        base = cfg if cfg is not None else TrainConfig(norm_kind=NormKind.L2)
        plain = replace(base, norm_kind=NormKind.L2, reg=None, adv=None)
        return train_steepest(ds, plain)
    spec = RegSpec(kind=reg_kind, coeff=lam)
    if cfg is None:
        cfg = TrainConfig(reg=spec)
    _check_knob_config(cfg, allow_reg=spec)
    start = time.perf_counter()
    trace = TrainTrace()
    w = np.zeros(ds.ambient_dim) if w0 is None else np.asarray(w0, dtype=np.float64).copy()
    gamma = cfg.step_size

    def smooth_risk(v):
        lr = losses.log_risk(ds.y * (ds.X @ v), cfg.loss)
        return float(np.exp(lr)) if lr < 700.0 else float("inf")

    def reg_value(v):
        sig, _ = _split_bias(v, ds.augmented)
        return lam * (norm(sig, reg_kind) if np.any(sig) else 0.0)

    best = np.inf
    for t in range(cfg.steps):
        m = ds.y * (ds.X @ w)
        risk = smooth_risk(w)
        objective = risk + reg_value(w)
        log_obj = float(np.log(objective)) if objective > 0 else float("-inf")
        if log_obj > max(best, 0.0) + np.log(DIVERGENCE_FACTOR):
            trace.wall_clock = time.perf_counter() - start
            trace.final_model = LinearModel(w=w.copy())
            raise DivergenceError(
                f"objective diverged at step {t}: log objective {log_obj:.3f} "
                f"vs best {best:.3f}",
                trace=trace,
            )
        best = min(best, log_obj)
        if t % cfg.record_every == 0:
            trace.record(ds, t, log_obj, LinearModel(w=w.copy()))
        grad = ds.X.T @ (losses.loss_derivative(m, cfg.loss) * ds.y) / ds.n
        while True:
            sig, bias = _split_bias(w - gamma * grad, ds.augmented)
            w_plus = _embed_signal(prox(reg_kind, gamma * lam, sig), bias)
            diff = w_plus - w
            bound = risk + float(grad @ diff) + float(diff @ diff) / (2.0 * gamma)
            if smooth_risk(w_plus) <= bound + 1e-15 * max(1.0, abs(bound)):
                break
            if gamma <= MIN_STEP:
                warnings.warn("proximal step floored at minimum", RuntimeWarning)
                break
            gamma = max(gamma * 0.5, MIN_STEP)
        w = w_plus
        gamma = min(gamma * 1.25, 1e6)
    final_obj = smooth_risk(w) + reg_value(w)
    log_obj = float(np.log(final_obj)) if final_obj > 0 else float("-inf")
    if not trace.steps or trace.steps[-1] != cfg.steps:
        trace.record(ds, cfg.steps, log_obj, LinearModel(w=w.copy()))
    trace.wall_clock = time.perf_counter() - start
    trace.final_model = LinearModel(w=w.copy())
    return trace


def regularization_path(
    ds: Dataset, reg_kind: NormKind, lambdas, cfg: TrainConfig | None = None
):
    """Warm-started proximal runs over a decreasing lambda grid.

    Returns a list of (lambda, TrainTrace) sorted from largest to smallest
    lambda; as lambda -> 0 the final iterates' matched-norm margin climbs
    toward the max-margin oracle.
    """
    reg_kind = NormKind.parse(reg_kind)
    lams = sorted((float(l) for l in lambdas), reverse=True)
    if any(l <= 0 for l in lams):
        raise ValueError("path lambdas must be positive")
    out = []
    w0 = None
    for lam in lams:
        spec = RegSpec(reg_kind, lam)
        run_cfg = cfg if cfg is not None else TrainConfig(reg=spec)
        run_cfg = replace(run_cfg, norm_kind=None, adv=None, reg=spec)
        trace = train_proximal(ds, reg_kind, lam, run_cfg, w0=w0)
        out.append((lam, trace))
        w0 = trace.final_model.w
    return out


def train_conv_gd(ds: Dataset, cfg: TrainConfig | None = None, depth: int = 2) -> TrainTrace:
    """Gradient descent on a depth-L linear circular-convolution network.

    Layers are initialized from a scaled Gaussian (cfg.init_scale, seeded)
    and updated along the exact joint gradient direction, normalized across
    all layers so the trajectory stays informative after the risk plateaus.
    The trace records margins of the effective weight; the Fourier-l1
    weight norm is the quantity this parametrization implicitly minimizes,
    so the fourier-linf margin is the one to watch.
    """
    if cfg is None:
        cfg = TrainConfig(norm_kind=NormKind.L2)
    if cfg.norm_kind is None:
        cfg = replace(cfg, norm_kind=NormKind.L2)
    if cfg.mode != "plain" or cfg.norm_kind is not NormKind.L2:
        raise ValueError("conv training runs plain gradient descent")
    if ds.augmented:
        raise ValueError(
            "conv nets need non-augmented data (convolution acts on signal coords)"
        )
    if depth < 2:
        raise ValueError("need depth >= 2")
    start = time.perf_counter()
    d = ds.ambient_dim
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    layers = [cfg.init_scale * rng.standard_normal(d) / np.sqrt(d) for _ in range(depth)]
    trace = TrainTrace()
    best = np.inf
    for t in range(cfg.steps):
        net = ConvLinearNet(layers=tuple(layers))
        w_eff = effective_weight(net)
        m = ds.y * (ds.X @ w_eff)
        logrisk = losses.log_risk(m, cfg.loss)
        if logrisk > max(best, 0.0) + np.log(DIVERGENCE_FACTOR):
            trace.wall_clock = time.perf_counter() - start
            trace.final_model = net
            raise DivergenceError(
                f"loss diverged at step {t}: log risk {logrisk:.3f} vs best {best:.3f}",
                trace=trace,
            )
        best = min(best, logrisk)
        if t % cfg.record_every == 0:
            trace.record(ds, t, logrisk, net)
        lw = losses.log_loss_weights(m, cfg.loss)
        shift = np.max(lw)
        p = np.exp(lw - shift)
        G = -(ds.X.T @ (ds.y * p))
        pulls = []
        for i in range(depth):
            rest = [l for j, l in enumerate(layers) if j != i]
            others = reduce(fourier.circular_convolve, rest)
            pulls.append(fourier.circular_convolve(fourier.flip(others), G))
        joint = np.sqrt(sum(float(u @ u) for u in pulls))
        if joint == 0.0:
            continue
        layers = [l - cfg.step_size * u / joint for l, u in zip(layers, pulls)]
    net = ConvLinearNet(layers=tuple(layers))
    final_logrisk = losses.log_risk(ds.y * (ds.X @ effective_weight(net)), cfg.loss)
    if not trace.steps or trace.steps[-1] != cfg.steps:
        trace.record(ds, cfg.steps, final_logrisk, net)
    trace.wall_clock = time.perf_counter() - start
    trace.final_model = net
    return trace
