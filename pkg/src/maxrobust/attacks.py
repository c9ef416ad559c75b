"""Worst-case and iterative attacks, robust error, and robustness sweeps.

For linear decision rules every attack here has a closed form: the
worst-case perturbation inside an eps-ball of norm N moves along the dual
witness of the weights, dropping the decision value by exactly
eps * ||w||_dual(N). The Fourier-linf attack phase-aligns each spectrum bin
of the input gradient and supports per-bin budget masks; an iterative PGD
path exists for parity with gradient-only access. Attacks on augmented
datasets never touch the constant bias coordinate.
"""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass

import numpy as np

from . import fourier, losses
from .data import Dataset
from .models import Model, attackable_weight, decision, weight_vector
from .norms import NormKind, dual, dual_witness, norm, project_ball

log = logging.getLogger(__name__)

ATTACK_METHODS = ("closed-form", "pgd", "fourier-iterative")
PGD_KINDS = (NormKind.L1, NormKind.L2, NormKind.LINF, NormKind.FOURIER_LINF)

# Grid defaults for max_robust_eps, relative to an initial margin estimate.
EPS_GRID_REL_STEP = 0.02
EPS_GRID_REL_MAX = 2.5
BISECTION_HALVINGS = 4  # refines one grid cell to step/16


@dataclass(frozen=True)
class AttackConfig:
    """How to attack: norm, budget, and method knobs.

    ``band_mask`` is a per-frequency nonnegative multiplier on the per-bin
    budget, only meaningful for fourier-linf attacks; it must be
    Hermitian-symmetric. ``preserve_augmented`` keeps the constant bias
    coordinate of augmented datasets untouched (it is not part of the
    input). ``project`` selects the projected multi-step Fourier variant;
    False runs the literal accumulate-only iteration.
    """

    norm_kind: NormKind
    eps: float
    steps: int = 20
    band_mask: np.ndarray | None = None
    preserve_augmented: bool = True
    method: str = "closed-form"
    project: bool = True

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")
        if self.steps < 1:
            raise ValueError("steps must be positive")
        if self.method not in ATTACK_METHODS:
            raise ValueError(f"method must be one of {ATTACK_METHODS}")
        if self.band_mask is not None:
            mask = np.asarray(self.band_mask, dtype=np.float64)
            if self.norm_kind is not NormKind.FOURIER_LINF:
                raise ValueError("band masks only apply to fourier-linf attacks")
            if np.any(mask < 0) or not np.all(np.isfinite(mask)):
                raise ValueError("band mask must be nonnegative and finite")
            d = mask.shape[0]
            if not np.allclose(mask, mask[(-np.arange(d)) % d]):
                raise ValueError("band mask must be Hermitian-symmetric")
            object.__setattr__(self, "band_mask", mask)


def _signal_width(total: int, preserve: bool) -> int:
    return total - 1 if preserve else total


def worst_case_drop(w_attack, norm_kind: NormKind, eps: float, band_mask=None) -> float:
    """Exact worst-case decision drop for a linear rule under the budget.

    Unmasked: eps * ||w||_dual(norm). With a fourier-linf band mask the
    per-bin budgets are eps * mask_i, so the drop is
    eps * sum_i mask_i |dft(w)_i|.
    """
    w_attack = np.asarray(w_attack, dtype=np.float64)
    if band_mask is None:
        return eps * norm(w_attack, dual(norm_kind)) if np.any(w_attack) else 0.0
    mags = np.abs(np.fft.fft(w_attack, norm="ortho"))
    return eps * float(np.sum(np.asarray(band_mask) * mags))


def _worst_case_signal_delta(w_sig, y, norm_kind, eps, band_mask=None) -> np.ndarray:
    """The per-point worst-case perturbation on the signal coordinates."""
    if band_mask is None:
        witness = dual_witness(w_sig, norm_kind)
        return -eps * y * witness
    spec = np.fft.fft(w_sig, norm="ortho")
    mags = np.abs(spec)
    phases = np.zeros_like(spec)
    live = mags > 0
    phases[live] = spec[live] / mags[live]
    delta_spec = -y * eps * np.asarray(band_mask) * phases
    return fourier.idft(fourier.Spectrum(delta_spec))


def linear_worst_case(
    model: Model,
    x,
    y: float,
    norm_kind: NormKind,
    eps: float,
    preserve_augmented: bool = False,
    band_mask=None,
) -> np.ndarray:
    """Closed-form worst-case perturbation for a linear decision rule.

    Returns delta with ||delta||_norm <= eps achieving the exact maximal
    decision drop toward misclassification:
    y * (w . (x + delta)) == y * (w . x) - worst_case_drop(...). With
    ``preserve_augmented`` the trailing coordinate stays zero and the
    witness is computed on the remaining coordinates. A zero attackable
    weight yields a zero perturbation with a warning.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    w = weight_vector(model)
    if x.shape != w.shape:
        raise ValueError("point and weight dimensions differ")
    width = _signal_width(x.shape[0], preserve_augmented)
    w_sig = w[:width]
    delta = np.zeros_like(x)
    if not np.any(w_sig):
        warnings.warn("attackable weight is zero: returning a zero perturbation", RuntimeWarning)
        return delta
    delta[:width] = _worst_case_signal_delta(w_sig, float(y), norm_kind, eps, band_mask)
    return delta


def make_input_grad(model: Model, y: float, loss: str = "exponential"):
    """Gradient oracle x -> d/dx zeta(y * decision(x)) for this model."""
    losses.check_loss(loss)
    w = weight_vector(model)

    def grad(x):
        x = np.asarray(x, dtype=np.float64)
        m = float(y) * float(x @ w)
        return losses.loss_derivative(np.array([m]), loss)[0] * float(y) * w

    return grad


def fourier_linf_attack(
    grad_oracle,
    x,
    y: float,
    eps: float,
    steps: int = 1,
    band_mask=None,
    project: bool = True,
    preserve_augmented: bool = False,
) -> np.ndarray:
    """Iterative spectral attack with per-bin budget eps (times the mask).

    Each iteration transforms the input-gradient to the spectrum, aligns a
    full-budget step with its per-bin phases (bins with magnitude below
    1e-12 * ||spectrum||_2 are left untouched: no phase is defined there),
    and maps back to a real perturbation. The projected variant (default)
    accumulates the perturbation spectrum and clips every bin back to its
    budget, so the total perturbation always satisfies the constraint; the
    literal variant adds each step to the input unprojected.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if steps < 1:
        raise ValueError("steps must be positive")
    x = np.asarray(x, dtype=np.float64)
    width = _signal_width(x.shape[0], preserve_augmented)
    budget = eps * (np.ones(width) if band_mask is None else np.asarray(band_mask, dtype=np.float64))
    if budget.shape != (width,):
        raise ValueError("band mask length must match the signal width")
    x_cur = x.copy()
    total_spec = np.zeros(width, dtype=np.complex128)
    for _ in range(steps):
        g = np.asarray(grad_oracle(x_cur), dtype=np.float64)[:width]
        ghat = fourier.dft(g)
        phase = fourier.spectrum_phases(ghat)  # zero bins stay zero
        step_spec = budget * phase.coeffs
        if project:
            total_spec = fourier.complex_linf_project(
                fourier.Spectrum(total_spec + step_spec), budget
            ).coeffs
            x_cur = x.copy()
            x_cur[:width] += fourier.idft(fourier.Spectrum(total_spec))
        else:
            x_cur[:width] = x_cur[:width] + fourier.idft(fourier.Spectrum(step_spec))
    return x_cur


def pgd_attack(
    model: Model,
    x,
    y: float,
    norm_kind: NormKind,
    eps: float,
    steps: int = 20,
    loss: str = "exponential",
    preserve_augmented: bool = False,
) -> np.ndarray:
    """Projected steepest ascent on the loss inside the eps-ball.

    Ascent directions are dual witnesses of the input gradient under the
    attack norm; after each step the accumulated perturbation is projected
    back onto the ball. eps = 0 returns the input unchanged.
    """
    if norm_kind not in PGD_KINDS:
        raise ValueError(f"pgd supports {[k.value for k in PGD_KINDS]}")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    if eps == 0:
        return x.copy()
    width = _signal_width(x.shape[0], preserve_augmented)
    grad = make_input_grad(model, y, loss)
    step_size = 2.5 * eps / steps
    delta = np.zeros(width)
    for _ in range(steps):
        x_cur = x.copy()
        x_cur[:width] += delta
        g = np.asarray(grad(x_cur), dtype=np.float64)[:width]
        if not np.any(g):
            break
        delta = delta + step_size * dual_witness(g, norm_kind)
        delta = project_ball(delta, norm_kind, eps)
    achieved = norm(delta, norm_kind) if np.any(delta) else 0.0
    if achieved > eps * (1 + 1e-9):
        raise AssertionError("projection failed to enforce the attack budget")
    x_adv = x.copy()
    x_adv[:width] += delta
    return x_adv


def _attack_preserve(ds: Dataset, cfg: AttackConfig) -> bool:
    return cfg.preserve_augmented and ds.augmented


def _closed_form_adv_margins(model: Model, ds: Dataset, cfg: AttackConfig) -> np.ndarray:
    w = weight_vector(model)
    preserve = _attack_preserve(ds, cfg)
    width = _signal_width(ds.ambient_dim, preserve)
    drop = worst_case_drop(w[:width], cfg.norm_kind, cfg.eps, cfg.band_mask)
    return ds.y * (ds.X @ w) - drop


def robust_error(model: Model, ds: Dataset, cfg: AttackConfig) -> float:
    """Fraction of training points misclassified under per-point attack.

    A point counts as an error when y * decision(x + delta) <= 0. The
    closed-form method is exact for the linear rules here; pgd and the
    iterative Fourier attack evaluate the same quantity through gradient
    access only.
    """
    if cfg.method == "closed-form":
        adv = _closed_form_adv_margins(model, ds, cfg)
        return float(np.mean(adv <= 0.0))
    preserve = _attack_preserve(ds, cfg)
    errors = 0
    for i in range(ds.n):
        x, y = ds.X[i], float(ds.y[i])
        if cfg.method == "pgd":
            x_adv = pgd_attack(
                model, x, y, cfg.norm_kind, cfg.eps, cfg.steps, preserve_augmented=preserve
            )
        else:
            if cfg.norm_kind is not NormKind.FOURIER_LINF:
                raise ValueError("fourier-iterative method needs a fourier-linf norm")
            x_adv = fourier_linf_attack(
                make_input_grad(model, y),
                x,
                y,
                cfg.eps,
                steps=cfg.steps,
                band_mask=cfg.band_mask,
                project=cfg.project,
                preserve_augmented=preserve,
            )
        if y * decision(model, x_adv) <= 0.0:
            errors += 1
    return errors / ds.n


def max_robust_eps(
    model: Model,
    ds: Dataset,
    norm_kind: NormKind,
    eps_max: float | None = None,
    step: float | None = None,
    cfg: AttackConfig | None = None,
) -> float:
    """Largest grid budget the model withstands with zero robust error.

    Scans the grid {step, 2*step, ...} up to eps_max for the largest eps
    with robust_error == 0 (errors are monotone in eps for the exact
    attack), then runs one bisection pass inside the bracketing cell down
    to resolution step/16. Returns 0 if even eps = step misclassifies
    something. Grid defaults come from the model's margin estimate:
    step = 2% of it, eps_max = 2.5x.
    """
    from .models import margin as model_margin

    template = cfg or AttackConfig(norm_kind=norm_kind, eps=0.0)

    def error_at(eps: float) -> float:
        probe = AttackConfig(
            norm_kind=norm_kind,
            eps=eps,
            steps=template.steps,
            band_mask=template.band_mask,
            preserve_augmented=template.preserve_augmented,
            method=template.method,
            project=template.project,
        )
        return robust_error(model, ds, probe)

    if error_at(0.0) > 0.0:
        return 0.0
    if step is None or eps_max is None:
        estimate = model_margin(model, ds, norm_kind)
        if estimate <= 0.0:
            return 0.0
        step = EPS_GRID_REL_STEP * estimate if step is None else step
        eps_max = EPS_GRID_REL_MAX * estimate if eps_max is None else eps_max
    if step <= 0 or eps_max < step:
        raise ValueError("need 0 < step <= eps_max")
    cells = int(np.floor(eps_max / step + 1e-12))
    # binary search the grid for the first failing index (errors are monotone)
    first_fail = None
    lo, hi = 1, cells
    while lo <= hi:
        mid = (lo + hi) // 2
        if error_at(mid * step) > 0.0:
            first_fail = mid
            hi = mid - 1
        else:
            lo = mid + 1
    if first_fail == 1:
        return 0.0
    if first_fail is None:
        return cells * step  # the whole grid is robust; nothing to bisect
    lo_eps, hi_eps = (first_fail - 1) * step, first_fail * step
    for _ in range(BISECTION_HALVINGS):
        mid_eps = 0.5 * (lo_eps + hi_eps)
        if error_at(mid_eps) > 0.0:
            hi_eps = mid_eps
        else:
            lo_eps = mid_eps
    return lo_eps


def attack_report(model: Model, ds: Dataset, cfg: AttackConfig) -> list:
    """Per-point rows: clean and attacked decision values plus delta norms."""
    preserve = _attack_preserve(ds, cfg)
    rows = []
    for i in range(ds.n):
        x, y = ds.X[i], float(ds.y[i])
        if cfg.method == "closed-form":
            delta = linear_worst_case(
                model, x, y, cfg.norm_kind, cfg.eps,
                preserve_augmented=preserve, band_mask=cfg.band_mask,
            )
            x_adv = x + delta
        elif cfg.method == "pgd":
            x_adv = pgd_attack(
                model, x, y, cfg.norm_kind, cfg.eps, cfg.steps, preserve_augmented=preserve
            )
            delta = x_adv - x
        else:
            x_adv = fourier_linf_attack(
                make_input_grad(model, y), x, y, cfg.eps,
                steps=cfg.steps, band_mask=cfg.band_mask,
                project=cfg.project, preserve_augmented=preserve,
            )
            delta = x_adv - x
        width = _signal_width(ds.ambient_dim, preserve)
        delta_sig = delta[:width]
        clean = decision(model, x)
        adv = decision(model, x_adv)
        row = {
            "point": i,
            "label": int(y),
            "clean_decision": clean,
            "adv_decision": adv,
            "flipped": int(y * adv <= 0.0),
        }
        for kind in NormKind:
            key = kind.value.replace("-", "_")
            row[f"delta_{key}"] = norm(delta_sig, kind) if np.any(delta_sig) else 0.0
        rows.append(row)
    return rows


REPORT_COLUMNS = (
    ["point", "label", "clean_decision", "adv_decision", "flipped"]
    + [f"delta_{k.value.replace('-', '_')}" for k in NormKind]
)


def write_attack_report(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {k: repr(v) if isinstance(v, float) else v for k, v in row.items()}
            )
