"""Ground-truth maximally robust classifiers via convex optimization.

The maximally robust classifier against eps-balls of an attack norm is the
minimum dual-norm separator scaled to unit margin:

    minimize ||w_signal||_dual(attack)   subject to  y_i (w . x_i) >= 1

(the bias coordinate of augmented data is free: perturbations cannot touch
it, so it carries no norm). The solver is operator splitting: a linearized
ADMM alternating the norm's prox with projection onto the margin
constraints, with residual-balanced penalty adaptation. Optimality is
certified by the dual program max sum(lam) over lam >= 0 with
||A^T lam||_attack <= 1: the reported kkt_residual is the relative duality
gap (plus the bias-column stationarity violation when a bias is present),
so a small residual is a proof of near-optimality, not a heuristic.

A desk-scale brute-force grid search over unit dual-norm spheres (d <= 3)
provides an independent check of the splitting solver.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .models import LinearModel
from .norms import NormKind, dual, norm
from .optimizers import prox

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 1_000_000
CHECK_EVERY = 25
BALANCE_EVERY = 50
RELAXATION = 1.6

ORACLE_ATTACK_KINDS = (NormKind.L1, NormKind.L2, NormKind.LINF, NormKind.FOURIER_LINF)


class OracleError(RuntimeError):
    """Raised on unsupported problems (not on non-convergence, which is reported)."""


@dataclass(frozen=True)
class OracleSolution:
    """A certified (or honestly flagged) max-margin solution.

    ``w`` is rescaled so min_i y_i (w . x_i) = 1; ``objective`` is the dual
    norm of its signal part and ``max_margin`` its reciprocal, the largest
    eps no attack within the budget can defeat. ``kkt_residual`` is the
    optimality certificate described in the module docstring;
    ``converged`` records whether it met the tolerance within the
    iteration cap.
    """

    w: np.ndarray
    attack_norm: NormKind
    objective: float
    max_margin: float
    kkt_residual: float
    iterations: int
    converged: bool

    def model(self) -> LinearModel:
        return LinearModel(w=self.w)


def _signal(w: np.ndarray, augmented: bool) -> np.ndarray:
    return w[:-1] if augmented else w


def _objective_value(w: np.ndarray, obj_kind: NormKind, augmented: bool) -> float:
    sig = _signal(w, augmented)
    return norm(sig, obj_kind) if np.any(sig) else 0.0


def _prox_objective(w: np.ndarray, obj_kind: NormKind, theta: float, augmented: bool):
    if augmented:
        out = w.copy()
        out[:-1] = prox(obj_kind, theta, w[:-1])
        return out
    return prox(obj_kind, theta, w)


def _primal_bound(ds, A, w, obj_kind: NormKind):
    """Feasible rescaling of w and its objective; (None, inf) if not separating."""
    mm = float(np.min(A @ w))
    if mm <= 0:
        return None, np.inf
    w_feas = w / mm
    return w_feas, _objective_value(w_feas, obj_kind, ds.augmented)


def _dual_bound(ds, A, lam, attack_kind: NormKind) -> float:
    """Largest valid dual objective obtainable from this multiplier estimate.

    Repairs the two dual constraints exactly: the bias column condition
    sum(lam_i y_i) = 0 by shrinking one class, then the norm condition
    ||A_sig^T lam||_attack <= 1 by global scaling. The returned sum is a
    true lower bound on the minimum objective.
    """
    lam = np.maximum(lam, 0.0)
    if not lam.any():
        return 0.0
    if ds.augmented:
        excess = float(lam @ ds.y)
        if excess > 0:
            side = ds.y > 0
        else:
            side = ds.y < 0
        side_sum = float(np.sum(lam[side]))
        if side_sum <= abs(excess) or side_sum == 0.0:
            return 0.0
        lam = lam.copy()
        lam[side] *= 1.0 - abs(excess) / side_sum
    v_sig = _signal(A.T @ lam, ds.augmented)
    scale = norm(v_sig, attack_kind) if np.any(v_sig) else 0.0
    if scale > 1.0:
        lam = lam / scale
    return float(np.sum(lam))


def min_norm_solve(
    ds: Dataset,
    attack_norm: NormKind,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> OracleSolution:
    """Solve the minimum dual-norm separation program for this dataset.

    Supports attack norms l1, l2, linf, fourier-linf (objective norms
    linf, l2, l1, fourier-l1). Non-convergence within the iteration cap is
    reported through ``converged=False`` with the achieved residual; the
    result is never silently degraded.
    """
    if attack_norm not in ORACLE_ATTACK_KINDS:
        raise OracleError(
            f"oracle supports attack norms {[k.value for k in ORACLE_ATTACK_KINDS]}, "
            f"got {attack_norm.value}"
        )
    obj_kind = dual(attack_norm)
    A = ds.X * ds.y[:, None]
    n, D = A.shape
    lip = float(np.linalg.norm(A, 2)) ** 2
    if lip == 0:
        raise OracleError("degenerate dataset: zero design matrix")
    rho = 1.0
    mu = 0.95 / (rho * lip)
    # warm start near the 1.5-margin least-squares separator
    q = np.linalg.solve(A @ A.T + 1e-6 * np.eye(n), 1.5 * np.ones(n))
    w = A.T @ q
    z = np.maximum(A @ w, 1.0)
    u = np.zeros(n)
    best_primal = np.inf
    best_dual = 0.0
    best_gap = np.inf
    best_w = None
    lam_sum = np.zeros(n)
    avg_count = 0
    it = 0
    for it in range(1, max_iter + 1):
        w = _prox_objective(w - mu * rho * (A.T @ (A @ w - z + u)), obj_kind, mu, ds.augmented)
        Aw = A @ w
        z_prev = z
        relaxed = RELAXATION * Aw + (1.0 - RELAXATION) * z_prev
        z = np.maximum(relaxed + u, 1.0)
        u = u + relaxed - z
        # active constraints drive u negative; the multiplier estimate is -rho*u,
        # invariant to penalty rebalancing, so its running average is well defined
        lam_sum -= rho * u
        avg_count += 1
        if it % CHECK_EVERY == 0:
            w_feas, primal = _primal_bound(ds, A, w, obj_kind)
            if primal < best_primal and w_feas is not None:
                best_primal = primal
                best_w = w_feas
            best_dual = max(
                best_dual,
                _dual_bound(ds, A, -rho * u, attack_norm),
                _dual_bound(ds, A, lam_sum / avg_count, attack_norm),
            )
            if np.isfinite(best_primal):
                best_gap = max(best_primal - best_dual, 0.0) / max(1.0, best_primal)
            if best_gap <= tol:
                break
            if it % (CHECK_EVERY * 800) == 0:
                # periodic restart of the average so stale early iterates fade
                lam_sum[:] = 0.0
                avg_count = 0
        if it % BALANCE_EVERY == 0:
            r = float(np.linalg.norm(Aw - z))
            s = float(rho * np.linalg.norm(A.T @ (z - z_prev)))
            if r > 10.0 * s and s > 0:
                rho *= 2.0
                u /= 2.0
                mu = 0.95 / (rho * lip)
            elif s > 10.0 * r and r > 0:
                rho /= 2.0
                u *= 2.0
                mu = 0.95 / (rho * lip)
    if best_w is None:
        # never produced a feasible candidate; report the raw iterate honestly
        margins = A @ w
        mm = float(np.min(margins))
        w_out = w if mm <= 0 else w / mm
        objective = _objective_value(w_out, obj_kind, ds.augmented)
        return OracleSolution(
            w=w_out,
            attack_norm=attack_norm,
            objective=objective,
            max_margin=1.0 / objective if objective > 0 else 0.0,
            kkt_residual=float("inf"),
            iterations=it,
            converged=False,
        )
    objective = _objective_value(best_w, obj_kind, ds.augmented)
    converged = best_gap <= tol
    if not converged:
        log.warning(
            "oracle did not converge: residual %.3e after %d iterations", best_gap, it
        )
    # objective 0 means a pure-bias separator: no budget ever flips it
    return OracleSolution(
        w=best_w,
        attack_norm=attack_norm,
        objective=objective,
        max_margin=1.0 / objective if objective > 0 else float("inf"),
        kkt_residual=float(best_gap),
        iterations=it,
        converged=converged,
    )


def _angles_to_dirs(thetas: np.ndarray, phis: np.ndarray | None) -> np.ndarray:
    """Angle grids to direction rows: circle (phis None) or sphere product."""
    if phis is None:
        return np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
    phi, theta = np.meshgrid(phis, thetas, indexing="ij")
    phi, theta = phi.ravel(), theta.ravel()
    sin_phi = np.sin(phi)
    return np.stack(
        [sin_phi * np.cos(theta), sin_phi * np.sin(theta), np.cos(phi)], axis=1
    )


def _rowwise_norm(dirs: np.ndarray, kind: NormKind) -> np.ndarray:
    if kind is NormKind.L1:
        return np.sum(np.abs(dirs), axis=1)
    if kind is NormKind.L2:
        return np.linalg.norm(dirs, axis=1)
    if kind is NormKind.LINF:
        return np.max(np.abs(dirs), axis=1)
    mags = np.abs(np.fft.fft(dirs, axis=1, norm="ortho"))
    if kind is NormKind.FOURIER_L1:
        return np.sum(mags, axis=1)
    if kind is NormKind.FOURIER_LINF:
        return np.max(mags, axis=1)
    raise ValueError(f"unhandled norm kind {kind}")


def _direction_grid(d: int, resolution: float):
    """Nested angular grids on the Euclidean sphere for d in {2, 3}.

    Halving the resolution doubles the angular counts, and every coarse
    point survives into the finer grid, so refining never loses a
    candidate (grid maxima are monotone in refinement).
    """
    levels = int(np.ceil(np.log2(max(2.0 * np.pi / resolution, 4.0))))
    n_theta = 2 ** levels
    thetas = 2.0 * np.pi * np.arange(n_theta) / n_theta
    if d == 2:
        return thetas, None
    n_phi = n_theta // 2 + 1
    phis = np.linspace(0.0, np.pi, n_phi)
    return thetas, phis


_REFINE_POINTS = 17
_REFINE_STARTS = 32
_REFINE_TARGET = 1e-8  # final angular window half-width, radians


def _coarse_local_maxima(cand: np.ndarray, n_theta: int) -> np.ndarray:
    """Flat indices of grid points not beaten by any grid neighbor.

    The theta axis wraps; at d=3 the (phi, theta) grid is compared against
    all 8 neighbors with clamped phi edges.
    """
    if cand.size == n_theta:
        left, right = np.roll(cand, 1), np.roll(cand, -1)
        return np.flatnonzero((cand >= left) & (cand >= right))
    grid = cand.reshape(-1, n_theta)
    padded = np.pad(grid, ((1, 1), (0, 0)), mode="edge")
    padded = np.concatenate(
        [padded[:, -1:], padded, padded[:, :1]], axis=1
    )
    is_max = np.ones_like(grid, dtype=bool)
    for dp in (0, 1, 2):
        for dt in (0, 1, 2):
            if dp == 1 and dt == 1:
                continue
            is_max &= grid >= padded[dp:dp + grid.shape[0], dt:dt + n_theta]
    return np.flatnonzero(is_max.ravel())


def brute_force_max_margin(
    ds: Dataset, attack_norm: NormKind, grid_resolution: float = 2.0 * np.pi / 512
) -> float:
    """Grid-search the max margin over unit dual-norm spheres (d <= 3).

    Each direction on a nested angular grid is scaled to unit dual norm
    and scored by its worst attack-normalized margin; for augmented
    datasets the optimal bias given the direction is closed-form (the
    midpoint balancing the two classes' worst scores). Every local
    maximum of the coarse sweep (capped at the best few dozen) is refined
    through shrinking angular windows that keep their center point, so
    the estimate lower-bounds the true max margin and never decreases
    when the coarse grid is refined.
    """
    if ds.d > 3:
        raise OracleError("brute force is a desk-scale oracle: needs d <= 3")
    weight_kind = dual(attack_norm)
    X_sig = ds.signal()
    pos = ds.y > 0
    neg = ~pos
    if ds.augmented and not (pos.any() and neg.any()):
        return float("inf")  # one class: any direction separates with huge bias

    def score_all(thetas, phis):
        dirs = _angles_to_dirs(thetas, phis)
        scales = _rowwise_norm(dirs, weight_kind)
        scores = (X_sig @ dirs.T) / np.where(scales > 0, scales, 1.0)
        if ds.augmented:
            cand = 0.5 * (
                np.min(scores[pos], axis=0) + np.min(-scores[neg], axis=0)
            )
        else:
            cand = np.min(ds.y[:, None] * scores, axis=0)
        return np.where(scales > 0, cand, -np.inf)

    thetas, phis = _direction_grid(ds.d, grid_resolution)
    cand = score_all(thetas, phis)
    best = float(np.max(cand))
    offsets = np.linspace(-1.0, 1.0, _REFINE_POINTS)

    def refine(center, spacing):
        # halving windows that keep their center: a peak one cell away
        # stays reachable, and the whole descent is a pure function of the
        # start, so coarser grids rerun bit-identical refinements
        nonlocal best
        rounds = int(np.ceil(np.log2(max(2.0 * spacing / _REFINE_TARGET, 2.0))))
        width = 2.0 * spacing
        for _ in range(rounds):
            local = [c + width * offsets for c in center]
            values = score_all(local[-1], local[0] if ds.d == 3 else None)
            i = int(np.argmax(values))
            if ds.d == 2:
                center = (local[0][i],)
            else:
                center = (local[0][i // local[1].size], local[1][i % local[1].size])
            if values[i] > best:
                best = float(values[i])
            width *= 0.5

    # every nested coarser grid contributes its own local maxima as starts,
    # so a finer call refines a superset of any coarser call's starts and
    # the estimate is monotone under grid refinement by construction
    level = 0
    while thetas.size >> level >= 4:
        stride = 1 << level
        sub_thetas = thetas[::stride]
        if ds.d == 2:
            sub_cand = cand[::stride]
            sub_phis = None
        else:
            grid = cand.reshape(phis.size, thetas.size)
            sub_cand = grid[::stride, ::stride].ravel()
            sub_phis = phis[::stride]
        starts = _coarse_local_maxima(sub_cand, sub_thetas.size)
        if starts.size > _REFINE_STARTS:
            starts = starts[np.argsort(sub_cand[starts])[::-1][:_REFINE_STARTS]]
        spacing = sub_thetas[1] - sub_thetas[0]
        for flat in starts:
            if ds.d == 2:
                refine((sub_thetas[flat],), spacing)
            else:
                refine(
                    (sub_phis[flat // sub_thetas.size],
                     sub_thetas[flat % sub_thetas.size]),
                    spacing,
                )
        level += 1
    return best
