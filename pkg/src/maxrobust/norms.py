"""Vector norms, dual pairings, witness directions, and ball projections.

Five norm kinds are supported: l1, l2, linf, and the Fourier pair obtained
by measuring a vector's unitary DFT coefficients in l1 or linf. Dual pairs
are (l1, linf), (l2, l2), and (fourier-l1, fourier-linf); duality commutes
with the DFT because the transform is unitary.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from . import fourier


class NormKind(Enum):
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"
    FOURIER_L1 = "fourier-l1"
    FOURIER_LINF = "fourier-linf"

    @classmethod
    def parse(cls, token) -> "NormKind":
        if isinstance(token, cls):
            return token
        token = token.strip().lower().replace("_", "-")
        for kind in cls:
            if kind.value == token:
                return kind
        valid = ", ".join(k.value for k in cls)
        raise ValueError(f"unknown norm kind {token!r}; expected one of: {valid}")


_DUAL = {
    NormKind.L1: NormKind.LINF,
    NormKind.L2: NormKind.L2,
    NormKind.LINF: NormKind.L1,
    NormKind.FOURIER_L1: NormKind.FOURIER_LINF,
    NormKind.FOURIER_LINF: NormKind.FOURIER_L1,
}


def dual(kind: NormKind) -> NormKind:
    """The dual norm kind: sup of inner products over the unit ball."""
    return _DUAL[kind]


def _validated(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a non-empty 1-D real vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def norm(v, kind: NormKind) -> float:
    """Norm of a real vector under the given kind.

    Fourier kinds measure the unitary DFT coefficients, so for example
    ``norm(v, FOURIER_L1) = sum_i |dft(v)_i|``.
    """
    v = _validated(v)
    if kind is NormKind.L1:
        return float(np.sum(np.abs(v)))
    if kind is NormKind.L2:
        return float(np.linalg.norm(v))
    if kind is NormKind.LINF:
        return float(np.max(np.abs(v)))
    mags = np.abs(np.fft.fft(v, norm="ortho"))
    if kind is NormKind.FOURIER_L1:
        return float(np.sum(mags))
    if kind is NormKind.FOURIER_LINF:
        return float(np.max(mags))
    raise ValueError(f"unhandled norm kind {kind}")


def dual_witness(v, kind: NormKind) -> np.ndarray:
    """A unit-ball element of ``kind`` attaining the dual norm of v.

    Returns delta with ``norm(delta, kind) <= 1`` and
    ``<v, delta> == norm(v, dual(kind))``, which is the tight case of
    Holder's inequality. The zero vector maps to the zero witness.
    """
    v = _validated(v)
    d = v.shape[0]
    if not np.any(v):
        return np.zeros(d)
    if kind is NormKind.L1:
        # all mass on one extreme coordinate; ties resolve to lowest index
        i = int(np.argmax(np.abs(v)))
        delta = np.zeros(d)
        delta[i] = np.sign(v[i])
        return delta
    if kind is NormKind.L2:
        return v / np.linalg.norm(v)
    if kind is NormKind.LINF:
        return np.sign(v)
    coeffs = np.fft.fft(v, norm="ortho")
    mags = np.abs(coeffs)
    if kind is NormKind.FOURIER_L1:
        # unit l1 mass on the largest bin, split with its mirror to stay real
        i = int(np.argmax(mags))
        spec = np.zeros(d, dtype=np.complex128)
        phase = coeffs[i] / mags[i]
        mirror = (d - i) % d
        if mirror == i:
            spec[i] = phase
        else:
            spec[i] = 0.5 * phase
            spec[mirror] = 0.5 * np.conj(phase)
        return fourier.idft(fourier.Spectrum(spec))
    if kind is NormKind.FOURIER_LINF:
        # phase-align every nonzero bin at unit magnitude
        spec = np.zeros(d, dtype=np.complex128)
        live = mags > 0
        spec[live] = coeffs[live] / mags[live]
        return fourier.idft(fourier.Spectrum(spec))
    raise ValueError(f"unhandled norm kind {kind}")


def project_l1_ball(v, radius: float) -> np.ndarray:
    """Euclidean projection onto the l1 ball of the given radius.

    Sort-based thresholding: the projection is a soft threshold of v at the
    level that makes the result's l1 norm equal the radius.
    """
    v = _validated(v)
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    if radius == 0:
        return np.zeros_like(v)
    u = np.sort(a)[::-1]
    cumsum = np.cumsum(u)
    ks = np.arange(1, v.size + 1)
    rho = np.max(ks[u - (cumsum - radius) / ks > 0])
    theta = (cumsum[rho - 1] - radius) / rho
    return np.sign(v) * np.maximum(a - theta, 0.0)


def project_ball(v, kind: NormKind, radius: float) -> np.ndarray:
    """Euclidean projection of v onto the radius-ball of the given kind.

    Supported kinds: l1, l2, linf, fourier-linf (per-bin complex disc
    projection in the spectrum, exact because the DFT is unitary).
    """
    v = _validated(v)
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if kind is NormKind.L1:
        return project_l1_ball(v, radius)
    if kind is NormKind.L2:
        n = np.linalg.norm(v)
        return v if n <= radius else v * (radius / n)
    if kind is NormKind.LINF:
        return np.clip(v, -radius, radius)
    if kind is NormKind.FOURIER_LINF:
        spec = fourier.complex_linf_project(fourier.dft(v), radius)
        return fourier.idft(spec)
    raise ValueError(f"no ball projection for norm kind {kind}")
