"""Unitary DFT, circular convolution, and complex magnitude operators.

All transforms use the symmetric normalization with a 1/sqrt(d) factor on
both the forward and the inverse pass, so the d-point DFT is a unitary map
and Parseval's identity holds without correction factors:

    [F(v)]_i = (1/sqrt(d)) * sum_k v_k exp(-2j*pi*k*i/d)

Circular convolution carries the same 1/sqrt(d) factor,

    [w . x]_i = (1/sqrt(d)) * sum_k w[(-k) mod d] * x[(i+k) mod d]

which makes the convolution theorem exact under this DFT:
dft(convolve(w, x)) == dft(w) * dft(x) elementwise, and sqrt(d)*e_0 is the
identity kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Imaginary residue larger than this (relative to the spectrum norm) means the
# spectrum was not the transform of a real vector.
HERMITIAN_IM_RTOL = 1e-8

# Spectrum magnitudes below this fraction of the l2 norm count as zero bins
# (no phase is defined there).
ZERO_BIN_RTOL = 1e-12


class HermitianSymmetryError(ValueError):
    """Raised when an inverse transform would produce a non-real vector."""


@dataclass(frozen=True)
class Spectrum:
    """DFT image of a real vector.

    Attributes
    ----------
    coeffs : complex ndarray, shape (d,)
        Fourier coefficients under the unitary normalization.
    hermitian : bool
        Whether ``coeffs[i] == conj(coeffs[(d - i) % d])`` is asserted,
        i.e. the spectrum came from (and inverts to) a real vector.
    """

    coeffs: np.ndarray
    hermitian: bool = True

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise ValueError("spectrum must be a non-empty 1-D array")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def d(self) -> int:
        return self.coeffs.shape[0]

    def magnitudes(self) -> np.ndarray:
        return np.abs(self.coeffs)


def _as_real_vector(v, name="v") -> np.ndarray:
    v = np.asarray(v)
    if np.iscomplexobj(v):
        raise ValueError(f"{name} must be real-valued")
    v = v.astype(np.float64, copy=False)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D real array")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def dft(v) -> Spectrum:
    """Unitary DFT of a real vector.

    Parameters
    ----------
    v : array_like, shape (d,)
        Real input vector.

    Returns
    -------
    Spectrum
        Hermitian spectrum with ``coeffs[i] = (1/sqrt(d)) * sum_k v_k
        exp(-2j*pi*k*i/d)``.
    """
    v = _as_real_vector(v)
    return Spectrum(np.fft.fft(v, norm="ortho"), hermitian=True)


def dft_direct(v) -> Spectrum:
    """O(d^2) direct evaluation of the same unitary DFT.

    Reference path for arbitrary d and for cross-checks of the FFT path.
    """
    v = _as_real_vector(v)
    d = v.shape[0]
    k = np.arange(d)
    phases = np.exp(-2j * np.pi * np.outer(k, k) / d)
    return Spectrum(phases @ v / np.sqrt(d), hermitian=True)


def idft(s: Spectrum) -> np.ndarray:
    """Inverse unitary DFT back to a real vector.

    Raises
    ------
    HermitianSymmetryError
        If the imaginary residue after inversion exceeds
        ``HERMITIAN_IM_RTOL * ||s||_2``, i.e. the spectrum does not
        correspond to any real vector.
    """
    v = np.fft.ifft(s.coeffs, norm="ortho")
    scale = np.linalg.norm(s.coeffs)
    residue = np.linalg.norm(v.imag)
    if residue > HERMITIAN_IM_RTOL * max(scale, np.finfo(np.float64).tiny):
        raise HermitianSymmetryError(
            f"imaginary residue {residue:.3e} exceeds {HERMITIAN_IM_RTOL:.0e} "
            f"* ||s||_2 = {HERMITIAN_IM_RTOL * scale:.3e}; spectrum is not "
            "Hermitian-symmetric"
        )
    return np.real(v)


def flip(v) -> np.ndarray:
    """Index negation mod d: ``flip(v)[i] == v[(-i) % d]``.

    The DFT of a flipped real vector is the conjugate spectrum; flipping is
    the adjoint move that turns convolution against a fixed kernel into
    correlation.
    """
    v = np.asarray(v)
    return np.roll(v[::-1], 1)


def circular_convolve(w, x) -> np.ndarray:
    """Circular convolution with the 1/sqrt(d) normalization.

    ``out[i] = (1/sqrt(d)) * sum_k w[(-k) % d] * x[(i+k) % d]``, computed
    through the FFT (exact by the convolution theorem under the unitary
    normalization). ``sqrt(d) * e_0`` is the identity element.
    """
    w = _as_real_vector(w, "w")
    x = _as_real_vector(x, "x")
    if w.shape != x.shape:
        raise ValueError("convolution operands must have equal length")
    d = w.shape[0]
    out = np.fft.ifft(np.fft.fft(w) * np.fft.fft(x)) / np.sqrt(d)
    return np.real(out)


def circular_convolve_direct(w, x) -> np.ndarray:
    """O(d^2) direct evaluation of `circular_convolve` (reference path)."""
    w = _as_real_vector(w, "w")
    x = _as_real_vector(x, "x")
    if w.shape != x.shape:
        raise ValueError("convolution operands must have equal length")
    d = w.shape[0]
    out = np.zeros(d)
    for i in range(d):
        for k in range(d):
            out[i] += w[(-k) % d] * x[(i + k) % d]
    return out / np.sqrt(d)


def _phases(coeffs: np.ndarray, zero_tol: float) -> np.ndarray:
    """Unit phases coeffs/|coeffs| with zero bins (|c| <= zero_tol) left at 0."""
    mags = np.abs(coeffs)
    out = np.zeros_like(coeffs)
    live = mags > zero_tol
    out[live] = coeffs[live] / mags[live]
    return out


def spectrum_phases(s: Spectrum, zero_tol: float | None = None) -> Spectrum:
    """Per-bin unit phases of a spectrum; zero bins stay zero.

    ``zero_tol`` defaults to ``ZERO_BIN_RTOL * ||s||_2``.
    """
    if zero_tol is None:
        zero_tol = ZERO_BIN_RTOL * np.linalg.norm(s.coeffs)
    return Spectrum(_phases(s.coeffs, zero_tol), hermitian=s.hermitian)


def complex_linf_project(s: Spectrum, radius) -> Spectrum:
    """Project each coefficient onto the complex disc of the given radius.

    Per-bin Euclidean projection in the complex plane: coefficients with
    ``|c_i| <= radius_i`` are untouched, larger ones are rescaled to
    magnitude ``radius_i`` with their phase preserved. ``radius`` may be a
    scalar or a per-bin nonnegative vector.
    """
    coeffs = s.coeffs
    radius = np.broadcast_to(np.asarray(radius, dtype=np.float64), coeffs.shape)
    if np.any(radius < 0) or not np.all(np.isfinite(radius)):
        raise ValueError("radius must be nonnegative and finite")
    mags = np.abs(coeffs)
    over = mags > radius
    out = coeffs.copy()
    out[over] *= radius[over] / mags[over]
    return Spectrum(out, hermitian=s.hermitian)


def complex_soft_threshold(s: Spectrum, lam: float) -> Spectrum:
    """Shrink each coefficient's magnitude by ``lam``, preserving phase.

    ``c_i -> c_i * max(0, 1 - lam/|c_i|)``; coefficients with
    ``|c_i| <= lam`` map to zero. This is the prox of ``lam * ||.||_1``
    on complex coefficients.
    """
    if lam < 0:
        raise ValueError("threshold must be nonnegative")
    coeffs = s.coeffs
    mags = np.abs(coeffs)
    out = np.zeros_like(coeffs)
    live = mags > lam
    out[live] = coeffs[live] * (1.0 - lam / mags[live])
    return Spectrum(out, hermitian=s.hermitian)


def hermitian_mask(d: int, indices) -> np.ndarray:
    """0/1 frequency mask over the given bins, Hermitian-symmetrized.

    Every requested bin i also activates its mirror (d - i) % d, so masked
    spectra of real vectors stay invertible to real vectors.
    """
    mask = np.zeros(d)
    for i in indices:
        i = int(i) % d
        mask[i] = 1.0
        mask[(d - i) % d] = 1.0
    return mask


def band_mask(d: int, kind: str, count: int) -> np.ndarray:
    """Low- or high-frequency 0/1 mask on the d-point spectrum.

    ``kind="low"`` activates the ``count`` lowest frequencies (DC first),
    ``kind="high"`` the ``count`` highest (Nyquist side first), where the
    frequency of bin i is ``min(i, d - i)``. Masks are Hermitian-symmetric
    by construction.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    freq = np.minimum(np.arange(d), d - np.arange(d))
    order = sorted(set(freq))
    if kind == "low":
        keep = set(order[:count])
    elif kind == "high":
        keep = set(order[len(order) - count:]) if count else set()
    else:
        raise ValueError(f"unknown band kind {kind!r}; use 'low' or 'high'")
    return np.where(np.isin(freq, list(keep)), 1.0, 0.0)
