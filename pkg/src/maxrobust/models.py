"""Linear classifiers, linear convolutional networks, and margins.

A linear model scores x by w . x. A conv net composes L circular
convolution layers; since circular convolution is commutative and
associative, the whole network collapses to a single effective weight

    w_eff = w_L . (... . (w_2 . w_1))        (. = circular convolution)

and the network's decision is defined as w_eff . x, with an equivalent
layered adjoint evaluation exposed for cross-checking. The margin of a
model under an attack norm is the smallest score divided by the dual norm
of the weights the attack can act on; for augmented datasets the bias
coordinate is excluded from that dual norm because perturbations never
touch it.
"""

from __future__ import annotations

import hashlib
import zipfile
from dataclasses import dataclass
from functools import reduce

import numpy as np

from . import fourier, losses
from .data import Dataset
from .norms import NormKind, dual, norm

MODEL_FORMAT_VERSION = 1


class UndefinedMarginError(ValueError):
    """Raised when the margin denominator vanishes (zero attackable weight)."""


class ModelFormatError(ValueError):
    """Raised when a model file is truncated, corrupt, or mistyped."""


@dataclass(frozen=True)
class LinearModel:
    """A linear classifier sign(w . x)."""

    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("w must be a non-empty 1-D vector")
        object.__setattr__(self, "w", w)

    @property
    def dim(self) -> int:
        return self.w.shape[0]


@dataclass(frozen=True)
class ConvLinearNet:
    """A linear network of L >= 2 full-width circular convolution layers."""

    layers: tuple

    def __post_init__(self):
        layers = tuple(np.asarray(l, dtype=np.float64) for l in self.layers)
        if len(layers) < 2:
            raise ValueError("need at least 2 layers")
        d = layers[0].shape[0] if layers[0].ndim == 1 else 0
        for l in layers:
            if l.ndim != 1 or l.shape[0] != d or d == 0:
                raise ValueError("layers must be 1-D vectors of equal length")
        object.__setattr__(self, "layers", layers)

    @property
    def dim(self) -> int:
        return self.layers[0].shape[0]

    @property
    def depth(self) -> int:
        return len(self.layers)


Model = LinearModel | ConvLinearNet


def effective_weight(net: ConvLinearNet) -> np.ndarray:
    """Collapse the layer stack into one weight: w_L . (... . (w_2 . w_1))."""
    return reduce(lambda acc, layer: fourier.circular_convolve(layer, acc), net.layers)


def weight_vector(model: Model) -> np.ndarray:
    """The single linear weight the model implements."""
    if isinstance(model, LinearModel):
        return model.w
    return effective_weight(model)


def decision(model: Model, x) -> float | np.ndarray:
    """Decision value(s) w . x; accepts a single point or a row matrix."""
    w = weight_vector(model)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[-1] != w.shape[0]:
        raise ValueError(f"point dimension {x.shape} incompatible with weight {w.shape}")
    out = x @ w
    return float(out) if x.ndim == 1 else out


def decision_layered(net: ConvLinearNet, x) -> float:
    """Layer-by-layer adjoint evaluation of the same decision value.

    Uses <w_L . (... . w_1), x> == <w_1, flip(w_2) . (... (flip(w_L) . x))>
    and exists to cross-check `decision` against the layered structure.
    """
    x = np.asarray(x, dtype=np.float64)
    acc = x
    for layer in reversed(net.layers[1:]):
        acc = fourier.circular_convolve(fourier.flip(layer), acc)
    return float(net.layers[0] @ acc)


def attackable_weight(model: Model, ds: Dataset) -> np.ndarray:
    """The weight coordinates an attack may act on (bias column dropped)."""
    w = weight_vector(model)
    if w.shape[0] != ds.ambient_dim:
        raise ValueError(
            f"model dim {w.shape[0]} incompatible with dataset ambient dim {ds.ambient_dim}"
        )
    return w[:-1] if ds.augmented else w


def margin(model: Model, ds: Dataset, attack_norm: NormKind) -> float:
    """Smallest attack-normalized score: min_i y_i (w . x_i) / ||w||_dual.

    The denominator is the dual norm of the attackable weight coordinates,
    so the value is exactly the largest perturbation budget (in the attack
    norm) that cannot flip any training point.

    Raises
    ------
    UndefinedMarginError
        If the attackable weight is identically zero.
    """
    w = weight_vector(model)
    raw = float(np.min(ds.y * (ds.X @ w)))
    denom = norm(attackable_weight(model, ds), dual(attack_norm))
    if denom == 0.0:
        raise UndefinedMarginError(
            "margin undefined: attackable weight coordinates are all zero"
        )
    return raw / denom


def conv_gradients(net: ConvLinearNet, ds: Dataset, loss: str = "exponential") -> list:
    """Exact per-layer gradients of the empirical risk.

    The risk gradient with respect to the effective weight is pulled back
    through each layer by the convolution adjoint (circular correlation):
    grad_l = flip(conv of all other layers) . grad_eff.
    """
    losses.check_loss(loss)
    if ds.ambient_dim != net.dim:
        raise ValueError("conv nets require non-augmented data of matching dimension")
    w_eff = effective_weight(net)
    m = ds.y * (ds.X @ w_eff)
    coefs = losses.loss_derivative(m, loss)
    g_eff = ds.X.T @ (coefs * ds.y) / ds.n
    grads = []
    for i in range(net.depth):
        rest = [l for j, l in enumerate(net.layers) if j != i]
        others = reduce(fourier.circular_convolve, rest)
        grads.append(fourier.circular_convolve(fourier.flip(others), g_eff))
    return grads


def _model_checksum(arrays) -> str:
    h = hashlib.sha256()
    for arr in arrays:
        h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
    return h.hexdigest()


def save_model(model: Model, path) -> None:
    """Write a model to a self-describing .npz container (kind tag, version)."""
    if isinstance(model, LinearModel):
        np.savez(
            path,
            version=np.int64(MODEL_FORMAT_VERSION),
            kind=np.str_("linear"),
            d=np.int64(model.dim),
            w=model.w,
            checksum=np.str_(_model_checksum([model.w])),
        )
    else:
        stacked = np.stack(model.layers)
        np.savez(
            path,
            version=np.int64(MODEL_FORMAT_VERSION),
            kind=np.str_("conv"),
            d=np.int64(model.dim),
            L=np.int64(model.depth),
            layers=stacked,
            checksum=np.str_(_model_checksum([stacked])),
        )


def load_model(path) -> Model:
    """Read a model container, verifying version, kind, and checksum."""
    try:
        with np.load(path, allow_pickle=False) as payload:
            fields = {name: payload[name] for name in payload.files}
    except (OSError, ValueError, zipfile.BadZipFile, KeyError) as exc:
        raise ModelFormatError(f"unreadable model file {path}: {exc}") from exc
    if int(fields.get("version", -1)) != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"model file {path} has an unsupported version")
    kind = str(fields.get("kind", ""))
    if kind == "linear":
        if str(fields["checksum"]) != _model_checksum([fields["w"]]):
            raise ModelFormatError(f"model file {path} failed its checksum")
        return LinearModel(w=fields["w"])
    if kind == "conv":
        if str(fields["checksum"]) != _model_checksum([fields["layers"]]):
            raise ModelFormatError(f"model file {path} failed its checksum")
        return ConvLinearNet(layers=tuple(fields["layers"]))
    raise ModelFormatError(f"model file {path} has unknown kind {kind!r}")
