"""Continuous wavelet transform scalograms and their conversion to network-ready images.

The analytic Morlet wavelet is applied in the frequency domain. Its transfer
function at scale ``s`` is ``2 exp(-(s w - w0)^2 / 2)`` for ``w > 0``, so a
unit-amplitude sinusoid of angular frequency ``w`` peaks with magnitude one
at ``s = w0 / w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError

MORLET_W0 = 6.0
JET_LEVELS = 128
IMAGE_SIZES = (227, 224)


@dataclass(frozen=True, eq=False)
class Scalogram:
    magnitudes: np.ndarray  # (num_scales, n), rows by increasing scale
    scales: np.ndarray
    positions: np.ndarray

    @property
    def shape(self):
        return self.magnitudes.shape


def cwt_scales(n: int, num_scales: int) -> np.ndarray:
    return np.geomspace(2.0, n / 4.0, num_scales)


def morlet_transfer(scaled_freq, w0=MORLET_W0):
    return np.where(scaled_freq > 0, 2.0 * np.exp(-0.5 * (scaled_freq - w0) ** 2), 0.0)


def cwt_transform(signal, num_scales: int = 64, w0: float = MORLET_W0) -> Scalogram:
    x = np.asarray(signal, dtype=float).ravel()
    n = x.size
    if n < 8:
        raise ValidationError(f"CWT needs at least 8 samples, got {n}")
    if num_scales < 4:
        raise ValidationError(f"num_scales must be >= 4, got {num_scales}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("signal must be finite")
    scales = cwt_scales(n, num_scales)
    padded = np.pad(x, n, mode="reflect") if n > 1 else x
    X = np.fft.fft(padded)
    w = 2.0 * np.pi * np.fft.fftfreq(padded.size)
    coeffs = np.fft.ifft(X[None, :] * morlet_transfer(scales[:, None] * w[None, :], w0), axis=1)
    mags = np.abs(coeffs[:, n:2 * n])
    return Scalogram(mags, scales, np.arange(n))


def peak_scale_for_period(period_samples: float, w0: float = MORLET_W0) -> float:
    return w0 * period_samples / (2.0 * math.pi)


def jet_colormap(m: int = JET_LEVELS) -> np.ndarray:
    """MATLAB-compatible ``jet(m)`` table, shape (m, 3), values in [0, 1]."""
    n = math.ceil(m / 4)
    u = np.concatenate([np.arange(1, n + 1) / n, np.ones(n - 1), np.arange(n, 0, -1) / n])
    g = math.ceil(n / 2) - (m % 4 == 1) + np.arange(1, u.size + 1)
    r = g + n
    b = g - n
    g, r, b = g[g <= m], r[r <= m], b[b >= 1]
    J = np.zeros((m, 3))
    J[r - 1, 0] = u[: r.size]
    J[g - 1, 1] = u[: g.size]
    J[b - 1, 2] = u[u.size - b.size:]
    return J


def rescale_indices(mags, levels: int = JET_LEVELS) -> tuple[np.ndarray, bool]:
    """Min-max map onto integer colormap indices ``0..levels-1``.

    Returns ``(indices, degenerate)``; an all-equal input maps to the middle level.
    """
    m = np.asarray(mags, dtype=float)
    lo, hi = float(m.min()), float(m.max())
    if not hi > lo:
        return np.full(m.shape, levels // 2, dtype=np.int64), True
    return np.rint((m - lo) / (hi - lo) * (levels - 1)).astype(np.int64), False


def _resize_axis(img, out_len, axis):
    in_len = img.shape[axis]
    pos = (np.arange(out_len) + 0.5) * in_len / out_len - 0.5
    pos = np.clip(pos, 0.0, in_len - 1)
    i0 = np.floor(pos).astype(np.int64)
    i1 = np.minimum(i0 + 1, in_len - 1)
    t = pos - i0
    a = np.take(img, i0, axis=axis)
    b = np.take(img, i1, axis=axis)
    shape = [1] * img.ndim
    shape[axis] = out_len
    t = t.reshape(shape)
    return a * (1.0 - t) + b * t


def resize_bilinear(img, out_h: int, out_w: int) -> np.ndarray:
    return _resize_axis(_resize_axis(np.asarray(img, dtype=float), out_h, 0), out_w, 1)


@dataclass(frozen=True, eq=False)
class ProcessedImage:
    pixels: np.ndarray  # uint8, (size, size, 3)
    degenerate: bool


def process_scalogram(s: Scalogram | np.ndarray, out_size: int = 227, levels: int = JET_LEVELS) -> ProcessedImage:
    """Jet-colour the min-max rescaled magnitudes and resize to ``out_size`` square RGB."""
    if out_size not in IMAGE_SIZES:
        raise ValidationError(f"out_size must be one of {IMAGE_SIZES}, got {out_size}")
    mags = s.magnitudes if isinstance(s, Scalogram) else np.asarray(s, dtype=float)
    idx, degenerate = rescale_indices(mags, levels)
    rgb = jet_colormap(levels)[idx]
    out = resize_bilinear(rgb, out_size, out_size)
    return ProcessedImage(np.clip(np.rint(out * 255.0), 0, 255).astype(np.uint8), degenerate)


def save_png(image: ProcessedImage, path) -> None:
    from PIL import Image

    Image.fromarray(image.pixels, mode="RGB").save(Path(path), format="PNG")


def save_magnitude_csv(s: Scalogram, path) -> None:
    np.savetxt(path, s.magnitudes, delimiter=",", fmt="%.10e")
