"""SNR-calibrated complex AWGN injection.

Each sample's amplitude ``sqrt(rcs) * exp(j theta)`` gets circular complex
Gaussian noise whose total variance is the noise power implied by the
requested SNR relative to the signature's own average power.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .signatures import RcsSignature


@dataclass(frozen=True)
class NoiseSpec:
    snr_db: float
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.snr_db):
            raise ValidationError(f"snr_db must be finite, got {self.snr_db}")


def signal_power(sig: RcsSignature | np.ndarray) -> float:
    rcs = sig.rcs_m2 if isinstance(sig, RcsSignature) else np.asarray(sig, dtype=float)
    if rcs.size == 0:
        raise ValidationError("cannot compute the power of an empty signature")
    return float(np.mean(rcs))


def noise_power(sig: RcsSignature | np.ndarray | float, snr_db: float) -> float:
    """Noise variance ``P * 10**(-snr/10)``; ``sig`` may also be the power itself."""
    p = float(sig) if np.isscalar(sig) else signal_power(sig)
    return p * 10.0 ** (-snr_db / 10.0)


def complex_noise(rng: np.random.Generator, n: int, variance: float) -> np.ndarray:
    scale = np.sqrt(variance / 2.0)
    return rng.normal(0.0, scale, n) + 1j * rng.normal(0.0, scale, n)


def noisy_rcs(rcs_m2: np.ndarray, snr_db: float, rng: np.random.Generator, power: float | None = None) -> np.ndarray:
    rcs = np.asarray(rcs_m2, dtype=float)
    p = signal_power(rcs) if power is None else power
    theta = rng.uniform(0.0, 2.0 * np.pi, rcs.size)
    amp = np.sqrt(rcs) * np.exp(1j * theta)
    return np.abs(amp + complex_noise(rng, rcs.size, noise_power(p, snr_db))) ** 2


def add_noise(sig: RcsSignature, spec: NoiseSpec, power: float | None = None) -> RcsSignature:
    """Return a noisy copy of ``sig``.

    ``power`` overrides the reference power (defaults to the signature's own
    mean RCS), so a windowed signature can be noised at full-azimuth SNR.
    """
    rng = np.random.default_rng(spec.seed)
    return sig.with_rcs(noisy_rcs(sig.rcs_m2, spec.snr_db, rng, power))
