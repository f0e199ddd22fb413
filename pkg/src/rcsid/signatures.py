"""RCS signature data model, scattering-center synthesis and CSV I/O.

Signatures are stored on a linear m^2 scale. dBsm only appears at the file
boundary (``load_csv`` / ``save_csv``) and in reports.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptySegmentError, InvalidModelError, NumericError, ParseError, ValidationError

SPEED_OF_LIGHT = 2.99792458e8
POLARIZATIONS = ("VV", "HH")
CSV_HEADER = ("target_id", "frequency_ghz", "polarization", "angle_deg", "rcs_dbsm")
DBSM_FLOOR = -300.0


def to_dbsm(rcs_m2):
    """Linear m^2 -> dBsm. Zeros map to a finite floor instead of -inf."""
    rcs = np.asarray(rcs_m2, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(rcs)
    return np.maximum(out, DBSM_FLOOR)


def from_dbsm(rcs_dbsm):
    return np.power(10.0, np.asarray(rcs_dbsm, dtype=float) / 10.0)


def default_angles(step_deg: float = 2.0) -> np.ndarray:
    """Full azimuth turntable grid, 0 to 360 exclusive."""
    return np.arange(0.0, 360.0, step_deg)


@dataclass(frozen=True, eq=False)
class RcsSignature:
    """RCS of one target versus azimuth at a fixed frequency and polarization."""

    target_id: str
    frequency_ghz: float
    polarization: str
    angles_deg: np.ndarray
    rcs_m2: np.ndarray

    def __post_init__(self):
        angles = np.array(self.angles_deg, dtype=float)
        rcs = np.array(self.rcs_m2, dtype=float)
        angles.setflags(write=False)
        rcs.setflags(write=False)
        object.__setattr__(self, "angles_deg", angles)
        object.__setattr__(self, "rcs_m2", rcs)
        if self.polarization not in POLARIZATIONS:
            raise ValidationError(f"polarization must be one of {POLARIZATIONS}, got {self.polarization!r}")
        if angles.ndim != 1 or rcs.shape != angles.shape:
            raise ValidationError("angles_deg and rcs_m2 must be 1-D arrays of equal length")
        if angles.size == 0:
            raise ValidationError("signature has no samples")
        if np.any(angles < 0) or np.any(angles >= 360) or not np.all(np.isfinite(angles)):
            raise ValidationError("azimuth angles must lie in [0, 360)")
        if np.any(np.diff(angles) <= 0):
            raise ValidationError(f"azimuth angles of {self.target_id!r} are not strictly increasing")
        if not np.all(np.isfinite(rcs)) or np.any(rcs < 0):
            raise ValidationError(f"RCS of {self.target_id!r} must be finite and non-negative")

    def __len__(self):
        return self.rcs_m2.size

    def __eq__(self, other):
        if not isinstance(other, RcsSignature):
            return NotImplemented
        return (
            self.target_id == other.target_id
            and self.frequency_ghz == other.frequency_ghz
            and self.polarization == other.polarization
            and np.array_equal(self.angles_deg, other.angles_deg)
            and np.array_equal(self.rcs_m2, other.rcs_m2)
        )

    __hash__ = None

    @property
    def rcs_dbsm(self) -> np.ndarray:
        return to_dbsm(self.rcs_m2)

    def with_rcs(self, rcs_m2) -> "RcsSignature":
        return replace(self, rcs_m2=np.asarray(rcs_m2, dtype=float))


@dataclass(frozen=True)
class ScatteringCenter:
    """A point scatterer on the target body.

    ``range_m`` is the radial distance to the radar. ``lever_m`` is the
    distance of the center from the turntable axis; rotating the body by
    ``phi`` changes the radar range by ``lever_m * cos(phi - angle_offset_deg)``.
    A center only contributes when the look angle is within
    ``visibility_deg`` of its offset (180 means always visible).
    """

    sigma_m2: float
    range_m: float
    angle_offset_deg: float = 0.0
    lever_m: float = 0.0
    visibility_deg: float = 180.0


@dataclass(frozen=True)
class ScatteringCenterModel:
    centers: tuple[ScatteringCenter, ...]
    frequency_ghz: float = 15.0
    polarization: str = "VV"
    # std of a random per-center phase offset drawn from the synthesis seed
    phase_noise_rad: float = 0.0
    speed_of_light: float = SPEED_OF_LIGHT

    @property
    def wavelength_m(self) -> float:
        return self.speed_of_light / (self.frequency_ghz * 1e9)

    def validate(self):
        if len(self.centers) == 0:
            raise InvalidModelError("scattering-center model has no centers")
        for c in self.centers:
            if not c.sigma_m2 > 0:
                raise InvalidModelError(f"center RCS must be positive, got {c.sigma_m2}")
            if not c.range_m > 0:
                raise InvalidModelError(f"center range must be positive, got {c.range_m}")
            if c.lever_m < 0 or not 0 < c.visibility_deg <= 180:
                raise InvalidModelError("lever_m must be >= 0 and visibility_deg in (0, 180]")
        if not self.frequency_ghz > 0:
            raise InvalidModelError("frequency must be positive")


def circular_distance(a_deg, b_deg):
    d = np.abs((np.asarray(a_deg, dtype=float) - b_deg) % 360.0)
    return np.minimum(d, 360.0 - d)


def synthesize_signature(
    model: ScatteringCenterModel,
    angles: Sequence[float] | None = None,
    seed: int = 0,
    target_id: str = "target",
) -> RcsSignature:
    """Coherent sum of scattering-center returns at each azimuth angle.

    Returns ``|sum_i sqrt(sigma_i) exp(j 4 pi R_i(phi) / lambda)|^2`` with
    ``R_i(phi) = range_i + lever_i cos(phi - offset_i)``.
    """
    model.validate()
    phi = default_angles() if angles is None else np.asarray(angles, dtype=float)
    if phi.size == 0:
        raise ValidationError("no azimuth angles given")
    rng = np.random.default_rng(seed)

    sigma = np.array([c.sigma_m2 for c in model.centers])
    rng_m = np.array([c.range_m for c in model.centers])
    offset = np.array([c.angle_offset_deg for c in model.centers])
    lever = np.array([c.lever_m for c in model.centers])
    vis = np.array([c.visibility_deg for c in model.centers])
    jitter = rng.normal(0.0, model.phase_noise_rad, size=sigma.size) if model.phase_noise_rad > 0 else 0.0

    rel = phi[:, None] - offset[None, :]
    r = rng_m[None, :] + lever[None, :] * np.cos(np.deg2rad(rel))
    visible = circular_distance(phi[:, None], offset[None, :]) <= vis[None, :]
    phase = 4.0 * np.pi * r / model.wavelength_m + jitter
    field_ = np.sum(np.where(visible, np.sqrt(sigma) * np.exp(1j * phase), 0.0), axis=1)
    rcs = np.abs(field_) ** 2
    if not np.all(np.isfinite(rcs)):
        raise NumericError("non-finite RCS produced by synthesis")
    return RcsSignature(target_id, model.frequency_ghz, model.polarization, phi, rcs)


def restrict_azimuth(sig: RcsSignature, center_deg: float, half_width_deg: float) -> RcsSignature:
    """Keep samples within ``half_width_deg`` of ``center_deg`` (circularly)."""
    if not 0 < half_width_deg <= 180:
        raise ValidationError(f"half_width_deg must be in (0, 180], got {half_width_deg}")
    # small slack so grid points exactly on the window edge survive rounding
    keep = circular_distance(sig.angles_deg, center_deg) <= half_width_deg + 1e-9
    if not np.any(keep):
        raise EmptySegmentError(f"no samples of {sig.target_id!r} within {half_width_deg} deg of {center_deg}")
    return replace(sig, angles_deg=sig.angles_deg[keep], rcs_m2=sig.rcs_m2[keep])


@dataclass(frozen=True)
class Dataset:
    signatures: tuple[RcsSignature, ...]
    class_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        sigs = tuple(self.signatures)
        object.__setattr__(self, "signatures", sigs)
        names = tuple(self.class_names) or tuple(dict.fromkeys(s.target_id for s in sigs))
        object.__setattr__(self, "class_names", names)
        if len(set(names)) != len(names):
            raise ValidationError("class_names must be unique")
        if len(names) < 2:
            raise ValidationError(f"a dataset needs at least 2 classes, got {len(names)}")
        unknown = {s.target_id for s in sigs} - set(names)
        if unknown:
            raise ValidationError(f"signatures reference unknown classes: {sorted(unknown)}")

    def by_class(self, name: str) -> list[RcsSignature]:
        return [s for s in self.signatures if s.target_id == name]

    def pooled(self, name: str) -> np.ndarray:
        parts = [s.rcs_m2 for s in self.by_class(name)]
        return np.concatenate(parts) if parts else np.empty(0)


def save_csv(dataset: Dataset | Iterable[RcsSignature], path) -> None:
    sigs = dataset.signatures if isinstance(dataset, Dataset) else tuple(dataset)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for s in sigs:
            for a, v in zip(s.angles_deg, s.rcs_dbsm):
                w.writerow([s.target_id, f"{s.frequency_ghz:.6f}", s.polarization, f"{a:.6f}", f"{v:.6f}"])


def read_signatures(path) -> list[RcsSignature]:
    """Parse a signature CSV; one signature per (target, frequency, polarization)."""
    groups: dict[tuple, list[tuple[int, float, float]]] = {}
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise ParseError(f"{path}:1: expected header {','.join(CSV_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(CSV_HEADER):
                raise ParseError(f"{path}:{lineno}: expected {len(CSV_HEADER)} fields, got {len(row)}")
            tid, freq, pol, ang, val = (c.strip() for c in row)
            try:
                freq_f, ang_f, val_f = float(freq), float(ang), float(val)
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            if pol not in POLARIZATIONS:
                raise ParseError(f"{path}:{lineno}: unknown polarization {pol!r}")
            if not tid:
                raise ParseError(f"{path}:{lineno}: empty target_id")
            groups.setdefault((tid, freq_f, pol), []).append((lineno, ang_f, val_f))

    sigs = []
    for (tid, freq, pol), rows in groups.items():
        angles = np.array([r[1] for r in rows])
        bad = np.flatnonzero(np.diff(angles) <= 0)
        if bad.size:
            raise ValidationError(f"{path}:{rows[bad[0] + 1][0]}: angles of {tid!r} are not strictly increasing")
        sigs.append(RcsSignature(tid, freq, pol, angles, from_dbsm([r[2] for r in rows])))
    return sigs


def load_csv(path) -> Dataset:
    return Dataset(tuple(read_signatures(path)))
