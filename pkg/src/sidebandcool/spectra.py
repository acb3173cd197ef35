"""Synthetic output noise spectra around the up-converted sideband.

A spectrum is a flat floor plus a signed Lorentzian: positive area is an
ordinary thermal peak, negative area the inverted (squashed) dip produced
when cavity noise and the motion it drives interfere.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, UnphysicalModel

DEFAULT_BINS = 2001
DEFAULT_SPAN_WIDTHS = 20.0
_UNIFORM_RTOL = 1e-9


@dataclass(frozen=True)
class SpectrumModel:
    """``area`` is signed power; ``width`` the full linewidth in 1/s."""

    floor: float
    area: float
    center: float
    width: float

    def __post_init__(self):
        if not self.floor > 0:
            raise InvalidArgument("SpectrumModel.floor must be > 0")
        if not self.width > 0:
            raise InvalidArgument("SpectrumModel.width must be > 0")

    @property
    def extremum(self) -> float:
        """Value at line center."""
        return self.floor + self.area * 2.0 / (math.pi * self.width)

    def as_array(self) -> np.ndarray:
        return np.array([self.floor, self.area, self.center, self.width])

    def to_dict(self) -> dict:
        return {"floor": self.floor, "area": self.area, "center": self.center, "width": self.width}


@dataclass(frozen=True)
class PsdTrace:
    """PSD samples on a uniform angular-frequency grid.

    ``values`` are averages of ``n_avg`` periodograms; ``seed`` records the
    generator seed when the trace is synthetic and noisy.
    """

    freqs: np.ndarray
    values: np.ndarray
    n_avg: int = 1
    seed: int | None = None

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "values", values)
        if freqs.ndim != 1 or freqs.shape != values.shape:
            raise InvalidArgument("freqs and values must be 1-D arrays of equal length")
        if freqs.size < 2:
            raise InvalidArgument("trace needs at least two bins")
        steps = np.diff(freqs)
        if np.any(steps <= 0):
            raise InvalidArgument("frequency grid must be strictly increasing")
        # absolute slack covers rounding of large offsets (GHz carriers, kHz bins)
        slack = 16 * np.finfo(float).eps * float(np.max(np.abs(freqs)))
        if not np.allclose(steps, steps.mean(), rtol=_UNIFORM_RTOL, atol=slack):
            raise InvalidArgument("frequency grid must be uniform")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise InvalidArgument("PSD values must be finite and >= 0")
        if int(self.n_avg) != self.n_avg or self.n_avg < 1:
            raise InvalidArgument("n_avg must be a positive integer")
        object.__setattr__(self, "n_avg", int(self.n_avg))

    def __eq__(self, other):
        if not isinstance(other, PsdTrace):
            return NotImplemented
        return (np.array_equal(self.freqs, other.freqs) and np.array_equal(self.values, other.values)
                and self.n_avg == other.n_avg and self.seed == other.seed)

    @property
    def step(self) -> float:
        return float(self.freqs[1] - self.freqs[0])

    # serialization -------------------------------------------------------

    def to_csv(self) -> str:
        """CSV with header ``freq_hz,psd,navg``; frequencies in Hz."""
        buf = io.StringIO()
        buf.write("freq_hz,psd,navg\n")
        for f, v in zip(self.freqs / (2.0 * math.pi), self.values):
            buf.write(f"{float(f)!r},{float(v)!r},{self.n_avg}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PsdTrace":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["freq_hz", "psd", "navg"]:
            raise InvalidArgument("expected CSV header freq_hz,psd,navg")
        body = [r for r in rows[1:] if r]
        if not body:
            raise InvalidArgument("CSV trace has no rows")
        navgs = {int(r[2]) for r in body}
        if len(navgs) != 1:
            raise InvalidArgument("navg column must be constant")
        freqs = np.array([float(r[0]) for r in body]) * (2.0 * math.pi)
        values = np.array([float(r[1]) for r in body])
        return cls(freqs, values, navgs.pop())

    def to_json(self) -> str:
        return json.dumps({
            "freqs_hz": [float(f) for f in self.freqs / (2.0 * math.pi)],
            "values": [float(v) for v in self.values],
            "n_avg": self.n_avg,
            "seed": self.seed,
        })

    @classmethod
    def from_json(cls, text: str) -> "PsdTrace":
        d = json.loads(text)
        return cls(np.asarray(d["freqs_hz"], dtype=float) * (2.0 * math.pi),
                   np.asarray(d["values"], dtype=float), d["n_avg"], d.get("seed"))


def lorentzian_density(omega, center, width):
    """Unit-area Lorentzian with full width ``width``; peak 2/(pi*width)."""
    if not width > 0:
        raise InvalidArgument("width must be > 0")
    d = np.asarray(omega, dtype=float) - center
    return (width / (2.0 * math.pi)) / (d * d + 0.25 * width * width)


def sideband_grid(center, width, n_bins=DEFAULT_BINS, span_widths=DEFAULT_SPAN_WIDTHS):
    """Uniform grid of ``n_bins`` points over center +/- span_widths*width."""
    half = span_widths * width
    return np.linspace(center - half, center + half, n_bins)


def synthesize_psd(model: SpectrumModel, grid) -> PsdTrace:
    """Noiseless trace floor + area * L(omega)."""
    if model.extremum < 0:
        raise UnphysicalModel(
            f"dip depth {-model.area * 2 / (math.pi * model.width):.6g} exceeds floor {model.floor:.6g}")
    grid = np.asarray(grid, dtype=float)
    values = model.floor + model.area * lorentzian_density(grid, model.center, model.width)
    # rounding can leave a touching dip a hair below zero
    return PsdTrace(grid, np.maximum(values, 0.0), 1)


def signed_area_from_occupancy(n_eff, gamma_opt, cal):
    """Sideband area cal * n_eff * gamma_opt; negative n_eff gives a dip."""
    if gamma_opt < 0:
        raise InvalidArgument("gamma_opt must be >= 0")
    if not cal > 0:
        raise InvalidArgument("cal must be > 0")
    return cal * n_eff * gamma_opt


def occupancy_from_area(area, gamma_opt, cal):
    if not gamma_opt > 0 or not cal > 0:
        raise InvalidArgument("gamma_opt and cal must be > 0")
    return area / (cal * gamma_opt)


def add_measurement_noise(trace: PsdTrace, n_avg: int, seed: int) -> PsdTrace:
    """Replace each bin by a Gamma(n_avg, mean/n_avg) draw.

    This is the distribution of the mean of ``n_avg`` exponential
    periodogram estimates, so values stay non-negative at any ``n_avg``.
    """
    if int(n_avg) != n_avg or n_avg < 1:
        raise InvalidArgument("n_avg must be a positive integer")
    rng = np.random.default_rng(seed)
    values = rng.gamma(shape=float(n_avg), size=trace.values.shape) * (trace.values / n_avg)
    return PsdTrace(trace.freqs.copy(), values, int(n_avg), seed)
