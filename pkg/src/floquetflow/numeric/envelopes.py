"""Closed-form envelope functions with analytic derivatives of any order."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import hermite_e, polynomial

__all__ = ["Envelope", "Constant", "Polynomial", "Sine", "Gaussian", "envelope_from_spec"]


class Envelope:
    kind = "envelope"

    def __call__(self, t, k: int = 0):
        raise NotImplementedError

    def spec(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(Envelope):
    value: float
    kind = "constant"

    def __call__(self, t, k: int = 0):
        t = np.asarray(t, dtype=float)
        return np.full(t.shape, float(self.value) if k == 0 else 0.0)

    def spec(self):
        return {"type": "constant", "value": self.value}


@dataclass(frozen=True)
class Polynomial(Envelope):
    """``sum_i coeffs[i] * t**i``."""

    coeffs: tuple
    kind = "polynomial"

    def __call__(self, t, k: int = 0):
        c = np.array(self.coeffs, dtype=float)
        c = polynomial.polyder(c, k) if k else c
        return polynomial.polyval(np.asarray(t, dtype=float), c)

    def spec(self):
        return {"type": "polynomial", "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class Sine(Envelope):
    """``offset + amplitude * sin(frequency * t + phase)``."""

    amplitude: float
    frequency: float
    phase: float = 0.0
    offset: float = 0.0
    kind = "sine"

    def __call__(self, t, k: int = 0):
        t = np.asarray(t, dtype=float)
        val = self.amplitude * self.frequency**k * np.sin(self.frequency * t + self.phase + k * math.pi / 2)
        return val + (self.offset if k == 0 else 0.0)

    def spec(self):
        return {"type": "sine", "amplitude": self.amplitude, "frequency": self.frequency,
                "phase": self.phase, "offset": self.offset}


@dataclass(frozen=True)
class Gaussian(Envelope):
    """``amplitude * exp(-(t - center)**2 / (2 width**2))``."""

    amplitude: float
    center: float
    width: float
    kind = "gaussian"

    def __call__(self, t, k: int = 0):
        x = (np.asarray(t, dtype=float) - self.center) / self.width
        he = hermite_e.hermeval(x, [0] * k + [1])
        return self.amplitude * (-1) ** k * he * np.exp(-0.5 * x * x) / self.width**k

    def spec(self):
        return {"type": "gaussian", "amplitude": self.amplitude, "center": self.center, "width": self.width}


def envelope_from_spec(spec) -> Envelope:
    if isinstance(spec, (int, float)):
        return Constant(float(spec))
    kind = spec.get("type")
    if kind == "constant":
        return Constant(float(spec["value"]))
    if kind == "polynomial":
        return Polynomial(tuple(float(c) for c in spec["coeffs"]))
    if kind == "sine":
        return Sine(float(spec["amplitude"]), float(spec["frequency"]), float(spec.get("phase", 0.0)),
                    float(spec.get("offset", 0.0)))
    if kind == "gaussian":
        return Gaussian(float(spec["amplitude"]), float(spec["center"]), float(spec["width"]))
    raise ValueError(f"unknown envelope type {kind!r}")
