"""External potentials with analytic gradients and short-range decay data."""

from __future__ import annotations

import numpy as np


class Potential:
    """Base class: evaluable V(x) and grad V(x), plus decay parameters.

    ``rho`` and ``amplitude`` describe the decay condition
    <x>^rho * (|V| + <x>|grad V|) <= C, with <x> = (1 + |x|^2)^(1/2); the
    constant actually observed on radial probes is recorded as
    ``condition_constant`` at construction.
    """

    family = "abstract"
    rho: float
    amplitude: float

    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    def _measure_condition_constant(self, probe_radius=100.0, samples=256):
        r = np.concatenate(([0.0], np.geomspace(1e-3, probe_radius, samples - 1)))
        x = r[:, None]  # radial probe along the first axis suffices for radial families
        w = np.sqrt(1.0 + r**2)
        vals = np.abs(self.value(x)) + w * np.sqrt(np.sum(self.gradient(x) ** 2, axis=-1))
        return float(np.max(w**self.rho * vals))


class ZeroPotential(Potential):
    """V = 0; the flow reduces to the free one and drift is the identity."""

    family = "zero"

    def __init__(self):
        self.rho = np.inf
        self.amplitude = 0.0
        self.condition_constant = 0.0

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1]) if x.ndim else 0.0

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros_like(np.atleast_1d(x))


class InversePowerPotential(Potential):
    """V(x) = c * <x>^{-rho}, grad V = -c * rho * x * <x>^{-rho-2}.

    Short range for rho > 0 (condition constant <= |c| * (1 + rho)).
    """

    family = "inverse_power"

    def __init__(self, c: float, rho: float):
        if not rho >= -1.0:
            raise ValueError(f"rho must be >= -1, got {rho}")
        self.amplitude = float(c)
        self.rho = float(rho)
        self.condition_constant = self._measure_condition_constant()

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            return self.amplitude * (1.0 + x * x) ** (-0.5 * self.rho)
        bracket2 = 1.0 + np.sum(x * x, axis=-1)
        return self.amplitude * bracket2 ** (-0.5 * self.rho)

    def gradient(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        bracket2 = 1.0 + np.sum(x * x, axis=-1, keepdims=True)
        return -self.amplitude * self.rho * x * bracket2 ** (-0.5 * self.rho - 1.0)


def make_potential(family: str, c: float = 0.0, rho: float = 2.0) -> Potential:
    """Build a potential from its family tag (used by the experiment runner)."""
    if family == "zero":
        return ZeroPotential()
    if family == "inverse_power":
        return InversePowerPotential(c, rho)
    raise ValueError(f"unknown potential family {family!r}")
