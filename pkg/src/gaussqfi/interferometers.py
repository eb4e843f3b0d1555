"""Mach-Zehnder, Yurke and Mandel interferometers with seeding and loss."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from . import gaussian as g
from .circuit import Circuit, Loss, PhaseShift, TraceOut

FAMILIES = ("mzi", "yurke", "mandel")


class InfeasibleDose(ValueError):
    """Requested first squeezing puts more photons on the sample than the dose allows."""

    def __init__(self, n_phi: float, r1: float):
        self.n_phi = n_phi
        self.r1 = r1
        self.r1_max = r1_max(n_phi)
        super().__init__(
            f"r1={r1:.12g} exceeds the feasible bound r1_max=arcsinh(sqrt({n_phi:.12g}))={self.r1_max:.12g}"
        )


@dataclass(frozen=True)
class ScenarioConfig:
    """One interferometer setting.

    Seeds ``alpha``/``beta`` enter modes a/b, ``gamma`` enters Mandel's mode c.
    When ``n_phi`` is set, the seeding is not taken from ``alpha``/``beta``:
    mode a alone is seeded with whatever coherent amplitude fills the dose
    (see :meth:`resolved`).
    """

    family: str = "yurke"
    alpha: complex = 0.0
    beta: complex = 0.0
    gamma: complex = 0.0
    r1: float = 0.0
    r2: float = 0.0
    theta: float = 0.0
    T: float = 1.0
    eta: float = 1.0
    discard_a: bool = False
    phi: float = 0.0
    n_phi: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.r1 < 0 or self.r2 < 0:
            raise ValueError("squeezing magnitudes must be non-negative")
        for name in ("T", "eta"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {val}")
        if self.family != "mandel":
            if self.gamma != 0:
                raise ValueError("gamma seeds mode c, which only the Mandel interferometer has")
            if self.discard_a:
                raise ValueError("discard_a only applies to the Mandel interferometer")
        if self.n_phi is not None and self.n_phi < 0:
            raise ValueError("n_phi must be non-negative")

    def replace(self, **changes) -> ScenarioConfig:
        return replace(self, **changes)

    def resolved(self) -> ScenarioConfig:
        """Concrete seeding: if a dose target is set, seed mode a to meet it."""
        if self.n_phi is None:
            return self
        if self.family == "mzi":
            alpha = math.sqrt(2.0 * self.n_phi)
        else:
            alpha = seed_for_target(self.n_phi, self.r1)
        return replace(self, alpha=alpha, beta=0.0, n_phi=None)


def r1_max(n_phi: float) -> float:
    return math.asinh(math.sqrt(n_phi))


def seed_for_target(n_phi_target: float, r1: float) -> float:
    """Real amplitude for mode a alone that brings the sample dose to ``n_phi_target``."""
    sh2 = math.sinh(r1) ** 2
    if sh2 > n_phi_target * (1 + 1e-12) + 1e-15:
        raise InfeasibleDose(n_phi_target, r1)
    return math.sqrt(max(n_phi_target - sh2, 0.0) / math.cosh(r1) ** 2)


def n_phi(config: ScenarioConfig) -> float:
    """Mean photon number passing through the phase shift."""
    if config.n_phi is not None:
        config = config.resolved()
    a, b = complex(config.alpha), complex(config.beta)
    if config.family == "mzi":
        return abs(a + b) ** 2 / 2.0
    ch, sh = math.cosh(config.r1), math.sinh(config.r1)
    return ch**2 * abs(a) ** 2 + sh**2 * (abs(b) ** 2 + 1.0) - 2.0 * ch * sh * (a * b).real


def build(config: ScenarioConfig) -> Circuit:
    """Circuit for the configured interferometer; mode order is (a, b[, c])."""
    c = config.resolved()
    T, eta = c.T, c.eta
    if c.family == "mzi":
        steps = [
            g.make_beam_splitter(0.5, (0, 1)),
            PhaseShift(0),
            Loss(0, T),
            Loss(1, T),
            g.make_beam_splitter(0.5, (0, 1)),
            Loss(0, eta),
            Loss(1, eta),
        ]
        return Circuit(2, (c.alpha, c.beta), tuple(steps))
    if c.family == "yurke":
        steps = [
            g.make_tms(c.r1, 0.0, (0, 1)),
            PhaseShift(0),
            Loss(0, T),
            Loss(1, T),
            g.make_tms(c.r2, c.theta, (0, 1)),
            Loss(0, eta),
            Loss(1, eta),
        ]
        return Circuit(2, (c.alpha, c.beta), tuple(steps))
    steps = [
        g.make_tms(c.r1, 0.0, (0, 1)),
        PhaseShift(0),
        Loss(0, T),
        Loss(1, T),
        g.make_tms(c.r2, c.theta, (0, 2)),
        g.make_beam_splitter(0.5, (1, 2)),
    ]
    if c.discard_a:
        steps += [TraceOut((0,)), Loss(0, eta), Loss(1, eta)]
    else:
        steps += [Loss(0, eta), Loss(1, eta), Loss(2, eta)]
    return Circuit(3, (c.alpha, c.beta, c.gamma), tuple(steps))


def output_state(config: ScenarioConfig, phi: float | None = None) -> g.GaussianState:
    return build(config).run(config.phi if phi is None else phi)


def mzi_reference(n_phi_value: float, T: float = 1.0, eta: float = 1.0) -> float:
    """QFI of the coherent-seeded MZI at the same dose."""
    return 4.0 * T * eta * n_phi_value


def snl_reference(n_phi_value: float) -> float:
    return 4.0 * n_phi_value
