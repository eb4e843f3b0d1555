"""Ordered Gaussian circuits with a single phase-shift placeholder."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import gaussian as g


@dataclass(frozen=True)
class Loss:
    mode: int
    T: float

    def __post_init__(self):
        if not 0.0 <= self.T <= 1.0:
            raise ValueError(f"loss transmission must lie in [0, 1], got {self.T}")


@dataclass(frozen=True)
class PhaseShift:
    """Placeholder for the unknown phase imprinted on ``mode``."""

    mode: int = 0


@dataclass(frozen=True)
class TraceOut:
    modes: tuple[int, ...]


Step = Union[g.SymplecticOp, Loss, PhaseShift, TraceOut]


@dataclass(frozen=True)
class Circuit:
    n_modes: int
    displacements: tuple[complex, ...]
    steps: tuple[Step, ...]

    def __post_init__(self):
        if len(self.displacements) != self.n_modes:
            raise ValueError("one initial displacement per mode is required")
        n_phase = sum(isinstance(s, PhaseShift) for s in self.steps)
        if n_phase != 1:
            raise ValueError(f"circuit needs exactly one phase placeholder, found {n_phase}")
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "displacements", tuple(complex(a) for a in self.displacements))

    @property
    def phase_index(self) -> int:
        return next(i for i, s in enumerate(self.steps) if isinstance(s, PhaseShift))

    @property
    def phase_mode(self) -> int:
        return self.steps[self.phase_index].mode

    @property
    def output_modes(self) -> int:
        n = self.n_modes
        for s in self.steps:
            if isinstance(s, TraceOut):
                n -= len(s.modes)
        return n

    def initial_state(self) -> g.GaussianState:
        return g.coherent_state(self.displacements)

    def run(self, phi: float, stop: int | None = None) -> g.GaussianState:
        """Evolve the initial state through the first ``stop`` steps (all by default)."""
        state = self.initial_state()
        for step in self.steps[:stop]:
            state = apply_step(state, step, phi)
        return state

    def state_at_phase(self) -> g.GaussianState:
        """State arriving at the phase shift."""
        return self.run(0.0, stop=self.phase_index)

    def with_steps(self, steps: Sequence[Step]) -> Circuit:
        return Circuit(self.n_modes, self.displacements, tuple(steps))


def apply_step(state: g.GaussianState, step: Step, phi: float = 0.0) -> g.GaussianState:
    if isinstance(step, g.SymplecticOp):
        return g.apply(state, step)
    if isinstance(step, Loss):
        return g.apply_loss(state, step.mode, step.T)
    if isinstance(step, PhaseShift):
        return g.apply(state, g.make_phase_shift(phi, step.mode))
    if isinstance(step, TraceOut):
        return g.trace_out(state, step.modes)
    raise TypeError(f"unknown circuit step {step!r}")


def propagate_tangent(d: np.ndarray, sigma: np.ndarray, step: Step):
    """Push a derivative pair through a phi-independent step (all steps are linear)."""
    if isinstance(step, g.SymplecticOp):
        F = g.embed(step, d.size // 2)
        return F @ d, F @ sigma @ F.T
    if isinstance(step, Loss):
        return g.through_fictitious_bs(d, sigma, step.mode, step.T, ancilla_var=0.0)
    if isinstance(step, TraceOut):
        keep = g.kept_indices(d.size // 2, step.modes)
        return d[keep], sigma[np.ix_(keep, keep)]
    raise TypeError(f"cannot propagate derivative through {step!r}")
