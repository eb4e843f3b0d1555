"""Photon-number statistics of Gaussian states and the PNRD Fisher information.

Probabilities come from the Taylor coefficients of the Gaussian generating
function ``T exp(z^T A z / 2 + c^T z)`` over ``2k`` variables (the ket and bra
indices of each detected mode), built by a multidimensional Hermite recursion.
A brute-force truncated-Fock simulation is kept as an independent oracle.
"""

from __future__ import annotations

import math
from itertools import combinations
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from . import gaussian as g
from .circuit import Circuit, Loss, PhaseShift, TraceOut
from .interferometers import ScenarioConfig, build

MAX_CUTOFF = 20
MAX_TENSOR = 60_000_000  # complex entries in the 2k-index coefficient tensor
ORACLE_MAX_MODES = 3
ORACLE_MAX_CUTOFF = 8
DROP_BELOW = 1e-12
NEGATIVE_TOL = 1e-12
FLIP_FLOOR = 1e-12  # sign flips below this much information are rounding, not a bad step


@dataclass(frozen=True)
class FockDistribution:
    """Outcome probabilities ``probabilities[n1, ..., nk]`` for ``0 <= ni <= cutoff``.

    Mass outside the box is reported as ``truncation_mass`` and never renormalised.
    ``overflow_mass`` is the probability that the detectors' resolution is
    exceeded: the truncated mass, or for saturating detectors the mass of the
    top ("cutoff or more") bins.
    """

    detected_modes: tuple[int, ...]
    cutoff: int
    probabilities: np.ndarray
    saturated: bool = False
    truncation_mass: float = field(init=False)
    overflow_mass: float = field(init=False)

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        p.flags.writeable = False
        object.__setattr__(self, "probabilities", p)
        lost = float(min(max(1.0 - p.sum(), 0.0), 1.0))
        object.__setattr__(self, "truncation_mass", lost)
        if self.saturated:
            lost = float(max(p.sum() - p[(slice(0, self.cutoff),) * p.ndim].sum(), 0.0))
        object.__setattr__(self, "overflow_mass", lost)

    def __getitem__(self, outcome: Sequence[int]) -> float:
        return float(self.probabilities[tuple(outcome)])

    def as_dict(self) -> dict:
        return {idx: float(v) for idx, v in np.ndenumerate(self.probabilities)}


def _check_cutoff(cutoff: int, limit: int = MAX_CUTOFF) -> None:
    if not 0 <= cutoff <= limit:
        raise ValueError(f"cutoff must lie in [0, {limit}], got {cutoff}")


def generating_function(cstate: g.ComplexGaussianState):
    """``(A, c, T)`` of the generating function of the density matrix elements."""
    n = cstate.n_modes
    eye = np.eye(2 * n)
    Q = 0.5 * (cstate.sigma + eye)
    Q_inv = np.linalg.inv(Q)
    X = np.block([[np.zeros((n, n)), np.eye(n)], [np.eye(n), np.zeros((n, n))]])
    A = X @ (eye - Q_inv)
    beta = cstate.d
    c = X @ Q_inv @ beta
    det = np.linalg.det(Q).real
    if det <= 0:
        raise ValueError("Husimi covariance is not positive definite; sigma is unphysical")
    prefactor = np.exp(-0.5 * (beta.conj() @ Q_inv @ beta).real) / math.sqrt(det)
    return A, c, prefactor


def hermite_tensor(A: np.ndarray, c: np.ndarray, dim: int) -> np.ndarray:
    """Normalised coefficients ``g[nu] = d^nu G(0) / sqrt(nu!)`` for ``nu_i < dim``.

    Axis ``p`` is filled after axes ``0..p-1``; entries with a non-zero index on
    a later axis are not needed at that stage, so each step is one slab update.
    """
    m = A.shape[0]
    if dim**m > MAX_TENSOR:
        raise ValueError(f"coefficient tensor with {dim}^{m} entries exceeds the desk-scale guard")
    G = np.zeros((dim,) * m, dtype=complex)
    G[(0,) * m] = 1.0
    sq = np.sqrt(np.arange(dim))
    for p in range(m):
        # view of the sub-tensor with axes > p pinned at 0
        sub = G[(slice(None),) * (p + 1) + (0,) * (m - p - 1)]
        for k in range(1, dim):
            prev = sub[(slice(None),) * p + (k - 1,)]
            new = c[p] * prev
            for j in range(p):
                shape = [1] * p
                shape[j] = dim
                shifted = np.zeros_like(prev)
                src = [slice(None)] * p
                dst = [slice(None)] * p
                src[j], dst[j] = slice(0, dim - 1), slice(1, dim)
                shifted[tuple(dst)] = prev[tuple(src)]
                new = new + A[p, j] * sq.reshape(shape) * shifted
            if k >= 2:
                new = new + A[p, p] * sq[k - 1] * sub[(slice(None),) * p + (k - 2,)]
            sub[(slice(None),) * p + (k,)] = new / sq[k]
    return G


def _reorder(state: g.GaussianState, detected: tuple[int, ...]) -> g.GaussianState:
    """Reduced state of ``detected`` with its modes in the listed order."""
    n = state.n_modes
    if len(set(detected)) != len(detected) or not detected:
        raise ValueError("detected modes must be distinct and non-empty")
    for m in detected:
        if not 0 <= m < n:
            raise IndexError(f"mode {m} out of range for {n}-mode state")
    idx = np.array([i for m in detected for i in (2 * m, 2 * m + 1)])
    return g.GaussianState(state.d_real[idx], state.sigma_real[np.ix_(idx, idx)])


def _box(state: g.GaussianState, dim: int) -> np.ndarray:
    """``P(n_1, ..., n_k)`` for ``0 <= n_i < dim`` over every mode of ``state``."""
    A, c, pref = generating_function(state.complex)
    k = state.n_modes
    G = hermite_tensor(A, c, dim)
    grid = np.indices((dim,) * k)
    probs = pref * G[tuple(grid) + tuple(grid)]
    if np.max(np.abs(probs.imag)) > 1e-8 * max(1.0, np.abs(probs).max()):
        raise ArithmeticError("photon-number probabilities came out complex; covariance may be unphysical")
    probs = probs.real
    if probs.min() < -NEGATIVE_TOL:
        raise ArithmeticError(f"negative probability {probs.min():.3e}")
    return probs


def _saturated(state: g.GaussianState, cutoff: int) -> np.ndarray:
    """Distribution of ``min(n_i, cutoff)`` per detector, by inclusion-exclusion.

    ``P(n_U >= c, n_W = x) = sum_{V in U} (-1)^|V| P(n_V < c, n_W = x)``, where the
    right-hand side only needs box probabilities of the marginal on ``V + W``.
    """
    k = state.n_modes
    c = cutoff
    boxes = {(): np.array(1.0)}
    for size in range(1, k + 1):
        for S in combinations(range(k), size):
            drop = [m for m in range(k) if m not in S]
            boxes[S] = _box(g.trace_out(state, drop) if drop else state, c)
    out = np.zeros((c + 1,) * k)
    for size in range(k + 1):
        for U in combinations(range(k), size):
            W = tuple(m for m in range(k) if m not in U)
            block = np.zeros((c,) * len(W))
            for r in range(len(U) + 1):
                for V in combinations(U, r):
                    S = tuple(sorted(V + W))
                    summed = tuple(i for i, m in enumerate(S) if m in V)
                    block = block + (-1) ** r * boxes[S].sum(axis=summed)
            where = tuple(c if m in U else slice(0, c) for m in range(k))
            out[where] = block
    if out.min() < -1e-12:
        raise ArithmeticError(f"negative saturated probability {out.min():.3e}")
    return np.clip(out, 0.0, 1.0)


def fock_probabilities(
    state: g.GaussianState,
    detected_modes: Sequence[int] | None = None,
    cutoff: int = 15,
    saturate: bool = False,
) -> FockDistribution:
    """PNRD outcome probabilities of the listed modes (all modes by default).

    By default outcomes above ``cutoff`` are left out and their mass is reported.
    With ``saturate`` each detector's top reading means "``cutoff`` or more", so
    the distribution is complete.
    """
    _check_cutoff(cutoff)
    detected = tuple(range(state.n_modes)) if detected_modes is None else tuple(int(m) for m in detected_modes)
    reduced = _reorder(state, detected)
    if saturate:
        if cutoff < 1:
            raise ValueError("saturating detectors need cutoff >= 1")
        return FockDistribution(detected, cutoff, _saturated(reduced, cutoff), saturated=True)
    return FockDistribution(detected, cutoff, np.clip(_box(reduced, cutoff + 1), 0.0, 1.0))


# dense oracle -------------------------------------------------------------------


def _ladder(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), 1)


def _on_mode(op: np.ndarray, mode: int, n: int) -> np.ndarray:
    out = np.array([[1.0]])
    eye = np.eye(op.shape[0])
    for m in range(n):
        out = np.kron(out, op if m == mode else eye)
    return out


def _generator(kind: str, params: tuple, dim: int):
    """Anti-Hermitian generator ``L`` of ``U = exp(L)`` on the modes the step touches."""
    n = 1 if kind in ("ps", "disp") else 2
    a = [_on_mode(_ladder(dim), m, n) for m in range(n)]
    ad = [x.conj().T for x in a]
    if kind == "ps":
        (phi,) = params
        return -1j * phi * (ad[0] @ a[0])
    if kind == "disp":
        (alpha,) = params
        return alpha * ad[0] - np.conj(alpha) * a[0]
    if kind == "tms":
        r, theta = params
        zeta = r * np.exp(1j * theta)
        return np.conj(zeta) * a[0] @ a[1] - zeta * ad[0] @ ad[1]
    if kind == "bs":
        (eta,) = params
        vt = math.acos(math.sqrt(eta))
        return vt * (ad[0] @ a[1] - a[0] @ ad[1])
    raise ValueError(f"unknown step kind {kind!r}")


def _identify(op: g.SymplecticOp):
    """Recover ``(kind, params)`` from a PS/TMS/BS matrix."""
    M = op.matrix
    if M.shape == (2, 2):
        return "ps", (math.atan2(M[0, 1], M[0, 0]),)
    upper, lower = M[:2, 2:], M[2:, :2]
    if np.allclose(upper, -lower, atol=1e-12) and np.allclose(upper, upper[0, 0] * np.eye(2), atol=1e-12):
        return "bs", (float(M[0, 0] ** 2),)
    r = math.acosh(max(M[0, 0], 1.0))
    if r == 0.0:
        return "tms", (0.0, 0.0)
    s_theta = -upper / math.sinh(r)
    return "tms", (r, math.atan2(s_theta[0, 1], s_theta[0, 0]))


def _loss_kraus(T: float, dim: int) -> list[np.ndarray]:
    ops = []
    for l in range(dim):
        K = np.zeros((dim, dim))
        for n in range(l, dim):
            K[n - l, n] = math.sqrt(math.comb(n, l) * T ** (n - l) * (1 - T) ** l)
        ops.append(K)
    return ops


_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def _conjugate(rho: np.ndarray, U: np.ndarray, modes: Sequence[int], dim: int) -> np.ndarray:
    """``U rho U^dag`` with ``U`` acting on ``modes`` of the ``(dim,)*2k`` tensor ``rho``."""
    k = rho.ndim // 2
    m = len(modes)
    Ut = U.reshape((dim,) * (2 * m))
    ket = list(_LETTERS[:k])
    bra = list(_LETTERS[k : 2 * k])
    new_ket = list(_LETTERS[2 * k : 2 * k + m])
    new_bra = list(_LETTERS[2 * k + m : 2 * k + 2 * m])
    out_ket, out_bra = ket.copy(), bra.copy()
    for i, mode in enumerate(modes):
        out_ket[mode], out_bra[mode] = new_ket[i], new_bra[i]
    u_in = "".join(new_ket) + "".join(ket[mode] for mode in modes)
    v_in = "".join(new_bra) + "".join(bra[mode] for mode in modes)
    spec = f"{u_in},{''.join(ket + bra)},{v_in}->{''.join(out_ket + out_bra)}"
    return np.einsum(spec, Ut, rho, Ut.conj(), optimize=True)


def dense_fock_oracle(circuit: Circuit, phi: float, cutoff: int) -> FockDistribution:
    """Evolve the truncated density matrix step by step and read its diagonal.

    Unitaries are ``expm`` of the truncated generators, loss is a Kraus sum.
    """
    _check_cutoff(cutoff, ORACLE_MAX_CUTOFF)
    n = circuit.n_modes
    if n > ORACLE_MAX_MODES:
        raise ValueError(f"dense oracle handles at most {ORACLE_MAX_MODES} modes")
    dim = cutoff + 1
    kets = []
    for alpha in circuit.displacements:
        vac = np.zeros(dim, dtype=complex)
        vac[0] = 1.0
        kets.append(expm(_generator("disp", (alpha,), dim)) @ vac)
    psi = kets[0]
    for ket in kets[1:]:
        psi = np.kron(psi, ket)
    rho = np.outer(psi, psi.conj()).reshape((dim,) * (2 * n))
    for step in circuit.steps:
        if isinstance(step, PhaseShift):
            rho = _conjugate(rho, expm(_generator("ps", (phi,), dim)), (step.mode,), dim)
        elif isinstance(step, g.SymplecticOp):
            kind, params = _identify(step)
            rho = _conjugate(rho, expm(_generator(kind, params, dim)), step.modes, dim)
        elif isinstance(step, Loss):
            rho = sum(_conjugate(rho, K, (step.mode,), dim) for K in _loss_kraus(step.T, dim))
        elif isinstance(step, TraceOut):
            k = rho.ndim // 2
            for mode in sorted(step.modes, reverse=True):
                rho = np.trace(rho, axis1=mode, axis2=mode + k)
                k -= 1
        else:
            raise TypeError(f"unknown circuit step {step!r}")
    k = rho.ndim // 2
    flat = rho.reshape(dim**k, dim**k)
    probs = np.real(np.diag(flat)).reshape((dim,) * k)
    return FockDistribution(tuple(range(k)), cutoff, np.clip(probs, 0.0, 1.0))


# classical Fisher information ---------------------------------------------------


@dataclass(frozen=True)
class CfiResult:
    value: float
    phi: float
    cutoff: int
    derivative_step: float
    dropped: int = 0
    truncation_mass: float = 0.0  # outcome mass beyond the detector resolution
    fd_spread: float = 0.0  # |I_C(h) - I_C(2h)|, a finite-difference noise estimate
    saturated: bool = False


def _probs(config: ScenarioConfig, phi: float, cutoff: int, detected, saturate: bool = False) -> FockDistribution:
    return fock_probabilities(build(config).run(phi), detected, cutoff, saturate)


def cfi(
    config: ScenarioConfig,
    cutoff: int = 15,
    derivative_step: float = 1e-4,
    phi: float | None = None,
    detected_modes: Sequence[int] | None = None,
    saturate: bool = False,
) -> CfiResult:
    """PNRD Fisher information ``sum_n (d p_n / d phi)^2 / p_n`` at ``phi``.

    Central differences with steps ``h`` and ``2h`` are compared: if the two
    disagree in sign on outcomes that carry information, the step is too small.
    """
    if derivative_step <= 0:
        raise ValueError("derivative step must be positive")
    phi = config.phi if phi is None else phi
    h = derivative_step
    p0 = _probs(config, phi, cutoff, detected_modes, saturate)
    pp, pm = (_probs(config, phi + s, cutoff, detected_modes, saturate).probabilities for s in (h, -h))
    pp2, pm2 = (_probs(config, phi + s, cutoff, detected_modes, saturate).probabilities for s in (2 * h, -2 * h))
    p = p0.probabilities
    d1 = (pp - pm) / (2 * h)
    d2 = (pp2 - pm2) / (4 * h)
    keep = p >= DROP_BELOW
    terms = np.where(keep, d1**2 / np.where(keep, p, 1.0), 0.0)
    value = float(terms.sum())
    value_2h = float(np.where(keep, d2**2 / np.where(keep, p, 1.0), 0.0).sum())
    if value > 0:
        significant = keep & (terms > 1e-6 * value)
        flips = significant & (np.sign(d1) != np.sign(d2))
        if np.any(flips) and terms[flips].sum() > max(1e-3 * value, FLIP_FLOOR):
            raise ValueError(
                f"derivative step {h:g} too small: finite differences change sign on "
                f"{int(flips.sum())} informative outcomes"
            )
    return CfiResult(value, phi, cutoff, h, int((~keep).sum()), p0.overflow_mass, abs(value - value_2h), saturate)
