"""Gaussian states in phase space and the symplectic operations acting on them.

Real form uses interleaved quadratures ``(x1, p1, ..., xn, pn)`` with hbar = 1,
so the vacuum covariance is ``I/2``. The complex form uses
``(a1, ..., an, a1^dag, ..., an^dag)`` and the vacuum covariance is ``I``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache, wraps
from typing import Iterable, Sequence

import numpy as np

SYMMETRY_TOL = 1e-12
SYMPLECTIC_TOL = 1e-10
SPECTRAL_TOL = 1e-9


def _constant(func):
    """Cache a matrix-valued helper; the cached array is read-only."""

    @lru_cache(maxsize=None)
    def cached(*args):
        out = func(*args)
        out.flags.writeable = False
        return out

    @wraps(func)
    def wrapper(*args):
        return cached(*args)

    return wrapper


@_constant
def omega(n: int) -> np.ndarray:
    """Symplectic form for ``n`` modes in interleaved ordering."""
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@_constant
def xp_permutation(n: int) -> np.ndarray:
    """Permutation matrix taking ``(x1, p1, ..., xn, pn)`` to ``(x1..xn, p1..pn)``."""
    perm = np.zeros((2 * n, 2 * n))
    for j in range(n):
        perm[j, 2 * j] = 1.0
        perm[n + j, 2 * j + 1] = 1.0
    return perm


@_constant
def complex_unitary(n: int) -> np.ndarray:
    """Matrix mapping ``(x..., p...)`` quadratures onto ``(a..., a^dag...)``."""
    eye = np.eye(n)
    return np.block([[eye, 1j * eye], [eye, -1j * eye]]) / np.sqrt(2.0)


@_constant
def k_matrix(n: int) -> np.ndarray:
    return np.diag(np.concatenate([np.ones(n), -np.ones(n)]))


@_constant
def k_tilde(n: int) -> np.ndarray:
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


@dataclass(frozen=True)
class ComplexGaussianState:
    """Gaussian state in the complex ``(a, a^dag)`` convention."""

    d: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=complex)
        d = np.asarray(self.d, dtype=complex)
        if sigma.shape != (d.size, d.size) or d.size % 2:
            raise ValueError(f"inconsistent shapes d={d.shape} sigma={sigma.shape}")
        if np.max(np.abs(sigma - sigma.conj().T), initial=0.0) > SYMMETRY_TOL * max(1.0, np.abs(sigma).max()):
            raise ValueError("complex covariance is not Hermitian")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "d", d)

    @property
    def n_modes(self) -> int:
        return self.d.size // 2


@dataclass(frozen=True)
class GaussianState:
    """An ``n``-mode Gaussian state given by its real displacement and covariance."""

    d_real: np.ndarray
    sigma_real: np.ndarray

    def __post_init__(self):
        d = np.array(self.d_real, dtype=float).reshape(-1)
        sigma = np.array(self.sigma_real, dtype=float)
        if d.size == 0 or d.size % 2:
            raise ValueError("displacement must have even, non-zero length")
        if sigma.shape != (d.size, d.size):
            raise ValueError(f"covariance shape {sigma.shape} does not match {d.size} quadratures")
        scale = max(1.0, np.abs(sigma).max())
        if np.max(np.abs(sigma - sigma.T)) > SYMMETRY_TOL * scale:
            raise ValueError("covariance matrix is not symmetric")
        sigma = 0.5 * (sigma + sigma.T)
        d.flags.writeable = False
        sigma.flags.writeable = False
        object.__setattr__(self, "d_real", d)
        object.__setattr__(self, "sigma_real", sigma)

    @property
    def n_modes(self) -> int:
        return self.d_real.size // 2

    @cached_property
    def complex(self) -> ComplexGaussianState:
        return to_complex(self)

    def satisfies_uncertainty(self, tol: float = SPECTRAL_TOL) -> bool:
        """Check ``sigma + (i/2) Omega >= 0``."""
        herm = self.sigma_real + 0.5j * omega(self.n_modes)
        return bool(np.linalg.eigvalsh(herm).min() >= -tol)


@dataclass(frozen=True)
class SymplecticOp:
    """A ``2m x 2m`` symplectic matrix acting on the listed modes."""

    matrix: np.ndarray
    modes: tuple[int, ...] = field(default=(0,))

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=float)
        modes = tuple(int(m) for m in self.modes)
        if len(set(modes)) != len(modes):
            raise ValueError(f"repeated mode index in {modes}")
        if mat.shape != (2 * len(modes), 2 * len(modes)):
            raise ValueError(f"matrix shape {mat.shape} does not match {len(modes)} modes")
        om = omega(len(modes))
        if np.max(np.abs(mat @ om @ mat.T - om)) > SYMPLECTIC_TOL:
            raise ValueError("matrix is not symplectic")
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "modes", modes)

    def on(self, *modes: int) -> SymplecticOp:
        """Same matrix, acting on different modes."""
        return SymplecticOp(self.matrix, modes)


def vacuum_state(n: int) -> GaussianState:
    if n < 1:
        raise ValueError("need at least one mode")
    return GaussianState(np.zeros(2 * n), 0.5 * np.eye(2 * n))


def coherent_state(alphas: Sequence[complex]) -> GaussianState:
    state = vacuum_state(len(alphas))
    for mode, alpha in enumerate(alphas):
        state = displace(state, mode, alpha)
    return state


def _check_mode(state: GaussianState, mode: int) -> None:
    if not 0 <= mode < state.n_modes:
        raise IndexError(f"mode {mode} out of range for {state.n_modes}-mode state")


def displace(state: GaussianState, mode: int, amplitude: complex) -> GaussianState:
    _check_mode(state, mode)
    d = state.d_real.copy()
    d[2 * mode] += np.sqrt(2.0) * np.real(amplitude)
    d[2 * mode + 1] += np.sqrt(2.0) * np.imag(amplitude)
    return GaussianState(d, state.sigma_real)


def phase_shift_matrix(phi: float) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, s], [-s, c]])


def phase_shift_derivative(phi: float) -> np.ndarray:
    """Derivative of :func:`phase_shift_matrix` with respect to ``phi``."""
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[-s, c], [-c, -s]])


def make_phase_shift(phi: float, mode: int = 0) -> SymplecticOp:
    return SymplecticOp(phase_shift_matrix(phi), (mode,))


def make_tms(r: float, theta: float = 0.0, modes: tuple[int, int] = (0, 1)) -> SymplecticOp:
    """Two-mode squeezer ``exp(zeta^* a b - zeta a^dag b^dag)`` with ``zeta = r e^{i theta}``."""
    if r < 0:
        raise ValueError(f"squeezing magnitude must be non-negative, got {r}")
    s_theta = np.array([[np.cos(theta), np.sin(theta)], [np.sin(theta), -np.cos(theta)]])
    ch, sh = np.cosh(r), np.sinh(r)
    mat = np.block([[ch * np.eye(2), -sh * s_theta], [-sh * s_theta, ch * np.eye(2)]])
    return SymplecticOp(mat, modes)


def _bs_matrix(eta: float) -> np.ndarray:
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmission must lie in [0, 1], got {eta}")
    t, r = np.sqrt(eta), np.sqrt(1.0 - eta)
    return np.array([[t, 0, r, 0], [0, t, 0, r], [-r, 0, t, 0], [0, -r, 0, t]], dtype=float)


def make_beam_splitter(eta: float, modes: tuple[int, int] = (0, 1)) -> SymplecticOp:
    return SymplecticOp(_bs_matrix(eta), modes)


def mode_permutation(modes: Sequence[int], n: int) -> np.ndarray:
    """Permutation bringing the listed modes to the front, keeping the rest in order."""
    return _mode_permutation(tuple(modes), n)


@_constant
def _mode_permutation(modes: tuple[int, ...], n: int) -> np.ndarray:
    order = list(modes) + [m for m in range(n) if m not in modes]
    perm = np.zeros((2 * n, 2 * n))
    for new, old in enumerate(order):
        perm[2 * new, 2 * old] = 1.0
        perm[2 * new + 1, 2 * old + 1] = 1.0
    return perm


def embed(op: SymplecticOp, n: int) -> np.ndarray:
    """Full ``2n x 2n`` matrix ``P^-1 (f + I) P`` of an op acting on a subset of modes."""
    return _embed_matrix(op.matrix, op.modes, n)


def _embed_matrix(matrix: np.ndarray, modes: tuple[int, ...], n: int) -> np.ndarray:
    if max(modes) >= n or min(modes) < 0:
        raise IndexError(f"op modes {modes} out of range for {n} modes")
    m = len(modes)
    block = np.eye(2 * n)
    block[: 2 * m, : 2 * m] = matrix
    perm = mode_permutation(modes, n)
    return perm.T @ block @ perm


def apply(state: GaussianState, op: SymplecticOp) -> GaussianState:
    F = embed(op, state.n_modes)
    sigma = F @ state.sigma_real @ F.T
    return GaussianState(F @ state.d_real, 0.5 * (sigma + sigma.T))


def through_fictitious_bs(d, sigma, mode: int, T: float, ancilla_var: float = 0.5):
    """Mix ``mode`` with an appended ancilla on a beam splitter and drop the ancilla.

    ``ancilla_var`` is the ancilla's quadrature variance; 0.5 is vacuum, 0 gives the
    homogeneous part of the map (used for propagating derivatives).
    """
    n = d.size // 2
    d_ext = np.concatenate([d, np.zeros(2)])
    sigma_ext = np.zeros((2 * n + 2, 2 * n + 2))
    sigma_ext[: 2 * n, : 2 * n] = sigma
    sigma_ext[2 * n :, 2 * n :] = ancilla_var * np.eye(2)
    F = _embed_matrix(_bs_matrix(T), (mode, n), n + 1)
    d_ext = F @ d_ext
    sigma_ext = F @ sigma_ext @ F.T
    return d_ext[: 2 * n], sigma_ext[: 2 * n, : 2 * n]


def apply_loss(state: GaussianState, mode: int, T: float) -> GaussianState:
    """Pure-loss channel with transmission ``T`` on one mode."""
    _check_mode(state, mode)
    d, sigma = through_fictitious_bs(state.d_real, state.sigma_real, mode, T)
    return GaussianState(d, 0.5 * (sigma + sigma.T))


def apply_loss_direct(state: GaussianState, mode: int, T: float) -> GaussianState:
    """Same channel as :func:`apply_loss`, written as ``X sigma X + Y``."""
    _check_mode(state, mode)
    if not 0.0 <= T <= 1.0:
        raise ValueError(f"transmission must lie in [0, 1], got {T}")
    x = np.ones(2 * state.n_modes)
    x[2 * mode : 2 * mode + 2] = np.sqrt(T)
    y = np.zeros(2 * state.n_modes)
    y[2 * mode : 2 * mode + 2] = 0.5 * (1.0 - T)
    sigma = x[:, None] * state.sigma_real * x[None, :] + np.diag(y)
    return GaussianState(x * state.d_real, sigma)


def kept_indices(n: int, drop: Iterable[int]) -> np.ndarray:
    drop = set(drop)
    return np.array([i for m in range(n) if m not in drop for i in (2 * m, 2 * m + 1)], dtype=int)


def trace_out(state: GaussianState, modes: Iterable[int]) -> GaussianState:
    modes = set(modes)
    for m in modes:
        _check_mode(state, m)
    if len(modes) >= state.n_modes:
        raise ValueError("cannot trace out every mode")
    keep = kept_indices(state.n_modes, modes)
    return GaussianState(state.d_real[keep], state.sigma_real[np.ix_(keep, keep)])


def real_to_complex(d_real: np.ndarray, sigma_real: np.ndarray):
    n = d_real.size // 2
    up = complex_unitary(n) @ xp_permutation(n)
    return up @ d_real, 2.0 * up @ sigma_real @ up.conj().T


def to_complex(state: GaussianState) -> ComplexGaussianState:
    d, sigma = real_to_complex(state.d_real, state.sigma_real)
    return ComplexGaussianState(d, 0.5 * (sigma + sigma.conj().T))


def mean_photon_number(state: GaussianState, mode: int) -> float:
    _check_mode(state, mode)
    i = 2 * mode
    s, d = state.sigma_real, state.d_real
    return 0.5 * (s[i, i] + s[i + 1, i + 1] - 1.0) + 0.5 * (d[i] ** 2 + d[i + 1] ** 2)


def symplectic_eigenvalues(cstate: ComplexGaussianState | GaussianState) -> np.ndarray:
    """Symplectic eigenvalues, one per mode, ascending. Pure modes give 1."""
    if isinstance(cstate, GaussianState):
        cstate = cstate.complex
    n = cstate.n_modes
    ev = np.linalg.eigvals(cstate.sigma @ k_matrix(n))
    if np.max(np.abs(ev.imag)) > 1e-6 * max(1.0, np.abs(ev).max()):
        raise np.linalg.LinAlgError("sigma K has complex eigenvalues; covariance is unphysical")
    return np.sort(np.abs(ev.real))[::2]


def two_mode_symplectic_eigenvalues(cstate: ComplexGaussianState) -> np.ndarray:
    """Closed form for two modes via ``A = K sigma``."""
    if cstate.n_modes != 2:
        raise ValueError("closed form needs exactly two modes")
    A = k_matrix(2) @ cstate.sigma
    tr = np.trace(A @ A).real
    det = np.linalg.det(A).real
    disc = np.sqrt(max(tr * tr - 16.0 * det, 0.0))
    return np.sort(0.5 * np.sqrt([tr - disc, tr + disc]))
