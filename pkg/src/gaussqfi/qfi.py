"""Quantum Fisher information of phase-parameterised Gaussian states.

Four independent routes are provided: the pure-state formula, the closed
two-mode formula, the eigendecomposition of ``sigma K`` (with a regularised
``nu -> 1`` limit when some mode is pure), and the direct inversion of
``conj(sigma) (x) sigma - K (x) K`` kept as an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gaussian as g
from .circuit import Circuit, PhaseShift, apply_step, propagate_tangent

PURE_TOL = 1e-6
SINGULAR_TOL = 1e-10
SUPPORT_TOL = 1e-8
NEGATIVE_TOL = 1e-9
NU_STEPS = (1e-4, 2e-4, 4e-4)
DEFECTIVE_COND = 1e10
ROUTES = ("pure", "two_mode", "eigendecomp", "vectorized_oracle", "analytic")


class RouteNotApplicable(ValueError):
    """The chosen formula does not apply to this state."""


@dataclass(frozen=True)
class StateDerivativePair:
    state: g.ComplexGaussianState
    d_sigma: np.ndarray
    d_d: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.state.n_modes


@dataclass(frozen=True)
class FisherResult:
    value: float
    route: str
    regularization_used: bool = False
    diagnostics: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return self.value


def _finish(value: float, route: str, regularized: bool = False, **diagnostics) -> FisherResult:
    if value < -NEGATIVE_TOL * max(1.0, abs(value)):
        raise ArithmeticError(f"{route} route returned negative QFI {value:.3e}")
    return FisherResult(max(float(value), 0.0), route, regularized, diagnostics)


def state_derivative(circuit: Circuit, phi: float) -> StateDerivativePair:
    """Output state and its exact phi-derivative, both in complex form."""
    k = circuit.phase_index
    state = circuit.run(phi, stop=k)
    mode = circuit.steps[k].mode
    n = state.n_modes
    R = g.embed(g.make_phase_shift(phi, mode), n)
    dR = np.zeros((2 * n, 2 * n))
    dR[2 * mode : 2 * mode + 2, 2 * mode : 2 * mode + 2] = g.phase_shift_derivative(phi)

    dd = dR @ state.d_real
    ds = dR @ state.sigma_real @ R.T
    ds = ds + ds.T
    state = g.GaussianState(R @ state.d_real, R @ state.sigma_real @ R.T)
    for step in circuit.steps[k + 1 :]:
        if isinstance(step, PhaseShift):
            raise ValueError("circuit contains more than one phase placeholder")
        state = apply_step(state, step)
        dd, ds = propagate_tangent(dd, ds, step)
    d_d, d_sigma = g.real_to_complex(dd, 0.5 * (ds + ds.T))
    return StateDerivativePair(state.complex, 0.5 * (d_sigma + d_sigma.conj().T), d_d)


def displacement_term(pair: StateDerivativePair, sigma: np.ndarray | None = None) -> float:
    sigma = pair.state.sigma if sigma is None else sigma
    dd = pair.d_d
    return 2.0 * float(np.real(dd.conj() @ np.linalg.solve(sigma, dd)))


def is_pure(pair: StateDerivativePair, tol: float = PURE_TOL) -> bool:
    return bool(np.all(np.abs(g.symplectic_eigenvalues(pair.state) - 1.0) < tol))


def qfi_pure(pair: StateDerivativePair) -> FisherResult:
    if not is_pure(pair):
        raise RouteNotApplicable("state is mixed; the pure-state formula does not apply")
    sigma, ds = pair.state.sigma, pair.d_sigma
    x = np.linalg.solve(sigma, ds)
    value = 0.25 * np.trace(x @ x).real + displacement_term(pair)
    return _finish(value, "pure")


def qfi_two_mode(pair: StateDerivativePair) -> FisherResult:
    """Closed two-mode formula with ``A = K sigma``.

    The symplectic-eigenvalue term is rewritten in terms of ``w = Tr[A^2]^2 - 16|A|``
    so that the equal-eigenvalue case (symmetric loss) is evaluated without 0/0.
    """
    if pair.n_modes != 2:
        raise RouteNotApplicable("two-mode formula needs exactly two modes")
    K = g.k_matrix(2)
    A = K @ pair.state.sigma
    dA = K @ pair.d_sigma
    det = np.linalg.det(A).real
    lam = g.two_mode_symplectic_eigenvalues(pair.state)
    if abs(det - 1.0) < PURE_TOL or np.any(np.abs(lam - 1.0) < PURE_TOL):
        raise RouteNotApplicable("a symplectic eigenvalue equals 1; use the pure or regularised route")

    eye = np.eye(4)
    a_inv_da = np.linalg.solve(A, dA)
    b = eye + A @ A
    b_inv_da = np.linalg.solve(b, dA)
    term1 = det * np.trace(a_inv_da @ a_inv_da).real
    term2 = np.sqrt(np.linalg.det(b).real) * np.trace(b_inv_da @ b_inv_da).real

    t = np.trace(A @ A).real
    dt = 2.0 * np.trace(A @ dA).real
    d_det = det * np.trace(a_inv_da).real
    w = t * t - 16.0 * det
    dw = 2.0 * t * dt - 16.0 * d_det
    u1, u2 = lam[1] ** 2, lam[0] ** 2
    gu = lambda u: 1.0 / (u * (u * u - 1.0))  # noqa: E731
    # divided difference of gu between u1 and u2
    dd_g = -(u1 * u1 + u1 * u2 + u2 * u2 - 1.0) * gu(u1) * gu(u2)
    term3 = -(max(w, 0.0) * dt * dt * dd_g / 2.0 + dt * dw * (gu(u1) + gu(u2)) + dw * dw * dd_g / 8.0) / 32.0

    value = (term1 + term2 + term3) / (2.0 * (det - 1.0)) + displacement_term(pair)
    return _finish(value, "two_mode", lambda_=tuple(lam))


def _eig_sigma_k(sigma: np.ndarray):
    n = sigma.shape[0] // 2
    lam, q = np.linalg.eig(sigma @ g.k_matrix(n))
    cond = np.linalg.cond(q)
    return lam.real, q, cond


def _eigen_terms(pair: StateDerivativePair, lam: np.ndarray, q: np.ndarray, nu: float = 1.0, drop=None):
    """Both terms of the eigendecomposition formula for covariance ``nu * sigma``.

    ``drop`` masks index pairs whose 0/0 terms are excluded from the sum.
    """
    n = pair.n_modes
    lam = nu * lam
    q_inv = np.linalg.inv(q)
    S = q_inv @ pair.d_sigma @ g.k_matrix(n) @ q
    denom = np.outer(lam, lam) - 1.0
    terms = S.T * S
    if drop is not None:
        terms = np.where(drop, 0.0, terms)
        denom = np.where(drop, 1.0, denom)
    # vec[S^T]^T (lam (x) lam - I)^-1 vec[S] = sum_ij S_ji S_ij / (lam_i lam_j - 1)
    quad = 0.5 * np.sum(terms / denom)
    disp = 2.0 * (pair.d_d @ g.k_tilde(n) @ q @ np.diag(1.0 / lam) @ q_inv @ pair.d_d)
    return quad, disp, S


def _support_preserving(S: np.ndarray, singular: np.ndarray) -> bool:
    """True when the derivative has no weight on the singular (pure-mode) pairs."""
    scale = 1.0 + np.max(np.abs(S)) ** 2
    return bool(np.max(np.abs(S.T * S)[singular]) <= SUPPORT_TOL * scale)


def qfi_eigendecomp(pair: StateDerivativePair) -> FisherResult:
    """Eigendecomposition of ``sigma K``.

    Pure symplectic modes make some ``lam_i lam_j - 1`` vanish. If the
    derivative keeps those modes pure (zero weight on the singular pairs), the
    0/0 terms contribute nothing and are dropped. Otherwise the purity changes
    at second order and the value comes from the ``nu -> 1`` extrapolation.
    """
    lam, q, cond = _eig_sigma_k(pair.state.sigma)
    if cond > DEFECTIVE_COND:
        # defective sigma K: no usable eigenbasis, defer to the direct inversion
        res = qfi_vectorized(pair)
        return _finish(res.value, "vectorized_oracle", res.regularization_used, condition=cond, fallback=True)
    gaps = np.abs(np.outer(lam, lam) - 1.0)
    smallest = np.min(gaps)
    if smallest >= SINGULAR_TOL:
        quad, disp, _ = _eigen_terms(pair, lam, q)
        return _finish((quad + disp).real, "eigendecomp", False, min_gap=smallest, condition=cond)
    singular = gaps < SINGULAR_TOL
    quad, disp, S = _eigen_terms(pair, lam, q, drop=singular)
    if _support_preserving(S, singular):
        return _finish((quad + disp).real, "eigendecomp", False, min_gap=smallest, condition=cond, dropped=int(singular.sum()))
    vals = [sum(_eigen_terms(pair, lam, q, 1.0 + h)[:2]).real for h in NU_STEPS]
    value = (8.0 * vals[0] - 6.0 * vals[1] + vals[2]) / 3.0
    return _finish(value, "eigendecomp", True, min_gap=smallest, condition=cond)


def _vectorized_value(sigma: np.ndarray, pair: StateDerivativePair) -> float:
    n = pair.n_modes
    K = g.k_matrix(n)
    M = np.kron(sigma.conj(), sigma) - np.kron(K, K)
    v = pair.d_sigma.reshape(-1, order="F")
    quad = 0.5 * (v.conj() @ np.linalg.solve(M, v))
    return float(quad.real) + displacement_term(pair, sigma)


def qfi_vectorized(pair: StateDerivativePair) -> FisherResult:
    """Direct ``4n^2 x 4n^2`` inversion; regularised when ``M`` is singular."""
    sigma = pair.state.sigma
    lam = np.abs(g.symplectic_eigenvalues(pair.state))
    if np.min(np.abs(np.outer(lam, lam) - 1.0)) >= SINGULAR_TOL:
        return _finish(_vectorized_value(sigma, pair), "vectorized_oracle")
    vals = [_vectorized_value((1.0 + h) * sigma, pair) for h in NU_STEPS]
    return _finish((8.0 * vals[0] - 6.0 * vals[1] + vals[2]) / 3.0, "vectorized_oracle", True)


_ROUTE_FUNCS = {
    "pure": qfi_pure,
    "two_mode": qfi_two_mode,
    "eigendecomp": qfi_eigendecomp,
    "vectorized_oracle": qfi_vectorized,
}


def qfi(pair: StateDerivativePair, route: str = "auto") -> FisherResult:
    """QFI by the named route.

    ``auto`` is the eigendecomposition route, regularised at exactly pure
    states. The pure formula is not used automatically: a state within the
    purity tolerance but not pure can have a QFI far from the pure-state value.
    """
    if route == "auto":
        return qfi_eigendecomp(pair)
    try:
        return _ROUTE_FUNCS[route](pair)
    except KeyError:
        raise ValueError(f"unknown route {route!r}") from None


def applicable_routes(pair: StateDerivativePair) -> list[str]:
    routes = ["eigendecomp", "vectorized_oracle"]
    pure = is_pure(pair)
    if pure:
        routes.insert(0, "pure")
    elif pair.n_modes == 2:
        lam = g.two_mode_symplectic_eigenvalues(pair.state)
        if np.all(np.abs(lam - 1.0) >= PURE_TOL):
            routes.insert(0, "two_mode")
    return routes


def circuit_qfi(circuit: Circuit, phi: float, route: str = "auto") -> FisherResult:
    return qfi(state_derivative(circuit, phi), route)
