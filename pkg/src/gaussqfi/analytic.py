"""Closed-form QFI expressions, loss thresholds and optimal settings.

Each function is written term by term in the hyperbolic functions of the
squeezing magnitudes so that a mismatch with the numeric engine points at a
single factor. ``n_phi`` is always the dose on the sample.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

GUARD = 1e-12

cosh, sinh, cos, sqrt = math.cosh, math.sinh, math.cos, math.sqrt


@dataclass(frozen=True)
class Branch:
    label: str  # "below_threshold" or "above_threshold"
    threshold_value: float


def _check_dose(n_phi: float, r1: float) -> None:
    if sinh(r1) ** 2 > n_phi * (1 + 1e-9) + 1e-12:
        raise ValueError(f"sinh^2(r1)={sinh(r1) ** 2:.6g} exceeds the dose n_phi={n_phi:.6g}")


def qfi_lossless(n_phi: float, r1: float) -> float:
    _check_dose(n_phi, r1)
    return 4 * cosh(r1) ** 2 * n_phi + 4 * sinh(r1) ** 2 * n_phi - 4 * sinh(r1) ** 4


def qfi_max_lossless(n_phi: float) -> float:
    if n_phi < 0:
        raise ValueError("n_phi must be non-negative")
    return 4 * n_phi * (n_phi + 1)


def qfi_internal(T: float, n_phi: float, r1: float) -> float:
    """Yurke or Mandel with only internal transmission ``T``."""
    _check_dose(n_phi, r1)
    s2 = sinh(r1) ** 2
    first = T**2 * sinh(2 * r1) ** 2 / (1 + 2 * T * (1 - T) * s2)
    second = 4 * T * (1 + 2 * T * s2) / (1 + 4 * T * (1 - T) * s2) * (n_phi - s2)
    return first + second


def t_critical(n_phi: float) -> float:
    """Internal transmission above which squeezing beats the seeded MZI."""
    if n_phi <= 0:
        raise ValueError("n_phi must be positive")
    a = 2 * n_phi - 1
    if abs(a) < 1e-9:
        return sqrt(2) / 2
    root = sqrt(1 + 16 * n_phi / a**2)
    sign = 1.0 if n_phi > 0.5 else -1.0
    return a / (8 * n_phi) * (1 + sign * root)


def yurke_gamma(r1: float, r2: float, varphi: float) -> float:
    return cosh(2 * r1) * cosh(2 * r2) + cos(varphi) * sinh(2 * r1) * sinh(2 * r2)


def qfi_yurke_external(eta: float, n_phi: float, r1: float, r2: float, varphi: float) -> float:
    """Yurke interferometer, external loss only; ``varphi = phi + theta``.

    At ``gamma = 1`` the first term is 0/0. The limit is taken along ``varphi``
    (the direction the estimated phase moves), which gives ``eta (2 - eta) sinh^2 2r1``.
    """
    _check_dose(n_phi, r1)
    gam = yurke_gamma(r1, r2, varphi)
    if abs(gam - 1) < GUARD:
        first = eta * sinh(2 * r1) ** 2 * (2 - eta)
    else:
        bracket = (
            2 * eta * gam
            + (1 - eta) * (cosh(2 * r2) ** 2 - cos(2 * varphi) * sinh(2 * r2) ** 2)
            - (eta + 1)
        )
        first = eta * sinh(2 * r1) ** 2 * bracket / (2 * (gam - 1) * (eta * (1 - eta) * (gam - 1) + 1))
    second = (
        4 * eta * (eta * cosh(2 * r1) + (1 - eta) * cosh(2 * r2)) * (n_phi - sinh(r1) ** 2)
        / (1 + 2 * eta * (1 - eta) * (gam - 1))
    )
    return first + second


def phi_opt_yurke(n_phi: float, eta: float, r2: float) -> tuple[float, float]:
    """Two optimal ``varphi`` for the unseeded Yurke scheme at large ``r2``.

    Returns ``(p1, 2 pi - p1)`` with ``p1`` in ``[pi/2, pi]``.
    """
    if math.exp(2 * r2) < 100:
        warnings.warn(f"r2={r2} is not in the large-squeezing regime; expansion may be poor", stacklevel=2)
    root = sqrt(n_phi * (n_phi + 1))
    c = -2 * root / (2 * n_phi + 1) + (1 - eta) * root / (2 * (2 * n_phi + 1) ** 2 * eta * cosh(r2) ** 2)
    p1 = math.acos(max(-1.0, min(1.0, c)))
    return p1, 2 * math.pi - p1


def qfi_yurke_asymptotic(eta: float, n_phi: float, r2: float) -> float:
    """Optimal unseeded Yurke QFI to first order in ``1 / (eta cosh^2 r2)``."""
    return qfi_max_lossless(n_phi) * (1 - (1 - eta) * (2 * n_phi + 1) / (2 * eta * cosh(r2) ** 2))


def qfi_mandel_no_a(eta: float, n_phi: float, r1: float, r2: float) -> float:
    """Mandel interferometer, external loss, mode a not measured."""
    _check_dose(n_phi, r1)
    c12 = cosh(r1) ** 2 * cosh(r2) ** 2 - 1
    if abs(c12) < GUARD:
        first = 0.0
    else:
        first = eta * sinh(2 * r1) ** 2 * sinh(r2) ** 2 / c12
    second = (
        4 * eta * sinh(r2) ** 2 * (1 - eta + eta * cosh(2 * r1)) * (n_phi - sinh(r1) ** 2)
        / (1 + 2 * eta * c12)
    )
    return first + second


def qfi_mandel_no_a_above(eta: float, n_phi: float, r2: float) -> float:
    """Large-r2 optimum above the eta_0 threshold (r1 at its maximum)."""
    return 4 * eta * n_phi * (1 - n_phi / ((n_phi + 1) * cosh(r2) ** 2))


def qfi_mandel_no_a_below(eta: float, n_phi: float, r2: float) -> float:
    """Large-r2 optimum below the eta_0 threshold (r1 = 0)."""
    return 2 * n_phi * (1 - 1 / (2 * eta * sinh(r2) ** 2))


def eta0(n_phi: float, r2: float, exact: bool = False, r1: float | None = None) -> float:
    """External-transmission threshold for the Mandel scheme with mode a discarded.

    The exact threshold is the ``eta`` at which ``d/dr1`` of
    :func:`qfi_mandel_no_a` vanishes; it depends on ``r1`` as well, and when
    ``r1`` is omitted it is evaluated at ``r1 = arcsinh(sqrt(n_phi))``.
    """
    if r2 <= 0:
        raise ValueError("r2 must be positive")
    if not exact:
        return 0.5 - 1 / (2 * (n_phi + 1) * cosh(r2) ** 2)
    if r1 is None:
        r1 = math.asinh(sqrt(n_phi))
    c1, c2 = cosh(r1) ** 2, cosh(r2) ** 2
    x = c1 * c2
    omega = 2 * (n_phi + 1) * c2 * (x - 1) ** 2 - 4 * x**2 + 4 * x
    disc = omega**2 + 16 * (n_phi + 1) * c2 * x * (x - 1) ** 2 * (x - 2)
    return (omega + sqrt(disc)) / (8 * (n_phi + 1) * c2 * (x - 1) ** 2)


def qfi_mandel_full(eta: float, n_phi: float, r1: float, r2: float) -> float:
    """Mandel interferometer, external loss, all three modes measured.

    :func:`qfi_mandel_full_printed` uses ``cosh^2 r1 - (1 - eta)``
    instead of ``eta cosh^2 r1 - (1 - eta)``. That variant disagrees with the
    numeric engine whenever ``0 < r1`` and ``eta`` is not 1/2 or 1, and it does not
    reduce to :func:`qfi_mandel_full_r2_zero` at ``r2 = 0``. It is kept only so
    the two can be compared.
    """
    return _qfi_mandel_full(eta, n_phi, r1, r2, printed=False)


def qfi_mandel_full_printed(eta: float, n_phi: float, r1: float, r2: float) -> float:
    return _qfi_mandel_full(eta, n_phi, r1, r2, printed=True)


def _qfi_mandel_full(eta: float, n_phi: float, r1: float, r2: float, printed: bool) -> float:
    _check_dose(n_phi, r1)
    c1, c2 = cosh(r1) ** 2, cosh(r2) ** 2
    c12 = c1 * c2 - 1
    if abs(c12) < GUARD:
        first = 0.0
    else:
        weight = 1.0 if printed else eta
        num = (
            2 * eta * (1 - eta) * (1 + c1 * c2**2)
            + (2 * eta - 1) * c2 * (weight * c1 - (1 - eta))
            - 1
        )
        first = eta * sinh(2 * r1) ** 2 * num / (c12 * (1 + 2 * eta * (1 - eta) * c12))
    second = (
        4 * eta * (1 - eta + eta * cosh(2 * r1)) * (eta + (1 - eta) * cosh(2 * r2)) * (n_phi - sinh(r1) ** 2)
        / (1 + 4 * eta * (1 - eta) * c12)
    )
    return first + second


def qfi_mandel_full_low_eta(eta: float, n_phi: float, r2: float) -> float:
    """Large-r2 optimum for eta < 1/2 (r1 = 0)."""
    return 2 * n_phi * (1 - (1 - 2 * eta) / (4 * eta * (1 - eta) * sinh(r2) ** 2))


def _r20_rhs(eta: float) -> float:
    q = 2 * (1 - 2 * eta * (1 - eta))
    return (q + sqrt(q)) / (2 * eta * (2 * eta - 1))


def r2_zero_condition(eta: float, n_phi: float) -> bool:
    """True when the second squeezer should be switched off (eta > 1/2)."""
    return n_phi > _r20_rhs(eta) - 1


def r2_opt_mandel(eta: float, n_phi: float) -> tuple[float, Branch]:
    """Optimal r2 for the full Mandel scheme at r1 = r1_max, valid for eta > 1/2."""
    if eta <= 0.5:
        raise ValueError("the finite optimum exists only for eta > 1/2")
    threshold = _r20_rhs(eta) - 1
    if n_phi > threshold:
        return 0.0, Branch("above_threshold", threshold)
    arg = _r20_rhs(eta) / (1 + n_phi)
    if arg < 1:
        raise ArithmeticError(f"arccosh argument {arg} < 1 on the r2^(1) branch")
    return math.acosh(sqrt(arg)), Branch("below_threshold", threshold)


def qfi_mandel_full_r2_zero(eta: float, n_phi: float) -> float:
    return 4 * eta**2 * n_phi * (n_phi + 1) / (1 + 2 * n_phi * eta * (1 - eta))


def qfi_mandel_full_r2_one(eta: float, n_phi: float) -> float:
    inner = 1 - 2 * (1 - eta) * (2 * eta - 1) - 2 * (1 - eta) * sqrt(2 - 4 * eta * (1 - eta))
    return 4 * eta * n_phi * (1 + eta * n_phi * inner)


def qfi_mandel_full_opt(eta: float, n_phi: float) -> float:
    """Optimum over r2 at r1 = r1_max for eta > 1/2."""
    _, branch = r2_opt_mandel(eta, n_phi)
    if branch.label == "above_threshold":
        return qfi_mandel_full_r2_zero(eta, n_phi)
    return qfi_mandel_full_r2_one(eta, n_phi)


def qfi_equal_squeezing(eta: float, n_phi: float) -> float:
    """Unseeded Yurke optimum with r1 = r2 at varphi = pi."""
    if not 0 <= eta <= 1:
        raise ValueError("eta must lie in [0, 1]")
    return eta * (2 - eta) * qfi_max_lossless(n_phi)
