"""Closed-form QFI expressions checked against the Gaussian engine on random grids."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import analytic as an
from . import interferometers as ifm
from .optimize import scenario_qfi

RTOL = 1e-6
ZERO_ATOL = 1e-10  # both sides below this count as agreeing zeros


@dataclass(frozen=True)
class FormulaCheck:
    name: str
    points: int
    max_rel_error: float
    worst: dict
    passed: bool


def _rel(a: float, b: float) -> float:
    if abs(a) < ZERO_ATOL and abs(b) < ZERO_ATOL:
        return 0.0
    return abs(a - b) / max(abs(b), ZERO_ATOL)


def _dose(rng) -> float:
    return float(10 ** rng.uniform(-2, 1))


def _r1(rng, n: float, i: int) -> float:
    # every tenth point sits on a bound of the feasible interval
    if i % 10 == 0:
        return 0.0
    if i % 10 == 5:
        return ifm.r1_max(n)
    return float(rng.uniform(0, ifm.r1_max(n)))


def _seeded(rng, n: float, r1: float) -> dict:
    """A random split of the dose between alpha and beta when both are feasible."""
    ch, sh = math.cosh(r1), math.sinh(r1)
    rest = n - sh**2
    if rest <= 1e-12 or sh == 0.0:
        return {"n_phi": n}
    # ch^2 |a|^2 + sh^2 |b|^2 - 2 ch sh Re(ab) = rest with beta real and alpha = x + i y
    b = float(rng.uniform(0, math.sqrt(rest) / sh))
    y = float(rng.uniform(-1, 1)) * 0.5 * math.sqrt(rest) / ch
    # solve ch^2 (x^2 + y^2) - 2 ch sh b x + sh^2 b^2 - rest = 0 for x
    qa, qb, qc = ch**2, -2 * ch * sh * b, ch**2 * y * y + sh**2 * b * b - rest
    disc = qb * qb - 4 * qa * qc
    if disc < 0:
        return {"n_phi": n}
    x = (-qb + math.sqrt(disc)) / (2 * qa)
    return {"alpha": complex(x, y), "beta": b}


def _cases_lossless(rng, count):
    for i in range(count):
        n = _dose(rng)
        r1 = _r1(rng, n, i)
        fam = "yurke" if i % 2 else "mandel"
        cfg = ifm.ScenarioConfig(family=fam, r1=r1, r2=float(rng.uniform(0, 2)), theta=float(rng.uniform(0, 6.3)),
                                 phi=float(rng.uniform(0, 6.3)), **_seeded(rng, n, r1))
        yield cfg, an.qfi_lossless(n, r1)


def _cases_internal(rng, count):
    for i in range(count):
        n = _dose(rng)
        r1 = _r1(rng, n, i)
        T = 1.0 if i % 25 == 3 else float(rng.uniform(0.02, 1))
        fam = "yurke" if i % 2 else "mandel"
        cfg = ifm.ScenarioConfig(family=fam, r1=r1, T=T, r2=float(rng.uniform(0, 2)),
                                 theta=float(rng.uniform(0, 6.3)), phi=float(rng.uniform(0, 6.3)), n_phi=n)
        yield cfg, an.qfi_internal(T, n, r1)


def _cases_yurke(rng, count):
    for i in range(count):
        n = _dose(rng)
        r1 = _r1(rng, n, i)
        eta = float(rng.uniform(0.02, 1))
        r2 = 0.0 if i % 10 == 0 else float(rng.uniform(0, 3))
        theta, phi = float(rng.uniform(0, 6.3)), float(rng.uniform(0, 6.3))
        cfg = ifm.ScenarioConfig(family="yurke", r1=r1, r2=r2, theta=theta, phi=phi, eta=eta, n_phi=n)
        yield cfg, an.qfi_yurke_external(eta, n, r1, r2, phi + theta)


def _cases_mandel(discard_a: bool):
    formula = an.qfi_mandel_no_a if discard_a else an.qfi_mandel_full

    def cases(rng, count):
        for i in range(count):
            n = _dose(rng)
            r1 = _r1(rng, n, i)
            eta = float(rng.uniform(0.02, 1))
            r2 = 0.0 if i % 10 == 0 else float(rng.uniform(0, 3))
            cfg = ifm.ScenarioConfig(family="mandel", r1=r1, r2=r2, eta=eta, discard_a=discard_a,
                                     theta=float(rng.uniform(0, 6.3)), phi=float(rng.uniform(0, 6.3)),
                                     gamma=complex(rng.normal(), rng.normal()) * 0.5, n_phi=n)
            yield cfg, formula(eta, n, r1, r2)

    return cases


def _cases_equal_squeezing(rng, count):
    """Approach to the discontinuous point along phi; the formula is the limit."""
    for _ in range(count):
        n = _dose(rng)
        eta = float(rng.uniform(0.02, 1))
        delta = float(10 ** rng.uniform(-3, -2)) * (1 if rng.uniform() < 0.5 else -1)
        r = ifm.r1_max(n)
        cfg = ifm.ScenarioConfig(family="yurke", r1=r, r2=r, eta=eta, phi=math.pi + delta, n_phi=n)
        # exact value along phi differs from the limit at second order in delta
        yield cfg, an.qfi_yurke_external(eta, n, r, r, math.pi + delta)


FORMULAS: dict[str, Callable] = {
    "lossless": _cases_lossless,
    "internal": _cases_internal,
    "yurke_external": _cases_yurke,
    "mandel_no_a": _cases_mandel(True),
    "mandel_full": _cases_mandel(False),
    "equal_squeezing_limit": _cases_equal_squeezing,
}


def check_formula(name: str, points: int = 200, seed: int = 0, rtol: float = RTOL) -> FormulaCheck:
    rng = np.random.default_rng([seed, sorted(FORMULAS).index(name)])
    worst, worst_err = {}, 0.0
    for cfg, expected in FORMULAS[name](rng, points):
        got = scenario_qfi(cfg)
        err = _rel(expected, got)
        if err >= worst_err:
            worst_err = err
            worst = {"config": cfg, "analytic": expected, "numeric": got}
    return FormulaCheck(name, points, worst_err, worst, worst_err <= rtol)


def run_verification(points: int = 200, seed: int = 0, rtol: float = RTOL, names=None) -> list[FormulaCheck]:
    return [check_formula(n, points, seed, rtol) for n in (names or FORMULAS)]
