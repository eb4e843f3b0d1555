"""Dose-constrained maximisation of the QFI and one-parameter sweeps.

All searches are 1-D golden-section searches with the bracket endpoints
evaluated explicitly; joint searches are nested with the phase innermost.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Sequence

import numpy as np

from . import analytic
from . import interferometers as ifm
from .qfi import circuit_qfi

INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
R1_TOL = 1e-8
PHASE_TOL = 1e-10
PHASE_GRID = 256
MAX_ITER = 200
TIE_TOL = 1e-9
SNAP_RTOL = 1e-12
BACKENDS = ("numeric", "analytic")


class NonFiniteObjective(ValueError):
    def __init__(self, name: str, x: float, value: float):
        self.name, self.x, self.value = name, x, value
        super().__init__(f"objective returned {value} at {name}={x:.12g}")


@dataclass(frozen=True)
class OptimizationResult:
    best_value: float
    best_params: dict
    evaluations: int
    converged: bool
    degenerate: bool = False
    alternatives: tuple = ()  # other argmax values within TIE_TOL


@dataclass(frozen=True)
class SweepPoint:
    value: float
    result: OptimizationResult | None
    n_phi: float | None
    snl: float | None
    mzi: float | None
    error: str | None = None
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SweepResult:
    axis: str
    values: tuple
    points: tuple

    @property
    def results(self) -> list:
        return [p.result for p in self.points]

    def column(self, name: str) -> np.ndarray:
        out = []
        for p in self.points:
            if name in p.extra:
                out.append(p.extra[name])
            elif name in ("qfi", "best_value"):
                out.append(np.nan if p.result is None else p.result.best_value)
            elif name in ("n_phi", "snl", "mzi"):
                v = getattr(p, name)
                out.append(np.nan if v is None else v)
            else:
                out.append(np.nan if p.result is None else p.result.best_params.get(name, np.nan))
        return np.array(out, dtype=float)


def _checked(f: Callable[[float], float], name: str):
    count = [0]

    def wrapped(x: float) -> float:
        count[0] += 1
        v = float(f(x))
        if not math.isfinite(v):
            raise NonFiniteObjective(name, x, v)
        return v

    return wrapped, count


def golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float, name: str = "x"):
    """Maximise ``f`` on ``[lo, hi]``; returns ``(x, f(x), evaluations, converged)``.

    Both endpoints are always candidates, so a boundary optimum is returned exactly.
    """
    f, count = _checked(f, name)
    if hi < lo:
        raise ValueError(f"empty bracket [{lo}, {hi}]")
    f_lo = f(lo)
    if hi == lo:
        return lo, f_lo, count[0], True
    f_hi = f(hi)
    a, b = lo, hi
    c, d = b - INV_GOLDEN * (b - a), a + INV_GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > tol and it < MAX_ITER:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_GOLDEN * (b - a)
            fd = f(d)
        it += 1
    x, fx = max([(lo, f_lo), (hi, f_hi), (c, fc), (d, fd)], key=lambda t: t[1])
    # ties to roundoff go to the boundary: near a flat endpoint the bracket drifts on noise
    for end, f_end in ((lo, f_lo), (hi, f_hi)):
        if fx - f_end <= SNAP_RTOL * max(1.0, abs(fx)):
            x, fx = end, f_end
            break
    return x, fx, count[0], b - a <= tol


def optimize_r1(objective: Callable[[float], float], n_phi: float, tol: float = R1_TOL) -> OptimizationResult:
    """Maximise over ``0 <= r1 <= arcsinh(sqrt(n_phi))``."""
    if n_phi < 0:
        raise ValueError("n_phi must be non-negative")
    x, fx, n, ok = golden_max(objective, 0.0, ifm.r1_max(n_phi), tol, "r1")
    return OptimizationResult(fx, {"r1": x}, n, ok)


def optimize_r2(objective: Callable[[float], float], cap: float = 5.0, tol: float = R1_TOL) -> OptimizationResult:
    if cap < 0:
        raise ValueError("r2 cap must be non-negative")
    x, fx, n, ok = golden_max(objective, 0.0, cap, tol, "r2")
    return OptimizationResult(fx, {"r2": x}, n, ok)


def optimize_phase(
    objective: Callable[[float], float], n_grid: int = PHASE_GRID, tol: float = PHASE_TOL
) -> OptimizationResult:
    """Maximise a 2 pi-periodic objective: coarse grid, then golden refinement.

    Every grid local maximum within 10% of the best grid value is refined.
    Refined optima that tie (to 1e-9) are degenerate: the smallest phase is
    reported and the others are listed as alternatives.
    """
    f, count = _checked(objective, "varphi")
    step = 2.0 * math.pi / n_grid
    grid = np.arange(n_grid) * step
    vals = np.array([f(x) for x in grid])
    top = vals.max()
    scale = max(1.0, abs(top))
    if top - vals.min() <= 1e-12 * scale:
        return OptimizationResult(float(top), {"varphi": 0.0}, count[0], True, degenerate=True)

    peaks = [k for k in range(n_grid) if vals[k] >= vals[k - 1] and vals[k] >= vals[(k + 1) % n_grid]]
    peaks = [k for k in peaks if vals[k] >= top - 0.1 * abs(top)]
    refined = []
    converged = True
    for k in peaks:
        x, fx, _, ok = golden_max(f, grid[k] - step, grid[k] + step, tol, "varphi")
        refined.append((float(x % (2.0 * math.pi)), fx))
        converged &= ok
    top_f = max(fx for _, fx in refined)
    tied = sorted(t for t in refined if top_f - t[1] <= TIE_TOL * max(1.0, abs(top_f)))
    # degenerate optima: report the smallest phase, the others as alternatives
    best_x, best_f = tied[0]
    alts = []
    for x, _ in tied[1:]:
        if all(abs(x - y) > 10 * step for y in [best_x, *alts]):
            alts.append(float(x))
    return OptimizationResult(best_f, {"varphi": best_x}, count[0], converged, alternatives=tuple(alts))


# scenario level ---------------------------------------------------------------


@dataclass(frozen=True)
class InnerSpec:
    """Which settings are optimised at each point, and how the QFI is evaluated."""

    r1: bool = True
    r2: bool = False
    phase: bool = False
    r2_cap: float = 5.0
    backend: str = "numeric"
    route: str = "auto"
    tol: float = R1_TOL
    r1_at_max: bool = False  # unseeded: r1 = arcsinh(sqrt(n_phi)) when r1 is not searched
    tie_r2: bool = False  # equal squeezing: r2 follows r1

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}; expected one of {BACKENDS}")
        if self.r2_cap < 0:
            raise ValueError("r2 cap must be non-negative")
        if self.tie_r2 and self.r2:
            raise ValueError("r2 cannot be both tied to r1 and searched")
        if self.r1_at_max and self.r1:
            raise ValueError("r1 cannot be both fixed at its maximum and searched")


def analytic_qfi(config: ifm.ScenarioConfig) -> float:
    """Closed-form QFI where one exists for this configuration."""
    dose = ifm.n_phi(config)
    c = config
    if c.family == "mzi":
        return ifm.mzi_reference(dose, c.T, c.eta)
    if c.eta == 1.0:
        return analytic.qfi_internal(c.T, dose, c.r1)
    if c.T == 1.0:
        if c.family == "yurke":
            return analytic.qfi_yurke_external(c.eta, dose, c.r1, c.r2, c.phi + c.theta)
        if c.discard_a:
            return analytic.qfi_mandel_no_a(c.eta, dose, c.r1, c.r2)
        return analytic.qfi_mandel_full(c.eta, dose, c.r1, c.r2)
    raise ValueError("no closed form with both internal and external loss; use the numeric backend")


def scenario_qfi(config: ifm.ScenarioConfig, backend: str = "numeric", route: str = "auto") -> float:
    if backend == "analytic":
        return analytic_qfi(config)
    return circuit_qfi(ifm.build(config), config.phi, route).value


def optimize_scenario(template: ifm.ScenarioConfig, inner: InnerSpec = InnerSpec()) -> OptimizationResult:
    """Nested search: r1 (outer), r2, then the phase ``phi`` (inner)."""
    if template.n_phi is None and (inner.r1 or inner.r1_at_max):
        raise ValueError("optimising r1 needs a dose target n_phi in the scenario")
    if template.family == "mzi":
        inner = replace(inner, r1=False, r2=False, r1_at_max=False, tie_r2=False)
    if inner.r1_at_max:
        template = template.replace(r1=ifm.r1_max(template.n_phi))
    if inner.tie_r2:
        template = template.replace(r2=template.r1)
    total = [0]

    def at_phase(cfg):
        if not inner.phase:
            total[0] += 1
            return scenario_qfi(cfg, inner.backend, inner.route), {}
        res = optimize_phase(lambda p: scenario_qfi(cfg.replace(phi=p), inner.backend, inner.route))
        total[0] += res.evaluations
        return res.best_value, {"phi": res.best_params["varphi"], "degenerate": res.degenerate,
                                "alternatives": res.alternatives}

    def at_r2(cfg):
        if not inner.r2:
            return at_phase(cfg)
        best = {}

        def f(r2):
            v, extra = at_phase(cfg.replace(r2=r2))
            best[r2] = extra
            return v

        x, fx, _, _ = golden_max(f, 0.0, inner.r2_cap, inner.tol, "r2")
        return fx, {"r2": x, **best[x]}

    if inner.r1:
        best = {}

        def g(r1):
            cfg = template.replace(r1=r1, r2=r1) if inner.tie_r2 else template.replace(r1=r1)
            v, extra = at_r2(cfg)
            best[r1] = extra
            return v

        x, fx, _, ok = golden_max(g, 0.0, ifm.r1_max(template.n_phi), inner.tol, "r1")
        params = {"r1": x, **best[x]}
        if inner.tie_r2:
            params["r2"] = x
    else:
        fx, params = at_r2(template)
        ok = True
    params.setdefault("r1", template.r1)
    params.setdefault("r2", template.r2)
    params.setdefault("phi", template.phi)
    final = template.replace(r1=params["r1"], r2=params["r2"], phi=params["phi"])
    resolved = final.resolved()
    params["n_phi"] = ifm.n_phi(final)
    params["alpha_sq"] = abs(complex(resolved.alpha)) ** 2
    degenerate = bool(params.pop("degenerate", False))
    alts = tuple(params.pop("alternatives", ()))
    return OptimizationResult(fx, params, total[0], ok, degenerate, alts)


_CONFIG_FIELDS = {f.name for f in fields(ifm.ScenarioConfig)}
_OPTIMISED = {"r1": "r1", "r2": "r2", "phase": "phi"}


def companion_yurke(cfg: ifm.ScenarioConfig, r2: float, inner: InnerSpec) -> float:
    """Unseeded Yurke QFI (r1 at its maximum, best phase) at a given ``r2``."""
    yurke = ifm.ScenarioConfig(family="yurke", T=cfg.T, eta=cfg.eta, r2=r2, theta=cfg.theta, n_phi=cfg.n_phi)
    spec = InnerSpec(r1=False, r1_at_max=True, phase=True, backend=inner.backend, route=inner.route)
    return optimize_scenario(yurke, spec).best_value


def _sweep_point(args) -> SweepPoint:
    template, axis, value, inner, companion = args
    try:
        cfg = template.replace(**{axis: value})
        res = optimize_scenario(cfg, inner)
        dose = res.best_params["n_phi"]
        extra = {"iq_max": analytic.qfi_max_lossless(dose)}
        if companion:
            extra["companion_qfi"] = companion_yurke(cfg, res.best_params["r2"], inner)
        return SweepPoint(value, res, dose, ifm.snl_reference(dose), ifm.mzi_reference(dose, cfg.T, cfg.eta),
                          extra=extra)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return SweepPoint(value, None, None, None, None, f"{type(exc).__name__}: {exc}")


def sweep(
    template: ifm.ScenarioConfig,
    axis: str,
    values: Sequence[float],
    inner: InnerSpec = InnerSpec(),
    jobs: int = 1,
    companion: bool = False,
) -> SweepResult:
    """Optimise the scenario at every value of ``axis``; failures are kept per point.

    With ``companion`` each point also carries the unseeded Yurke QFI at the
    optimal ``r2`` found for the scenario.
    """
    if axis not in _CONFIG_FIELDS:
        raise ValueError(f"unknown sweep axis {axis!r}")
    for flag, name in _OPTIMISED.items():
        if axis == name and getattr(inner, flag):
            raise ValueError(f"axis {axis!r} is also being optimised")
    if (axis == "r1" and inner.r1_at_max) or (axis == "r2" and inner.tie_r2):
        raise ValueError(f"axis {axis!r} is fixed by the optimisation settings")
    values = tuple(float(v) for v in values)
    if not values:
        raise ValueError("sweep needs at least one value")
    diffs = np.diff(values)
    if len(values) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ValueError("sweep values must be strictly monotone")
    tasks = [(template, axis, v, inner, companion) for v in values]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(_sweep_point, tasks))
    else:
        points = [_sweep_point(t) for t in tasks]
    return SweepResult(axis, values, tuple(points))


def t_critical_numeric(
    n_phi: float, backend: str = "numeric", lo: float = 0.5, hi: float = 1.0, tol: float = 1e-5,
    departure: float = 1e-4,
) -> float:
    """Internal transmission at which the optimal ``r1`` leaves zero (bisection)."""
    template = ifm.ScenarioConfig(family="yurke", n_phi=n_phi)
    inner = InnerSpec(backend=backend)

    def departs(T: float) -> bool:
        res = optimize_scenario(template.replace(T=T), inner)
        return res.best_params["r1"] > departure

    if departs(lo) or not departs(hi):
        raise ArithmeticError(f"optimal r1 does not change branch inside [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if departs(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def t_critical_sweep(n_values: Sequence[float], numeric: bool = True, backend: str = "numeric") -> list[dict]:
    """Closed-form and (optionally) searched critical transmission for each dose."""
    rows = []
    for n in n_values:
        row = {"n_phi": float(n), "t_c_formula": analytic.t_critical(n)}
        if numeric:
            try:
                row["t_c_numeric"] = t_critical_numeric(n, backend=backend)
            except ArithmeticError:
                row["t_c_numeric"] = float("nan")
        rows.append(row)
    return rows


__all__ = [
    "OptimizationResult", "SweepPoint", "SweepResult", "InnerSpec", "NonFiniteObjective",
    "golden_max", "optimize_r1", "optimize_r2", "optimize_phase", "optimize_scenario",
    "analytic_qfi", "scenario_qfi", "sweep", "t_critical_numeric", "t_critical_sweep", "companion_yurke",
]
