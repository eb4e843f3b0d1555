"""Run specifications: one INI document per run, one scenario per document.

Sections
--------
``[run]``       command, out, cutoff, r2_cap, jobs
``[scenario]``  ScenarioConfig fields; ``r1 = max`` pins r1 to the dose bound
``[optimize]``  r1, r2, phase, tie_r2, backend, route, tol
``[sweep]``     axis, values or start/stop/num[/spacing], series_axis, series_values, kind, companion
``[cfi]``       phi_start, phi_stop, num, step, saturate, variants, detected
``[verify]``    points, seed, rtol
``[plot]``      y, normalize, xlabel, ylabel, logx, title
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .interferometers import ScenarioConfig
from .optimize import BACKENDS, InnerSpec
from .qfi import ROUTES

COMMANDS = ("qfi", "cfi", "optimize", "sweep", "verify")
SWEEP_KINDS = ("optimize", "threshold")
CFI_VARIANTS = ("as_configured", "no_a", "all")
FIGURE_DIR = "figures"

_COMPLEX = {"alpha", "beta", "gamma"}
_BOOL = {"discard_a"}
_SCENARIO = {f.name for f in fields(ScenarioConfig)}

_KEYS = {
    "run": {"command", "out", "cutoff", "r2_cap", "jobs", "description"},
    "scenario": _SCENARIO,
    "optimize": {"r1", "r2", "phase", "tie_r2", "backend", "route", "tol"},
    "sweep": {"axis", "values", "start", "stop", "num", "spacing", "series_axis", "series_values", "kind",
              "companion", "numeric"},
    "cfi": {"phi_start", "phi_stop", "num", "step", "saturate", "variants", "detected"},
    "verify": {"points", "seed", "rtol"},
    "plot": {"y", "normalize", "xlabel", "ylabel", "logx", "logy", "title"},
}


class ConfigError(ValueError):
    """Bad run specification; the message carries file, line, section and key."""

    def __init__(self, message: str, source: str = "<config>", line: int | None = None,
                 section: str | None = None, key: str | None = None):
        self.source, self.line, self.section, self.key = source, line, section, key
        where = source if line is None else f"{source}:{line}"
        field_ = "" if section is None else f" [{section}]" + ("" if key is None else f" {key}")
        super().__init__(f"{where}:{field_} {message}")


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple
    kind: str = "optimize"
    series_axis: str | None = None
    series_values: tuple = ()
    companion: bool = False
    numeric: bool = True  # threshold sweeps: also bisect the numeric optimum


@dataclass(frozen=True)
class CfiSpec:
    phis: tuple
    step: float = 1e-4
    saturate: bool = True
    variants: tuple = ("as_configured",)
    detected: tuple | None = None


@dataclass(frozen=True)
class VerifySpec:
    points: int = 200
    seed: int = 0
    rtol: float = 1e-6


@dataclass(frozen=True)
class PlotSpec:
    y: tuple | None = None  # None: every Fisher-information column of the table
    normalize: str | None = None
    xlabel: str | None = None
    ylabel: str | None = None
    logx: bool = False
    logy: bool = False
    title: str | None = None


@dataclass(frozen=True)
class RunSpec:
    command: str
    scenario: ScenarioConfig = ScenarioConfig()
    inner: InnerSpec = InnerSpec(r1=False)
    out: str | None = None
    cutoff: int = 12
    jobs: int = 1
    sweep: SweepSpec | None = None
    cfi: CfiSpec | None = None
    verify: VerifySpec = VerifySpec()
    plot: PlotSpec = PlotSpec()
    description: str = ""
    source: str = "<config>"
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; expected one of {COMMANDS}", self.source)
        if self.cutoff < 1:
            raise ConfigError("cutoff must be at least 1", self.source)
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1", self.source)
        if self.command == "sweep" and self.sweep is None:
            raise ConfigError("command 'sweep' needs a [sweep] section", self.source)
        if self.command == "cfi" and self.cfi is None:
            raise ConfigError("command 'cfi' needs a [cfi] section", self.source)

    def scenario_for_run(self) -> ScenarioConfig:
        """Scenario with settings that the optimisation spec pins (r1 at its bound, r2 tied)."""
        cfg = self.scenario
        if self.inner.r1_at_max:
            from .interferometers import r1_max

            cfg = cfg.replace(r1=r1_max(cfg.n_phi))
        if self.inner.tie_r2:
            cfg = cfg.replace(r2=cfg.r1)
        return cfg


def _line_index(text: str) -> dict:
    """(section, key) -> line number, and section -> header line number."""
    index, section = {}, None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            index[(section, None)] = no
            continue
        m = re.match(r"^([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section is not None and not raw[:1].isspace():
            index[(section, m.group(1).strip())] = no
    return index


class _Reader:
    """Typed access to a parsed document, reporting the line of every bad field."""

    def __init__(self, parser: configparser.ConfigParser, index: dict, source: str):
        self.parser, self.index, self.source = parser, index, source

    def error(self, message: str, section: str, key: str | None = None) -> ConfigError:
        line = self.index.get((section, key), self.index.get((section, None)))
        return ConfigError(message, self.source, line, section, key)

    def has(self, section: str, key: str | None = None) -> bool:
        if key is None:
            return self.parser.has_section(section)
        return self.parser.has_option(section, key)

    def raw(self, section: str, key: str) -> str:
        return self.parser.get(section, key).strip()

    def _convert(self, section, key, kind, convert, default):
        if not self.has(section, key):
            return default
        text = self.raw(section, key)
        try:
            return convert(text)
        except (ValueError, TypeError) as exc:
            raise self.error(f"expected {kind}, got {text!r} ({exc})", section, key) from None

    def real(self, section, key, default=None):
        def conv(s):
            v = float(s)
            if not math.isfinite(v):
                raise ValueError("not finite")
            return v

        return self._convert(section, key, "a real number", conv, default)

    def integer(self, section, key, default=None):
        return self._convert(section, key, "an integer", int, default)

    def complex_(self, section, key, default=None):
        return self._convert(section, key, "a complex number such as 1.5 or 0.3+0.2j",
                             lambda s: complex(s.replace(" ", "")), default)

    def boolean(self, section, key, default=None):
        def conv(s):
            low = s.lower()
            if low not in configparser.ConfigParser.BOOLEAN_STATES:
                raise ValueError("use yes/no, true/false, on/off or 1/0")
            return configparser.ConfigParser.BOOLEAN_STATES[low]

        return self._convert(section, key, "a boolean", conv, default)

    def reals(self, section, key, default=None):
        return self._convert(section, key, "a comma-separated list of reals",
                             lambda s: tuple(float(x) for x in s.split(",") if x.strip()), default)

    def words(self, section, key, default=None):
        return self._convert(section, key, "a comma-separated list",
                             lambda s: tuple(x.strip() for x in s.split(",") if x.strip()), default)

    def choice(self, section, key, options, default=None):
        value = self._convert(section, key, "a name", str, default)
        if value is not None and value not in options:
            raise self.error(f"{value!r} is not one of {tuple(options)}", section, key)
        return value


def _check_known(reader: _Reader) -> None:
    for section in reader.parser.sections():
        if section not in _KEYS:
            raise reader.error(f"unknown section; expected one of {tuple(_KEYS)}", section)
        for key in reader.parser.options(section):
            if key not in _KEYS[section]:
                raise reader.error(f"unknown key; expected one of {sorted(_KEYS[section])}", section, key)


def _scenario(reader: _Reader) -> tuple[ScenarioConfig, bool]:
    kwargs, r1_at_max = {}, False
    if not reader.has("scenario"):
        return ScenarioConfig(), False
    for key in reader.parser.options("scenario"):
        if key == "family":
            kwargs[key] = reader.raw("scenario", key)
        elif key in _COMPLEX:
            kwargs[key] = reader.complex_("scenario", key)
        elif key in _BOOL:
            kwargs[key] = reader.boolean("scenario", key)
        elif key == "r1" and reader.raw("scenario", key).lower() == "max":
            r1_at_max = True
        else:
            kwargs[key] = reader.real("scenario", key)
    try:
        cfg = ScenarioConfig(**kwargs)
    except ValueError as exc:
        raise reader.error(str(exc), "scenario") from None
    if r1_at_max and cfg.n_phi is None:
        raise reader.error("r1 = max needs a dose target n_phi", "scenario", "r1")
    return cfg, r1_at_max


def _inner(reader: _Reader, r1_at_max: bool, r2_cap: float) -> InnerSpec:
    s = "optimize"
    opts = dict(
        r1=reader.boolean(s, "r1", False),
        r2=reader.boolean(s, "r2", False),
        phase=reader.boolean(s, "phase", False),
        tie_r2=reader.boolean(s, "tie_r2", False),
        backend=reader.choice(s, "backend", BACKENDS, "numeric"),
        route=reader.choice(s, "route", ("auto",) + tuple(r for r in ROUTES if r != "analytic"), "auto"),
        r2_cap=r2_cap,
    )
    tol = reader.real(s, "tol")
    if tol is not None:
        if tol <= 0:
            raise reader.error("tolerance must be positive", s, "tol")
        opts["tol"] = tol
    if r1_at_max and opts["r1"]:
        raise reader.error("r1 is searched here but pinned by 'r1 = max' in [scenario]", s, "r1")
    opts["r1_at_max"] = r1_at_max
    try:
        return InnerSpec(**opts)
    except ValueError as exc:
        raise reader.error(str(exc), s) from None


def _grid(reader: _Reader, section: str, start_key: str, stop_key: str) -> tuple | None:
    start, stop = reader.real(section, start_key), reader.real(section, stop_key)
    num = reader.integer(section, "num")
    if start is None and stop is None and num is None:
        return None
    if None in (start, stop, num):
        raise reader.error(f"a range needs {start_key}, {stop_key} and num", section)
    if num < 1:
        raise reader.error("num must be at least 1", section, "num")
    spacing = reader.choice(section, "spacing", ("linear", "log"), "linear") if section == "sweep" else "linear"
    if spacing == "log":
        if start <= 0 or stop <= 0:
            raise reader.error("log spacing needs positive start and stop", section, "spacing")
        return tuple(float(v) for v in np.geomspace(start, stop, num))
    return tuple(float(v) for v in np.linspace(start, stop, num))


def _monotone(reader: _Reader, values: tuple, section: str, key: str) -> tuple:
    if not values:
        raise reader.error("is empty", section, key)
    d = np.diff(values)
    if len(values) > 1 and not (np.all(d > 0) or np.all(d < 0)):
        raise reader.error("must be strictly monotone", section, key)
    return values


def _sweep(reader: _Reader) -> SweepSpec | None:
    s = "sweep"
    if not reader.has(s):
        return None
    axis = reader.raw(s, "axis") if reader.has(s, "axis") else None
    kind = reader.choice(s, "kind", SWEEP_KINDS, "optimize")
    if kind == "threshold":
        axis = axis or "n_phi"
        if axis != "n_phi":
            raise reader.error("threshold sweeps run over n_phi", s, "axis")
    if axis is None:
        raise reader.error("missing sweep axis", s)
    if axis not in _SCENARIO or axis in _COMPLEX | _BOOL | {"family"}:
        raise reader.error(f"{axis!r} is not a real-valued scenario field", s, "axis")
    listed = reader.reals(s, "values")
    ranged = _grid(reader, s, "start", "stop")
    if (listed is None) == (ranged is None):
        raise reader.error("give either 'values' or 'start', 'stop' and 'num'", s)
    values = _monotone(reader, listed if listed is not None else ranged, s, "values" if listed else "start")
    series_axis = reader.raw(s, "series_axis") if reader.has(s, "series_axis") else None
    series_values = reader.reals(s, "series_values", ())
    if (series_axis is None) != (not series_values):
        raise reader.error("series_axis and series_values go together", s)
    if series_axis is not None:
        if series_axis not in _SCENARIO or series_axis in _COMPLEX | _BOOL | {"family"} or series_axis == axis:
            raise reader.error(f"{series_axis!r} cannot be a series axis here", s, "series_axis")
    return SweepSpec(axis, values, kind, series_axis, series_values,
                     reader.boolean(s, "companion", False), reader.boolean(s, "numeric", True))


def _cfi(reader: _Reader) -> CfiSpec | None:
    s = "cfi"
    if not reader.has(s):
        return None
    phis = _grid(reader, s, "phi_start", "phi_stop")
    if phis is None:
        raise reader.error("needs phi_start, phi_stop and num", s)
    step = reader.real(s, "step", 1e-4)
    if step <= 0:
        raise reader.error("finite-difference step must be positive", s, "step")
    variants = reader.words(s, "variants", ("as_configured",))
    for v in variants:
        if v not in CFI_VARIANTS:
            raise reader.error(f"unknown variant {v!r}; expected some of {CFI_VARIANTS}", s, "variants")
    detected = reader._convert(s, "detected", "a comma-separated list of mode indices",
                               lambda t: tuple(int(x) for x in t.split(",") if x.strip()), None)
    return CfiSpec(phis, step, reader.boolean(s, "saturate", True), variants, detected)


def _verify(reader: _Reader) -> VerifySpec:
    s = "verify"
    spec = VerifySpec(reader.integer(s, "points", 200), reader.integer(s, "seed", 0), reader.real(s, "rtol", 1e-6))
    if spec.points < 1:
        raise reader.error("points must be at least 1", s, "points")
    if spec.rtol <= 0:
        raise reader.error("rtol must be positive", s, "rtol")
    return spec


def _plot(reader: _Reader) -> PlotSpec:
    s = "plot"
    text = {k: (reader.raw(s, k) if reader.has(s, k) else None) for k in ("normalize", "xlabel", "ylabel", "title")}
    return PlotSpec(reader.words(s, "y"), text["normalize"], text["xlabel"], text["ylabel"],
                    reader.boolean(s, "logx", False), reader.boolean(s, "logy", False), text["title"])


def parse(text: str, source: str = "<config>", command: str | None = None) -> RunSpec:
    """Parse a run document. ``command`` overrides the one in ``[run]``."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                       empty_lines_in_values=False)
    parser.optionxform = str  # field names are case sensitive (T vs t)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if isinstance(exc, configparser.MissingSectionHeaderError):
            msg = "a '[section]' header must come first"
        elif isinstance(exc, configparser.ParsingError) and exc.errors:
            line = exc.errors[0][0]
            msg = f"cannot parse {text.splitlines()[line - 1].strip()!r} (expected 'key = value' or '[section]')"
        else:
            msg = exc.message.splitlines()[0] if hasattr(exc, "message") else str(exc)
        raise ConfigError(f"syntax error: {msg}", source, line) from None
    reader = _Reader(parser, _line_index(text), source)
    _check_known(reader)
    cmd = command or (reader.raw("run", "command") if reader.has("run", "command") else None)
    if cmd is None:
        raise ConfigError("no command given (set [run] command or pass one on the command line)", source)
    if cmd not in COMMANDS:
        raise reader.error(f"unknown command {cmd!r}; expected one of {COMMANDS}", "run", "command")
    r2_cap = reader.real("run", "r2_cap", 5.0)
    if r2_cap < 0:
        raise reader.error("r2 cap must be non-negative", "run", "r2_cap")
    scenario, r1_at_max = _scenario(reader)
    inner = _inner(reader, r1_at_max, r2_cap)
    if (inner.r1 or inner.r1_at_max) and scenario.n_phi is None:
        raise reader.error("optimising r1 needs a dose target n_phi", "scenario")
    return RunSpec(
        command=cmd,
        scenario=scenario,
        inner=inner,
        out=reader.raw("run", "out") if reader.has("run", "out") else None,
        cutoff=reader.integer("run", "cutoff", 12),
        jobs=reader.integer("run", "jobs", 1),
        sweep=_sweep(reader),
        cfi=_cfi(reader),
        verify=_verify(reader),
        plot=_plot(reader),
        description=reader.raw("run", "description") if reader.has("run", "description") else "",
        source=source,
    )


def load(path: str | Path, command: str | None = None) -> RunSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    return parse(text, str(path), command)


def _figures():
    return resources.files("gaussqfi") / FIGURE_DIR


def figure_ids() -> list[str]:
    return sorted(p.name[:-4] for p in _figures().iterdir() if p.name.endswith(".ini"))


def load_figure(figure_id: str, command: str | None = None) -> RunSpec:
    """Run spec shipped with the package for one figure panel."""
    entry = _figures() / f"{figure_id}.ini"
    if not entry.is_file():
        raise ConfigError(f"unknown figure id {figure_id!r}; available: {', '.join(figure_ids())}", "--seed-figures")
    return parse(entry.read_text(), f"figure:{figure_id}", command)


def dump_scenario(cfg: ScenarioConfig) -> str:
    """``[scenario]`` section for a config, in full-precision decimals."""
    lines = ["[scenario]"]
    for f in fields(ScenarioConfig):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        if isinstance(value, bool):
            text = "yes" if value else "no"
        elif isinstance(value, complex):
            text = repr(value.real) if value.imag == 0 else repr(value).strip("()")
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"
