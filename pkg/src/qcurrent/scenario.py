"""Scenario configs and their evaluation into result tables.

A config is an INI file::

    [model]
    tau = 0.1
    K = 2.0
    phi = 0.5235987755982988

    [baths]
    T_a = 0.2
    T_b = 1.0
    g_a = 0.2
    g_b = 0.2

    [run]
    kind = global            ; classical | local | global
    initial = basis-sector:1 ; thermal:T | basis-sector:k | product-coherent:delta
                             ; | maximally-mixed | matrix-file:path.npy
    outputs = current, heat, negativity

    [sweep]                  ; optional
    variable = tau
    start = 0.001
    stop = 0.5
    points = 50
    scale = linear           ; or log
    series = phi             ; optional outer loop
    series_values = 0.1, 0.2
    ratio_T_b = 2.0          ; optional, ties T_b = ratio * T_a

Numbers are plain decimals and are echoed at full precision in the output
header, so a table always records the exact inputs that produced it.
"""

from __future__ import annotations

import configparser
import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__, currents, observables, rotor, steady
from .master_eq import KINDS, BathParams, Generator, build_classical, build_global, build_local
from .numerics import NumericalError, check_density_matrix
from .rotor import RotorParams

MODEL_KEYS = ("tau", "K", "phi")
BATH_KEYS = ("T_a", "T_b", "g_a", "g_b")
VARIABLES = MODEL_KEYS + BATH_KEYS

OUTPUT_COLUMNS = {
    "current": ["J_tun_a", "J_th_a", "J_a", "J_tun_b", "J_th_b", "J_b"],
    "sector_current": [f"{q}_a_{k}" for k in (1, 2, 3) for q in ("J_tun", "J_th", "J")],
    "heat": ["Q_a", "Q_b"],
    "sector_heat": ["Q_b_1", "Q_b_2", "Q_b_3"],
    "negativity": ["N"],
    "sector_negativity": ["N_1", "N_2", "N_3"],
    "ergotropy": ["ergotropy"],
    "mu": ["mu_min_a", "mu_min_b", "mu_12_a"],
    "sector_mu": ["mu_min_a_1", "mu_min_a_2", "mu_min_a_3"],
    "tsm": ["J_tsm_a"],
    "theta": ["theta0_re", "theta0_im", "lambda_1", "lambda_2", "lambda_3"],
    "delta_max": ["delta_max", "N_half_delta_max"],
}
SECTOR_OUTPUTS = ("sector_current", "sector_heat", "sector_negativity", "sector_mu")


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration."""


@dataclass(frozen=True)
class Sweep:
    variable: str
    start: float
    stop: float
    points: int
    scale: str = "linear"
    series: str | None = None
    series_values: tuple[float, ...] = ()
    ratio_T_b: float | None = None

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise ConfigError(f"unknown sweep variable {self.variable!r}")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ConfigError("sweep bounds must be finite")
        if self.points < 2:
            raise ConfigError("sweep needs at least 2 points")
        if self.scale not in ("linear", "log"):
            raise ConfigError("sweep scale must be 'linear' or 'log'")
        if self.scale == "log" and min(self.start, self.stop) <= 0:
            raise ConfigError("log sweep needs positive bounds")
        if self.series is not None:
            if self.series not in VARIABLES or self.series == self.variable:
                raise ConfigError(f"invalid series variable {self.series!r}")
            if not self.series_values:
                raise ConfigError("series needs series_values")
        if self.ratio_T_b is not None:
            if "T_b" in (self.variable, self.series):
                raise ConfigError("ratio_T_b cannot be combined with sweeping T_b")
            if not (math.isfinite(self.ratio_T_b) and self.ratio_T_b > 0):
                raise ConfigError("ratio_T_b must be positive")

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class EvolveSpec:
    t_max: float = 10.0
    dt: float = 1e-2
    samples: int = 11


@dataclass(frozen=True)
class ContinuumSpec:
    Ns: tuple[int, ...] = (11, 31, 101, 301)
    ell: float = 1.0
    mass: float = 1.0
    band: float = 2 * math.pi


@dataclass(frozen=True)
class ScenarioConfig:
    rotor: RotorParams = RotorParams()
    baths: BathParams = BathParams()
    kind: str = "global"
    initial: str = "basis-sector:1"
    outputs: tuple[str, ...] = ("current",)
    sweep: Sweep | None = None
    evolve: EvolveSpec = EvolveSpec()
    continuum: ContinuumSpec = ContinuumSpec()
    source: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        for o in self.outputs:
            if o not in OUTPUT_COLUMNS:
                raise ConfigError(f"unknown output {o!r}")
        parse_initial(self.initial)

    def with_values(self, values: dict) -> "ScenarioConfig":
        r = {k: values[k] for k in MODEL_KEYS if k in values}
        b = {k: values[k] for k in BATH_KEYS if k in values}
        return replace(self, rotor=replace(self.rotor, **r), baths=replace(self.baths, **b))

    def points(self) -> list[dict]:
        """Parameter dictionaries of every sweep point, in output order."""
        if self.sweep is None:
            return [{}]
        s = self.sweep
        outer = [{}] if s.series is None else [{s.series: v} for v in s.series_values]
        pts = [{**o, s.variable: float(v)} for o in outer for v in s.values()]
        if s.ratio_T_b is not None:
            for pt in pts:
                pt["T_b"] = s.ratio_T_b * pt.get("T_a", self.baths.T_a)
        return pts

    def echo(self) -> list[str]:
        lines = [f"model: tau={self.rotor.tau!r} K={self.rotor.K!r} phi={self.rotor.phi!r}",
                 "baths: " + " ".join(f"{k}={getattr(self.baths, k)!r}" for k in BATH_KEYS),
                 f"run: kind={self.kind} initial={self.initial} outputs={','.join(self.outputs)}"]
        if self.sweep is not None:
            s = self.sweep
            line = (f"sweep: variable={s.variable} start={s.start!r} stop={s.stop!r} "
                    f"points={s.points} scale={s.scale}")
            if s.series:
                line += f" series={s.series} values={','.join(repr(v) for v in s.series_values)}"
            if s.ratio_T_b is not None:
                line += f" ratio_T_b={s.ratio_T_b!r}"
            lines.append(line)
        return lines


def parse_initial(spec: str) -> tuple[str, str | None]:
    name, _, arg = spec.partition(":")
    name = name.strip()
    arg = arg.strip() or None
    if name == "maximally-mixed":
        return name, None
    if name in ("thermal", "basis-sector", "product-coherent", "matrix-file") and arg:
        if name == "basis-sector" and arg not in ("1", "2", "3"):
            raise ConfigError("basis-sector index must be 1, 2 or 3")
        if name == "thermal" and arg not in ("T_a", "T_b"):
            if _float(arg, "thermal temperature") <= 0:
                raise ConfigError("thermal temperature must be positive")
        if name == "product-coherent" and not 0 <= _float(arg, "delta") <= 1:
            raise ConfigError("product-coherent delta must lie in [0, 1]")
        return name, arg
    raise ConfigError(f"invalid initial-state spec {spec!r}")


def _float(text: str, what: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"{what}: {text!r} is not a number") from None
    if not math.isfinite(v):
        raise ConfigError(f"{what} must be finite")
    return v


def _floats(text: str, what: str) -> tuple[float, ...]:
    return tuple(_float(t, what) for t in text.split(",") if t.strip())


def parse_config(text: str, source: str = "") -> ScenarioConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str  # keys are case sensitive (K, T_a)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    known = {"model", "baths", "run", "sweep", "evolve", "continuum"}
    unknown = set(cp.sections()) - known
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")

    def section(name, keys):
        if not cp.has_section(name):
            return {}
        extra = set(cp[name]) - set(keys)
        if extra:
            raise ConfigError(f"unknown keys in [{name}]: {sorted(extra)}")
        return dict(cp[name])

    try:
        model = {k: _float(v, k) for k, v in section("model", MODEL_KEYS).items()}
        baths = {k: _float(v, k) for k, v in section("baths", BATH_KEYS).items()}
        rp = RotorParams(**model)
        bp = BathParams(**baths)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    run = section("run", ("kind", "initial", "outputs"))
    kwargs = {}
    if "kind" in run:
        kwargs["kind"] = run["kind"].strip()
    if "initial" in run:
        kwargs["initial"] = run["initial"].strip()
    if "outputs" in run:
        kwargs["outputs"] = tuple(o.strip() for o in run["outputs"].split(",") if o.strip())

    sw = section("sweep", ("variable", "start", "stop", "points", "scale", "series",
                           "series_values", "ratio_T_b"))
    if sw:
        try:
            kwargs["sweep"] = Sweep(
                variable=sw.get("variable", "").strip(),
                start=_float(sw.get("start", "nan"), "start"),
                stop=_float(sw.get("stop", "nan"), "stop"),
                points=int(sw.get("points", "0")),
                scale=sw.get("scale", "linear").strip(),
                series=(sw.get("series") or "").strip() or None,
                series_values=_floats(sw.get("series_values", ""), "series_values"),
                ratio_T_b=_float(sw["ratio_T_b"], "ratio_T_b") if "ratio_T_b" in sw else None,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    ev = section("evolve", ("t_max", "dt", "samples"))
    if ev:
        spec = EvolveSpec(_float(ev.get("t_max", "10"), "t_max"), _float(ev.get("dt", "0.01"), "dt"),
                          int(ev.get("samples", "11")))
        if spec.t_max <= 0 or spec.dt <= 0 or spec.samples < 2:
            raise ConfigError("evolve needs t_max > 0, dt > 0 and samples >= 2")
        kwargs["evolve"] = spec

    co = section("continuum", ("Ns", "ell", "mass", "band"))
    if co:
        try:
            Ns = tuple(int(t) for t in co.get("Ns", "11,31,101,301").split(",") if t.strip())
        except ValueError:
            raise ConfigError("Ns must be a list of integers") from None
        spec = ContinuumSpec(Ns, _float(co.get("ell", "1"), "ell"), _float(co.get("mass", "1"), "mass"),
                             _float(co.get("band", repr(2 * math.pi)), "band"))
        if not Ns or min(Ns) < 1 or spec.ell <= 0 or spec.mass <= 0 or spec.band <= 0:
            raise ConfigError("continuum needs Ns >= 1 and positive ell, mass, band")
        kwargs["continuum"] = spec

    return ScenarioConfig(rotor=rp, baths=bp, source=source, **kwargs)


def load_config(path: str | None) -> ScenarioConfig:
    if path is None:
        return ScenarioConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, source=os.path.basename(path))


def make_generator(cfg: ScenarioConfig) -> Generator:
    if cfg.kind == "global":
        return build_global(cfg.rotor, cfg.baths)
    if cfg.kind == "local":
        return build_local(cfg.rotor, cfg.baths)
    return build_classical(cfg.rotor, cfg.baths).to_generator()


def initial_state(cfg: ScenarioConfig, h: np.ndarray) -> np.ndarray | None:
    """Initial density matrix, or None for a basis-sector request."""
    name, arg = parse_initial(cfg.initial)
    if name == "maximally-mixed":
        return np.eye(9, dtype=complex) / 9
    if name == "thermal":
        T = {"T_a": cfg.baths.T_a, "T_b": cfg.baths.T_b}.get(arg)
        return observables.thermal_state(h, float(arg) if T is None else T)
    if name == "product-coherent":
        return observables.coherent_input(float(arg)).state
    if name == "matrix-file":
        try:
            rho = np.load(arg)
            check_density_matrix(rho, dim=9)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"matrix-file {arg}: {exc}") from None
        return np.asarray(rho, dtype=complex)
    return None


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def evaluate_point(cfg: ScenarioConfig) -> dict:
    """One table row for a fully specified config (no sweep)."""
    gen = make_generator(cfg)
    basis = steady.solve_basis(gen)
    row = {k: getattr(cfg.rotor, k) for k in MODEL_KEYS}
    row.update({k: getattr(cfg.baths, k) for k in BATH_KEYS})
    row["kernel_dim"] = basis.kernel_dim
    sectors_ok = basis.kernel_dim in (1, 3)
    status = "ok"

    rho0 = initial_state(cfg, gen.hamiltonian)
    if rho0 is None:
        k = int(parse_initial(cfg.initial)[1])
        final = basis.state(k) if sectors_ok else None
        if final is None:
            status = "degenerate-sector"
    else:
        final = steady.steady_state(gen, rho0, basis)
    if not sectors_ok and any(o in SECTOR_OUTPUTS for o in cfg.outputs):
        status = "degenerate-sector"

    def cur(rho, particle):
        return currents.edge_current(gen, rho, particle, 1)

    for out in cfg.outputs:
        cols = OUTPUT_COLUMNS[out]
        needs_final = out not in SECTOR_OUTPUTS and out not in ("theta", "delta_max")
        if (needs_final and final is None) or (out in SECTOR_OUTPUTS and not sectors_ok):
            row.update(dict.fromkeys(cols))
            continue
        if out == "current":
            a, b = cur(final, "a"), cur(final, "b")
            vals = [a.tunneling, a.thermal, a.total, b.tunneling, b.thermal, b.total]
        elif out == "sector_current":
            vals = [x for s in basis.states for x in cur(s, "a")]
        elif out == "heat":
            vals = [observables.heat_flux(gen, final, "a"), observables.heat_flux(gen, final, "b")]
        elif out == "sector_heat":
            vals = [observables.heat_flux(gen, s, "b") for s in basis.states]
        elif out == "negativity":
            vals = [observables.negativity(final)]
        elif out == "sector_negativity":
            vals = [observables.negativity(s) for s in basis.states]
        elif out == "ergotropy":
            vals = [observables.ergotropy(final, gen.hamiltonian)]
        elif out == "mu":
            vals = [currents.contextuality_witness(gen, final, "a").min_mh,
                    currents.contextuality_witness(gen, final, "b").min_mh,
                    currents.mh_rate(gen, final, rotor.site_projector("a", 1),
                                     rotor.site_projector("a", 2)).value]
        elif out == "sector_mu":
            vals = [currents.contextuality_witness(gen, s, "a").min_mh for s in basis.states]
        elif out == "tsm":
            vals = [currents.tsm_current(gen, final, rotor.site_projector("a", 1),
                                         rotor.site_projector("a", 2))]
        elif out == "delta_max":
            if cfg.kind != "global":
                raise ConfigError("delta_max output needs the global generator")

            def factory(Ta, Tb):
                return build_global(cfg.rotor, replace(cfg.baths, T_a=Ta, T_b=Tb))

            dm = observables.delta_max(factory, cfg.baths.T_a, cfg.baths.T_b)
            half = steady.steady_state(gen, observables.coherent_input(dm / 2).state, basis)
            vals = [dm, observables.negativity(half)]
        else:  # theta
            if rho0 is None:
                row.update(dict.fromkeys(cols))
                continue
            w = steady.weights(rho0)
            vals = [w.theta0.real, w.theta0.imag, *w.lambdas]
        row.update(zip(cols, vals))
    row["status"] = status
    return row


def _point_task(args):
    cfg, values = args
    return evaluate_point(cfg.with_values(values))


def columns(cfg: ScenarioConfig) -> list[str]:
    cols = list(VARIABLES) + ["kernel_dim", "status"]
    for o in cfg.outputs:
        cols += OUTPUT_COLUMNS[o]
    return cols


def run_scenario(cfg: ScenarioConfig, jobs: int = 1) -> list[dict]:
    """Evaluate every sweep point; rows come back in sweep order for any ``jobs``."""
    tasks = [(cfg, v) for v in cfg.points()]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_point_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return [_point_task(t) for t in tasks]


def render_table(rows: list[dict], cols: list[str], header: list[str]) -> str:
    """CSV text with '#'-prefixed header lines."""
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in rows:
        writer.writerow([_fmt(r.get(c)) for c in cols])
    return buf.getvalue()


def header_lines(command: str, cfg: ScenarioConfig | None, seed: int | None = None) -> list[str]:
    lines = [f"artifact {__version__} qcurrent {command}"]
    if cfg is not None:
        if cfg.source:
            lines.append(f"config: {cfg.source}")
        lines += cfg.echo()
    if seed is not None:
        lines.append(f"seed: {seed}")
    return lines


__all__ = ["ConfigError", "NumericalError", "ScenarioConfig", "Sweep", "columns",
           "evaluate_point", "header_lines", "load_config", "parse_config",
           "render_table", "run_scenario"]
