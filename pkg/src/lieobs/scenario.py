"""Declarative experiment descriptions and their text format.

A scenario file is INI-style text: ``[section]`` headers followed by
``key = value`` lines.  Matrices are written row-major as comma-separated
floats; tabulated inputs list one ``time: entries`` point per indented
continuation line.  Floats are written with ``repr`` so that a file
round-trips exactly.  See ``docs/formats.md`` for the full grammar.
"""

import configparser
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import SCHEMES, InputSignal, IntegratorConfig
from .exceptions import GainsInvalid, ParseError, ScenarioInvalid
from .groups import DATA_TOL, GroupFamily, is_in_algebra, is_in_group, project_algebra, skew3
from .observers import ChainState, ObserverGains, ObserverKind, validate_gains

LOG_METHODS = ("auto", "general", "so3")


@dataclass(eq=False)
class Scenario:
    name: str
    family: GroupFamily
    observer: ObserverKind
    gains: ObserverGains
    plant_X: np.ndarray
    estimate_X: np.ndarray
    plant_xs: tuple = ()
    estimate_xs: tuple = ()
    input: InputSignal = None
    sigma: float = 0.0
    seed: int = None
    replicas: int = 1
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    t_end: float = 10.0
    output_period: float = 0.01
    log_method: str = "auto"

    def __post_init__(self):
        self.observer = ObserverKind(self.observer)
        self.plant_X = np.asarray(self.plant_X, dtype=float)
        self.estimate_X = np.asarray(self.estimate_X, dtype=float)
        self.plant_xs = tuple(np.asarray(x, dtype=float) for x in self.plant_xs)
        self.estimate_xs = tuple(np.asarray(x, dtype=float) for x in self.estimate_xs)
        if self.input is None:
            self.input = InputSignal("zero", self.family.n)

    @property
    def d(self):
        return self.gains.d

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        scalars = ("name", "family", "observer", "gains", "sigma", "seed", "replicas",
                   "integrator", "t_end", "output_period", "log_method", "input")
        if any(getattr(self, k) != getattr(other, k) for k in scalars):
            return False
        arrays = [(self.plant_X, other.plant_X), (self.estimate_X, other.estimate_X)]
        if len(self.plant_xs) != len(other.plant_xs) or len(self.estimate_xs) != len(other.estimate_xs):
            return False
        arrays += list(zip(self.plant_xs, other.plant_xs)) + list(zip(self.estimate_xs, other.estimate_xs))
        return all(np.array_equal(a, b) for a, b in arrays)

    def validate(self):
        """Raise ScenarioInvalid unless the scenario can be simulated."""
        fam = self.family
        report = validate_gains(self.gains)
        if not report.ok:
            raise ScenarioInvalid(f"gains: {report.message}")
        if self.observer.full_state and self.d != 1:
            raise ScenarioInvalid(f"{self.observer.value} takes exactly one gain")
        if not self.observer.full_state and self.d < 2:
            raise ScenarioInvalid(f"{self.observer.value} needs d >= 2 gains")
        for label, xs in (("plant", self.plant_xs), ("estimate", self.estimate_xs)):
            if len(xs) != self.d - 1:
                raise ScenarioInvalid(f"{label} needs {self.d - 1} algebra slots, got {len(xs)}")
        for label, X in (("plant X", self.plant_X), ("estimate X", self.estimate_X)):
            if X.shape != (fam.n, fam.n):
                raise ScenarioInvalid(f"{label} must be {fam.n}x{fam.n}")
            if not is_in_group(X, fam, DATA_TOL):
                raise ScenarioInvalid(f"{label} is not in {fam} within {DATA_TOL:g}")
        for label, x in [("plant x", x) for x in self.plant_xs] + [("estimate x", x) for x in self.estimate_xs]:
            if x.shape != (fam.n, fam.n) or not is_in_algebra(x, fam, DATA_TOL):
                raise ScenarioInvalid(f"{label} slot is not in the Lie algebra of {fam}")
        if self.input.n != fam.n:
            raise ScenarioInvalid("input dimension does not match the group")
        if self.input.kind == "constant" and not is_in_algebra(self.input.value, fam, DATA_TOL):
            raise ScenarioInvalid("constant input is not in the Lie algebra")
        if self.input.kind == "tabulated" and not all(
            is_in_algebra(m, fam, DATA_TOL) for _, m in self.input.table
        ):
            raise ScenarioInvalid("tabulated input leaves the Lie algebra")
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise ScenarioInvalid("sigma must be finite and nonnegative")
        if self.sigma > 0 and self.seed is None:
            raise ScenarioInvalid("a seed is required when sigma > 0")
        if self.sigma > 0 and not (fam.tag == "SO" and fam.n == 3):
            raise ScenarioInvalid("measurement noise is only defined on SO(3)")
        if self.replicas < 1:
            raise ScenarioInvalid("replicas must be at least 1")
        if self.log_method not in LOG_METHODS:
            raise ScenarioInvalid(f"log_method must be one of {LOG_METHODS}")
        if not (self.t_end > 0 and self.output_period > 0):
            raise ScenarioInvalid("t_end and output_period must be positive")
        for num, den, what in ((self.output_period, self.integrator.dt, "output_period / dt"),
                               (self.t_end, self.output_period, "t_end / output_period")):
            r = num / den
            if abs(r - round(r)) > 1e-9 * max(1.0, r) or round(r) < 1:
                raise ScenarioInvalid(f"{what} must be a positive integer, got {r:g}")
        return self

    def plant_state(self):
        """Validated plant initial state, snapped onto the group/algebra."""
        return ChainState(self.family.reproject(self.plant_X),
                          tuple(project_algebra(x, self.family) for x in self.plant_xs))

    def estimate_state(self):
        return ChainState(self.family.reproject(self.estimate_X),
                          tuple(project_algebra(x, self.family) for x in self.estimate_xs))

    def seeds(self, count=None):
        count = self.replicas if count is None else count
        if self.sigma == 0:
            return None
        return [self.seed + i for i in range(count)]

    def with_overrides(self, dt=None, t_end=None):
        sc = self
        if dt is not None:
            sc = replace(sc, integrator=replace(sc.integrator, dt=float(dt)))
        if t_end is not None:
            sc = replace(sc, t_end=float(t_end))
        return sc


# -- text format ----------------------------------------------------------------

def _fmt(x):
    return repr(float(x))


def _fmt_matrix(M):
    return ", ".join(_fmt(v) for v in np.asarray(M, dtype=float).ravel())


def serialize(scenario):
    sc = scenario
    lines = [
        "[scenario]",
        f"name = {sc.name}",
        f"family = {sc.family}",
        f"observer = {sc.observer.value}",
        f"gains = {', '.join(_fmt(a) for a in sc.gains.coefficients)}",
        f"sigma = {_fmt(sc.sigma)}",
        f"seed = {'none' if sc.seed is None else int(sc.seed)}",
        f"replicas = {int(sc.replicas)}",
        f"t_end = {_fmt(sc.t_end)}",
        f"output_period = {_fmt(sc.output_period)}",
        f"log_method = {sc.log_method}",
        "",
        "[integrator]",
        f"scheme = {sc.integrator.scheme}",
        f"dt = {_fmt(sc.integrator.dt)}",
        f"reproject_tol = {_fmt(sc.integrator.reproject_tol)}",
        "",
        "[plant]",
        f"X = {_fmt_matrix(sc.plant_X)}",
    ]
    lines += [f"x{i + 2} = {_fmt_matrix(x)}" for i, x in enumerate(sc.plant_xs)]
    lines += ["", "[estimate]", f"X = {_fmt_matrix(sc.estimate_X)}"]
    lines += [f"x{i + 2} = {_fmt_matrix(x)}" for i, x in enumerate(sc.estimate_xs)]
    lines += ["", "[input]", f"kind = {sc.input.kind}"]
    if sc.input.kind == "constant":
        lines.append(f"value = {_fmt_matrix(sc.input.value)}")
    elif sc.input.kind == "tabulated":
        lines.append("table =")
        lines += [f"    {_fmt(t)}: {_fmt_matrix(m)}" for t, m in sc.input.table]
    return "\n".join(lines) + "\n"


def _key_lines(text):
    """(section, key) -> 1-based line number, for diagnostics."""
    where, section = {}, None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
        elif "=" in line and not raw[:1].isspace() and not line.startswith(("#", ";")):
            where[(section, line.split("=", 1)[0].strip().lower())] = i
    return where


class _Reader:
    def __init__(self, cp, where):
        self.cp = cp
        self.where = where

    def raw(self, section, key, default=configparser._UNSET):
        if not self.cp.has_section(section):
            if default is not configparser._UNSET:
                return default
            raise ParseError(f"missing section [{section}]")
        if not self.cp.has_option(section, key):
            if default is not configparser._UNSET:
                return default
            raise ParseError(f"missing key in [{section}]", field=key)
        return self.cp.get(section, key).strip()

    def fail(self, section, key, msg):
        raise ParseError(msg, line=self.where.get((section, key)), field=f"{section}.{key}")

    def number(self, section, key, default=configparser._UNSET, kind=float):
        text = self.raw(section, key, default)
        if not isinstance(text, str):
            return text
        try:
            return kind(text)
        except ValueError:
            self.fail(section, key, f"expected a {kind.__name__}, got {text!r}")

    def floats(self, section, key):
        text = self.raw(section, key)
        try:
            return [float(v) for v in text.replace("\n", " ").split(",") if v.strip()]
        except ValueError:
            self.fail(section, key, f"expected comma-separated numbers, got {text!r}")

    def matrix(self, section, key, n, text=None):
        text = self.raw(section, key) if text is None else text
        try:
            vals = [float(v) for v in text.split(",") if v.strip()]
        except ValueError:
            self.fail(section, key, "matrix entries must be numbers")
        if len(vals) != n * n:
            self.fail(section, key, f"expected {n * n} entries, got {len(vals)}")
        return np.array(vals).reshape(n, n)


def parse(text):
    """Scenario from its text form; ParseError carries line/field diagnostics."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ParseError(f"malformed scenario text: {exc}", line=getattr(exc, "lineno", None)) from exc
    r = _Reader(cp, _key_lines(text))
    try:
        family = GroupFamily.parse(r.raw("scenario", "family"))
    except ValueError as exc:
        r.fail("scenario", "family", str(exc))
    n = family.n
    try:
        observer = ObserverKind(r.raw("scenario", "observer"))
    except ValueError:
        r.fail("scenario", "observer", f"unknown observer {r.raw('scenario', 'observer')!r}")
    try:
        gains = ObserverGains(r.floats("scenario", "gains"))
    except GainsInvalid as exc:
        r.fail("scenario", "gains", str(exc))
    d = gains.d
    seed_text = r.raw("scenario", "seed", "none")
    if seed_text.lower() == "none":
        seed = None
    else:
        seed = r.number("scenario", "seed", kind=int)
    scheme = r.raw("integrator", "scheme", "rkmk4")
    dt = r.number("integrator", "dt", 1e-3)
    reproject_tol = r.number("integrator", "reproject_tol", 1e-9)
    try:
        integrator = IntegratorConfig(scheme, dt, reproject_tol)
    except ValueError as exc:
        r.fail("integrator", "dt" if scheme in SCHEMES else "scheme", str(exc))

    def slots(section):
        return tuple(r.matrix(section, f"x{i}", n) for i in range(2, d + 1))

    kind = r.raw("input", "kind", "zero")
    try:
        if kind == "constant":
            signal = InputSignal("constant", n, value=r.matrix("input", "value", n))
        elif kind == "tabulated":
            table = []
            for line in r.raw("input", "table").splitlines():
                if not line.strip():
                    continue
                t_text, sep, entries = line.partition(":")
                if not sep:
                    r.fail("input", "table", f"expected 'time: entries', got {line.strip()!r}")
                try:
                    t_val = float(t_text)
                except ValueError:
                    r.fail("input", "table", f"bad time {t_text.strip()!r}")
                table.append((t_val, r.matrix("input", "table", n, entries)))
            signal = InputSignal("tabulated", n, table=table)
        else:
            signal = InputSignal(kind, n)
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        r.fail("input", "kind", str(exc))

    return Scenario(
        name=r.raw("scenario", "name"),
        family=family,
        observer=observer,
        gains=gains,
        plant_X=r.matrix("plant", "X", n),
        estimate_X=r.matrix("estimate", "X", n),
        plant_xs=slots("plant"),
        estimate_xs=slots("estimate"),
        input=signal,
        sigma=r.number("scenario", "sigma", 0.0),
        seed=seed,
        replicas=r.number("scenario", "replicas", 1, kind=int),
        integrator=integrator,
        t_end=r.number("scenario", "t_end", 10.0),
        output_period=r.number("scenario", "output_period", 0.01),
        log_method=r.raw("scenario", "log_method", "auto"),
    )


def load(path):
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def dump(scenario, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(scenario))


# -- built-in studies -----------------------------------------------------------

# initial conditions as printed, 4 decimals included
R0_KINEMATIC = np.array([
    [0.6330, -0.1116, -0.7660],
    [0.7128, -0.3020, 0.6330],
    [-0.3020, -0.9467, -0.1116],
])
R0_DYNAMIC = np.array([
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [1.0, 0.0, 0.0],
])
OMEGA0_DYNAMIC = skew3([1.0, 1.0, 1.0])

SO3 = GroupFamily("SO", 3)


def lfso_scenario(observer, sigma=0.0, seed=None, replicas=1, a0=1.0, t_end=10.0, name=None):
    return Scenario(
        name=name or f"lfso-{observer.split('_')[1]}-sigma{sigma:g}",
        family=SO3,
        observer=observer,
        gains=ObserverGains((a0,)),
        plant_X=R0_KINEMATIC,
        estimate_X=np.eye(3),
        input=InputSignal.sinusoid(),
        sigma=sigma,
        seed=seed,
        replicas=replicas,
        t_end=t_end,
    )


def lpso_scenario(observer, sigma=0.0, seed=None, replicas=1, gains=(1.0, 2.0), t_end=20.0, name=None):
    return Scenario(
        name=name or f"lpso-{observer.split('_')[1]}-sigma{sigma:g}",
        family=SO3,
        observer=observer,
        gains=ObserverGains(gains),
        plant_X=R0_DYNAMIC,
        estimate_X=np.eye(3),
        plant_xs=(OMEGA0_DYNAMIC,),
        estimate_xs=(np.zeros((3, 3)),),
        input=InputSignal.sinusoid(),
        sigma=sigma,
        seed=seed,
        replicas=replicas,
        t_end=t_end,
    )


def builtin(name):
    """Scenario list for a built-in study name."""
    if name == "fig2-noiseless-lfso":
        return [lfso_scenario(k, name=f"fig2-{k}") for k in ("lfso_passive", "lfso_direct")]
    if name == "fig3-noisy-lfso":
        return [lfso_scenario(k, sigma=0.4, seed=1, replicas=50, name=f"fig3-{k}")
                for k in ("lfso_passive", "lfso_direct")]
    if name == "fig4-lpso-sweep":
        out = []
        for sigma in (0.0, 0.2, 0.4):
            for k in ("lpso_direct", "lpso_passive"):
                out.append(lpso_scenario(k, sigma=sigma, seed=None if sigma == 0 else 1,
                                         name=f"fig4-{k}-sigma{sigma:g}"))
        return out
    raise KeyError(name)


BUILTINS = {
    "fig2-noiseless-lfso": "passive and direct LFSO on SO(3), printed initial data, no noise",
    "fig3-noisy-lfso": "passive and direct LFSO with sigma = 0.4 output noise, 50 seeds",
    "fig4-lpso-sweep": "direct and passive LPSO on SO(3) for sigma in {0, 0.2, 0.4}",
}
