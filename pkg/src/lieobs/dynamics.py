"""Plant models, geometric integrators and coupled plant/observer simulation.

The simulation engine is vectorized over a leading batch axis so that seed
sweeps and initial-condition sweeps advance together.  Members that hit the
logarithm branch cut are frozen and their failure time recorded; the rest
carry on.
"""

from dataclasses import dataclass, field

import numpy as np

from .error_functions import safe_log
from .exceptions import BranchCutViolation, DimensionMismatch, ScenarioInvalid, StepFailure
from .groups import GroupFamily, _family, algebra_exp, exp_so3, is_in_group, skew3
from .linalg import commutator, mat_exp, mat_log_principal, operator_norm
from .observers import ChainState, ObserverKind, observer_rhs

SCHEMES = ("lie_euler", "rkmk4", "rk4_project")


# -- inputs -------------------------------------------------------------------

class InputSignal:
    """Algebra-valued input u(t).

    kinds: ``zero``, ``constant`` (``value``), ``paper_sinusoid`` (SO(3)
    only; u(t) = skew(sin t, cos t, 2 sin t)) and ``tabulated`` (piecewise
    linear through ``table`` = [(t, matrix), ...], held constant outside).
    """

    KINDS = ("zero", "constant", "paper_sinusoid", "tabulated")

    def __init__(self, kind="zero", n=3, value=None, table=()):
        if kind not in self.KINDS:
            raise ValueError(f"unknown input kind {kind!r}")
        self.kind = kind
        self.n = int(n)
        self.value = None if value is None else np.asarray(value, dtype=float)
        self.table = tuple((float(t), np.asarray(m, dtype=float)) for t, m in table)
        if kind == "constant" and (self.value is None or self.value.shape != (self.n, self.n)):
            raise ValueError("constant input needs an n x n value")
        if kind == "paper_sinusoid" and self.n != 3:
            raise ValueError("paper_sinusoid is defined on 3x3 matrices")
        if kind == "tabulated":
            if len(self.table) < 1:
                raise ValueError("tabulated input needs at least one point")
            times = [t for t, _ in self.table]
            if any(b <= a for a, b in zip(times, times[1:])):
                raise ValueError("tabulated times must be strictly increasing")
            self._times = np.array(times)
            self._values = np.stack([m for _, m in self.table])

    @classmethod
    def sinusoid(cls):
        return cls("paper_sinusoid", 3)

    def __call__(self, t):
        if self.kind == "zero":
            return np.zeros((self.n, self.n))
        if self.kind == "constant":
            return self.value
        if self.kind == "paper_sinusoid":
            s, c = np.sin(t), np.cos(t)
            return skew3(np.array([s, c, 2.0 * s]))
        i = np.searchsorted(self._times, t, side="right")
        if i == 0:
            return self._values[0]
        if i == len(self._times):
            return self._values[-1]
        t0, t1 = self._times[i - 1], self._times[i]
        w = (t - t0) / (t1 - t0)
        return (1 - w) * self._values[i - 1] + w * self._values[i]

    def __eq__(self, other):
        if not isinstance(other, InputSignal):
            return NotImplemented
        if (self.kind, self.n) != (other.kind, other.n):
            return False
        if (self.value is None) != (other.value is None):
            return False
        if self.value is not None and not np.array_equal(self.value, other.value):
            return False
        return len(self.table) == len(other.table) and all(
            ta == tb and np.array_equal(ma, mb)
            for (ta, ma), (tb, mb) in zip(self.table, other.table)
        )

    def __repr__(self):
        return f"InputSignal({self.kind!r}, n={self.n})"


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str = "rkmk4"
    dt: float = 1e-3
    reproject_tol: float = 1e-9

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")

    def metadata(self):
        return {"scheme": self.scheme, "dt": self.dt, "reproject_tol": self.reproject_tol}


# -- plant --------------------------------------------------------------------

def plant_rhs(state, u):
    """dX/dt = X x_2 (X u when d = 1), dx_i/dt = x_{i+1}, dx_d/dt = u."""
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != state.X.shape[-1]:
        raise DimensionMismatch(f"input {u.shape} does not match state {state.X.shape}")
    if state.d == 1:
        return [state.X @ u]
    out = [state.X @ state.xs[0]]
    out.extend(state.xs[1:])
    out.append(np.broadcast_to(u, state.X.shape).copy())
    return out


# -- integrators --------------------------------------------------------------

def _dexpinv(theta, xi):
    """Truncated inverse derivative of exp for X = X0 exp(theta)."""
    c1 = theta @ xi - xi @ theta
    c2 = theta @ c1 - c1 @ theta
    return xi + 0.5 * c1 + c2 / 12.0


def _body(X, Xdot, family):
    """X^-1 dX/dt; the transpose serves as inverse on orthogonal groups."""
    if family is not None and family.tag == "SO":
        return np.swapaxes(X, -1, -2) @ Xdot
    return np.linalg.solve(X, Xdot)


def _exp(A, family):
    return algebra_exp(A, family) if family is not None else mat_exp(A)


def _rkmk4(states, f, t, h, family):
    c = (0.0, 0.5, 0.5, 1.0)
    a = ((), (0.5,), (0.0, 0.5), (0.0, 0.0, 1.0))
    b = (1 / 6, 1 / 3, 1 / 3, 1 / 6)
    K = []  # per stage: list over states of (group_K, [algebra_k])
    for i in range(4):
        if i == 0:
            stage_states = states
            thetas = [None] * len(states)
        else:
            stage_states, thetas = [], []
            for s_idx, s in enumerate(states):
                th = sum(a[i][j] * K[j][s_idx][0] for j in range(i) if a[i][j]) * h
                xs = tuple(
                    x + h * sum(a[i][j] * K[j][s_idx][1][m] for j in range(i) if a[i][j])
                    for m, x in enumerate(s.xs)
                )
                stage_states.append(ChainState(s.X @ _exp(th, family), xs))
                thetas.append(th)
        derivs = f(t + c[i] * h, tuple(stage_states))
        stage_K = []
        for s, th, dv in zip(stage_states, thetas, derivs):
            xi = _body(s.X, dv[0], family)
            stage_K.append((xi if th is None else _dexpinv(th, xi), list(dv[1:])))
        K.append(stage_K)
    out = []
    for s_idx, s in enumerate(states):
        th = h * sum(b[i] * K[i][s_idx][0] for i in range(4))
        xs = tuple(
            x + h * sum(b[i] * K[i][s_idx][1][m] for i in range(4)) for m, x in enumerate(s.xs)
        )
        out.append(ChainState(s.X @ _exp(th, family), xs))
    return tuple(out)


def _lie_euler(states, f, t, h, family):
    derivs = f(t, states)
    out = []
    for s, dv in zip(states, derivs):
        xi = _body(s.X, dv[0], family)
        xs = tuple(x + h * dx for x, dx in zip(s.xs, dv[1:]))
        out.append(ChainState(s.X @ _exp(h * xi, family), xs))
    return tuple(out)


def _rk4_project(states, f, t, h, family, tol=1e-9):
    def shift(scale, k):
        return tuple(
            ChainState(s.X + scale * dv[0], tuple(x + scale * dx for x, dx in zip(s.xs, dv[1:])))
            for s, dv in zip(states, k)
        )

    k1 = f(t, states)
    k2 = f(t + h / 2, shift(h / 2, k1))
    k3 = f(t + h / 2, shift(h / 2, k2))
    k4 = f(t + h, shift(h, k3))
    out = []
    for idx, s in enumerate(states):
        slots = []
        for m, y in enumerate(s.slots):
            slots.append(y + h / 6 * (k1[idx][m] + 2 * k2[idx][m] + 2 * k3[idx][m] + k4[idx][m]))
        X = slots[0]
        if family is not None and family.tag != "GL":
            bad = ~np.asarray(is_in_group(X, family, tol))
            if np.any(bad):
                X = np.where(bad[..., None, None], family.reproject(X), X)
        out.append(ChainState(X, tuple(slots[1:])))
    return tuple(out)


def _step(states, f, t, config, family):
    if config.scheme == "rkmk4":
        return _rkmk4(states, f, t, config.dt, family)
    if config.scheme == "lie_euler":
        return _lie_euler(states, f, t, config.dt, family)
    return _rk4_project(states, f, t, config.dt, family, config.reproject_tol)


def integrate_step(state, rhs, t, config, family=None):
    """Advance ``state`` by one step of ``config.dt`` from time ``t``.

    ``state`` is a :class:`ChainState` (``rhs(t, state)`` returns its slot
    derivatives) or a tuple of them (``rhs(t, states)`` returns a tuple of
    slot lists).  The group slot of each state evolves on the group; the
    remaining slots are vector-space valued.

    lie_euler: X <- X exp(dt X^-1 dX/dt).  rkmk4: classical RK4 tableau in
    exponential coordinates X = X0 exp(theta) with a two-bracket dexp^-1.
    rk4_project: RK4 in the embedding space, then reprojection onto the
    group when the membership defect exceeds ``config.reproject_tol``.

    Any error raised by ``rhs`` is re-raised as StepFailure at time ``t``.
    """
    family = _family(family) if family is not None else None
    single = isinstance(state, ChainState)
    states = (state,) if single else tuple(state)
    f = (lambda tt, ss: (rhs(tt, ss[0]),)) if single else rhs
    try:
        new = _step(states, f, t, config, family)
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        raise StepFailure(f"step from t={t:.6g} failed: {exc}", t, cause=exc) from exc
    return new[0] if single else new


def integrate(state, rhs, t0, t_end, config, family=None, output_every=1):
    """Fixed-step integration; returns (times, list of states)."""
    n_steps = int(round((t_end - t0) / config.dt))
    times, out = [t0], [state]
    t = t0
    for k in range(1, n_steps + 1):
        state = integrate_step(state, rhs, t, config, family)
        t = t0 + k * config.dt
        if k % output_every == 0:
            times.append(t)
            out.append(state)
    return np.array(times), out


# -- records ------------------------------------------------------------------

@dataclass
class SimRecord:
    t: float
    plant: ChainState
    estimate: ChainState
    Y: np.ndarray
    norms: dict


def norm_columns(d):
    return ["err_state", "err_El", "err_Er", "err_el", "err_er"] + [
        f"err_x{i}" for i in range(2, d + 1)
    ]


@dataclass
class Trajectory:
    """One simulated run sampled at the output period.

    ``norms`` maps each CSV column name to a (T,) array; ``err_el`` and
    ``err_er`` are NaN where the log of the error is undefined.
    """

    t: np.ndarray
    norms: dict
    plant_X: np.ndarray
    plant_xs: list
    est_X: np.ndarray
    est_xs: list
    Y: np.ndarray
    failure_time: float = None
    seed: int = None
    metadata: dict = field(default_factory=dict)

    @property
    def d(self):
        return 1 + len(self.plant_xs)

    def records(self):
        out = []
        for k, tk in enumerate(self.t):
            if not np.isfinite(self.norms["err_state"][k]):
                break
            out.append(
                SimRecord(
                    float(tk),
                    ChainState(self.plant_X[k], tuple(x[k] for x in self.plant_xs)),
                    ChainState(self.est_X[k], tuple(x[k] for x in self.est_xs)),
                    self.Y[k],
                    {name: float(v[k]) for name, v in self.norms.items()},
                )
            )
        return out

    def valid(self):
        """Mask of samples recorded before any failure."""
        return np.isfinite(self.norms["err_state"])


@dataclass
class BatchTrajectory:
    t: np.ndarray
    norms: dict  # name -> (B, T)
    plant_X: np.ndarray  # (B, T, n, n)
    plant_xs: list
    est_X: np.ndarray
    est_xs: list
    Y: np.ndarray
    failure_time: np.ndarray  # (B,), NaN when the member never failed
    seeds: list
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.failure_time)

    def member(self, b):
        ft = self.failure_time[b]
        return Trajectory(
            t=self.t,
            norms={k: v[b] for k, v in self.norms.items()},
            plant_X=self.plant_X[b],
            plant_xs=[x[b] for x in self.plant_xs],
            est_X=self.est_X[b],
            est_xs=[x[b] for x in self.est_xs],
            Y=self.Y[b],
            failure_time=None if np.isnan(ft) else float(ft),
            seed=self.seeds[b],
            metadata=self.metadata,
        )


# -- simulation ---------------------------------------------------------------

def _stack_chain(state, B):
    def rep(a):
        a = np.asarray(a, dtype=float)
        return np.array(np.broadcast_to(a, (B,) + a.shape[-2:])) if a.ndim == 2 else a.copy()

    return ChainState(rep(state.X), tuple(rep(x) for x in state.xs))


def _take(state, idx):
    return ChainState(state.X[idx], tuple(x[idx] for x in state.xs))


def _put(dst, idx, src):
    dst.X[idx] = src.X
    for a, b in zip(dst.xs, src.xs):
        a[idx] = b


def run_batch(
    kind,
    gains,
    family,
    plant0,
    est0,
    u,
    sigma=0.0,
    seeds=None,
    config=IntegratorConfig(),
    t_end=10.0,
    output_period=1e-2,
    log_method="auto",
    batch_size=None,
    store_states=True,
):
    """Integrate plant and observer jointly for a batch of replicas.

    Plant and estimate initial states may be single (broadcast) or stacked
    with a leading batch axis.  The noisy output is Y = X N with a fresh
    N = exp(skew(v)), v ~ Normal(0, sigma^2 I), drawn per member at every
    output sample and held until the next one; Y tracks the plant through
    the integrator's internal stages.  With sigma = 0, Y = X.
    """
    family = _family(family)
    kind = ObserverKind(kind)
    if seeds is not None:
        seeds = list(seeds)
    B = batch_size or (len(seeds) if seeds is not None else None)
    if B is None:
        B = max(
            np.asarray(plant0.X).shape[0] if np.ndim(plant0.X) == 3 else 1,
            np.asarray(est0.X).shape[0] if np.ndim(est0.X) == 3 else 1,
        )
    if seeds is None:
        seeds = [None] * B
    if sigma > 0 and not (family.tag == "SO" and family.n == 3):
        raise ScenarioInvalid(f"measurement noise is only defined on SO(3), not {family}")
    if sigma > 0 and any(s is None for s in seeds):
        raise ScenarioInvalid("a seed is required for every replica when sigma > 0")
    ratio = output_period / config.dt
    steps_per_out = int(round(ratio))
    if steps_per_out < 1 or abs(ratio - steps_per_out) > 1e-9 * max(1.0, ratio):
        raise ScenarioInvalid("output period must be a whole multiple of dt")
    n_out = int(round(t_end / output_period))
    if abs(n_out * output_period - t_end) > 1e-9 * max(1.0, t_end):
        raise ScenarioInvalid("t_end must be a whole multiple of the output period")

    plant = _stack_chain(plant0, B)
    est = _stack_chain(est0, B)
    d = plant.d
    if est.d != d:
        raise ScenarioInvalid("plant and estimate chains differ in depth")
    n = family.n
    rngs = [np.random.default_rng(s) for s in seeds] if sigma > 0 else None
    eye = np.eye(n)

    T = n_out + 1
    times = np.arange(T) * output_period
    cols = norm_columns(d)
    norms = {c: np.full((B, T), np.nan) for c in cols}
    shape = (B, T, n, n) if store_states else (B, 0, n, n)
    rec_pX = np.full(shape, np.nan)
    rec_px = [np.full(shape, np.nan) for _ in range(d - 1)]
    rec_eX = np.full(shape, np.nan)
    rec_ex = [np.full(shape, np.nan) for _ in range(d - 1)]
    rec_Y = np.full(shape, np.nan)
    failure = np.full(B, np.nan)
    active = np.arange(B)
    N = np.broadcast_to(eye, (B, n, n))

    def record(k):
        idx = active
        if len(idx) == 0:
            return
        X, Xh = plant.X[idx], est.X[idx]
        Xi = np.linalg.inv(X)
        El = Xi @ Xh
        Er = Xh @ Xi
        norms["err_state"][idx, k] = operator_norm(Xh - X)
        norms["err_El"][idx, k] = operator_norm(El - eye)
        norms["err_Er"][idx, k] = operator_norm(Er - eye)
        norms["err_el"][idx, k] = _nan_norm(safe_log(El, family, log_method))
        norms["err_er"][idx, k] = _nan_norm(safe_log(Er, family, log_method))
        for i in range(d - 1):
            norms[f"err_x{i + 2}"][idx, k] = operator_norm(est.xs[i][idx] - plant.xs[i][idx])
        if store_states:
            rec_pX[idx, k] = X
            rec_eX[idx, k] = Xh
            rec_Y[idx, k] = X @ N[idx]
            for i in range(d - 1):
                rec_px[i][idx, k] = plant.xs[i][idx]
                rec_ex[i][idx, k] = est.xs[i][idx]

    for k in range(T):
        if rngs is not None:
            v = np.zeros((B, 3))
            for b in active:
                v[b] = sigma * rngs[b].standard_normal(3)
            N = exp_so3(skew3(v))
        record(k)
        if k == n_out or len(active) == 0:
            break
        for s in range(steps_per_out):
            t = (k * steps_per_out + s) * config.dt
            while len(active):
                Na = N[active]

                def rhs(tt, states, Na=Na):
                    p, e = states
                    uu = u(tt)
                    Y = p.X @ Na
                    return (
                        plant_rhs(p, uu),
                        observer_rhs(kind, e, Y, uu, gains, family, log_method),
                    )

                try:
                    p_new, e_new = _step((_take(plant, active), _take(est, active)), rhs, t, config, family)
                except BranchCutViolation as exc:
                    bad = active[list(exc.indices)] if exc.indices else active
                    failure[bad] = t
                    active = np.setdiff1d(active, bad)
                    continue
                _put(plant, active, p_new)
                _put(est, active, e_new)
                break

    # NaN out samples after each member's failure
    for b in np.flatnonzero(~np.isnan(failure)):
        after = times > failure[b]
        for c in cols:
            norms[c][b, after] = np.nan

    meta = {
        "integrator": config.metadata(),
        "observer": kind.value,
        "family": str(family),
        "sigma": sigma,
        "output_period": output_period,
        "log_method": log_method,
        "noise": "fresh N per output sample, zero-order held; Y = X N evaluated at integrator stages",
    }
    return BatchTrajectory(
        t=times,
        norms=norms,
        plant_X=rec_pX,
        plant_xs=rec_px,
        est_X=rec_eX,
        est_xs=rec_ex,
        Y=rec_Y,
        failure_time=failure,
        seeds=seeds,
        metadata=meta,
    )


def _nan_norm(A):
    bad = np.any(np.isnan(A), axis=(-2, -1))
    out = np.full(A.shape[:-2], np.nan)
    out[~bad] = operator_norm(A[~bad])
    return out


def simulate_batch(scenario, seeds=None, plant_ics=None, estimate_ics=None, store_states=True):
    """Run ``scenario`` for several seeds and/or stacked initial conditions."""
    if seeds is None and scenario.sigma > 0:
        seeds = [scenario.seed]
    plant0 = plant_ics or scenario.plant_state()
    est0 = estimate_ics or scenario.estimate_state()
    B = None
    if seeds is None:
        sizes = [s.X.shape[0] for s in (plant0, est0) if np.ndim(s.X) == 3]
        B = sizes[0] if sizes else 1
    return run_batch(
        scenario.observer,
        scenario.gains,
        scenario.family,
        plant0,
        est0,
        scenario.input,
        sigma=scenario.sigma,
        seeds=seeds,
        config=scenario.integrator,
        t_end=scenario.t_end,
        output_period=scenario.output_period,
        log_method=scenario.log_method,
        batch_size=B,
        store_states=store_states,
    )


def simulate(scenario):
    """Single deterministic run of ``scenario``.

    Raises StepFailure (with the partial trajectory attached) if the
    observer hits the logarithm branch cut.
    """
    traj = simulate_batch(scenario).member(0)
    if traj.failure_time is not None:
        raise StepFailure(
            f"observer step failed at t={traj.failure_time:.6g} (branch cut)",
            traj.failure_time,
            trajectory=traj,
        )
    return traj


def simulate_commutator_pair(E0, u, t_end, config=IntegratorConfig(), output_period=None):
    """Integrate dE/dt = [E, u] and de/dt = [e, u] from e(0) = log E0.

    ``E0`` may be a stack.  Returns ``(t, E_trace, e_trace)`` sampled at
    ``output_period`` (default: every step).
    """
    E0 = np.asarray(E0, dtype=float)
    e0 = mat_log_principal(E0)
    every = 1 if output_period is None else int(round(output_period / config.dt))

    def rhs(t, s):
        uu = u(t)
        return [s.X @ uu - uu @ s.X, commutator(s.xs[0], np.broadcast_to(uu, s.X.shape))]

    times, states = integrate(ChainState(E0, (e0,)), rhs, 0.0, t_end, config, None, every)
    E_trace = np.stack([s.X for s in states])
    e_trace = np.stack([s.xs[0] for s in states])
    return times, E_trace, e_trace


def block_companion(gains, n):
    """Linearization of the chain error system at (I, 0, ..., 0)."""
    a = gains.coefficients
    d = len(a)
    M = np.zeros((d * n, d * n))
    eye = np.eye(n)
    for i in range(d):
        M[i * n:(i + 1) * n, :n] = -a[d - 1 - i] * eye
        if i + 1 < d:
            M[i * n:(i + 1) * n, (i + 1) * n:(i + 2) * n] = eye
    return M


def linearization_spectrum(gains, n):
    """Eigenvalues of the block-companion linearization (d*n of them)."""
    return np.linalg.eigvals(block_companion(gains, n))
