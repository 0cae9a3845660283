"""Numerical property suite for the observer theory.

Each check returns a :class:`CheckResult` carrying the worst measured
defect over its trial set and the threshold it is held to.  Failures are
report content, never exceptions.
"""

import time
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .dynamics import (
    InputSignal,
    IntegratorConfig,
    integrate,
    linearization_spectrum,
    run_batch,
    simulate_commutator_pair,
)
from .error_functions import closed_form_error_solution, decay_rate_fit
from .groups import GroupFamily, exp_so3, log_so3_closed_form, random_algebra, skew3
from .linalg import mat_exp, mat_log_principal, operator_norm
from .observers import (
    ChainState,
    ObserverGains,
    lfso_direct_rhs,
    lfso_direct_rhs_projection,
    lfso_passive_rhs,
    lfso_passive_rhs_projection,
)
from .scenario import lfso_scenario

# selector names are part of the command-line interface
SELECTORS = ("explog", "lemma6", "lemma7", "prop4", "cor3", "pia", "lemma8")


@dataclass
class CheckResult:
    name: str
    defect: float
    threshold: float
    seconds: float = 0.0
    detail: str = ""

    @property
    def passed(self):
        return bool(np.isfinite(self.defect) and self.defect <= self.threshold)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"{status} {self.name}: worst={self.defect:.3e} threshold={self.threshold:.1e}{extra}"

    def to_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _timed(name, threshold, fn, detail=""):
    t0 = time.perf_counter()
    defect, info = fn()
    return CheckResult(name, float(defect), threshold, time.perf_counter() - t0, info or detail)


# -- exp / log ----------------------------------------------------------------

def _group_samples(family, trials, rng, max_scale=3.0):
    """Algebra elements with norm below max_scale < pi and their exponentials."""
    scales = rng.uniform(0.0, max_scale, trials)
    A = random_algebra(family, rng, trials) * scales[:, None, None]
    return A, mat_exp(A)


def check_explog(family="SO(3)", trials=1000, seed=0):
    """log(exp A) = A and exp(log X) = X on random inputs of one family.

    Inputs have ||A|| < 3 so the principal log recovers A; group samples
    are exponentials of an independent set, so exp(log X) is tested on
    elements whose log was not known in advance.
    """
    family = GroupFamily.parse(family) if isinstance(family, str) else family

    def run():
        rng = np.random.default_rng(seed)
        A, X = _group_samples(family, trials, rng)
        d1 = operator_norm(mat_log_principal(X) - A) / np.maximum(1.0, operator_norm(A))
        B, Z = _group_samples(family, trials, rng)
        Z = Z @ mat_exp(0.1 * random_algebra(family, rng, trials))
        d2 = operator_norm(mat_exp(mat_log_principal(Z)) - Z) / operator_norm(Z)
        return max(d1.max(), d2.max()), f"{trials} trials"

    return _timed(f"explog roundtrip {family}", 1e-9, run)


# -- invariant errors -----------------------------------------------------------

def _trajectory_pairs(t_end=2.0):
    """Recorded (X, Xhat) pairs from the noiseless and a noisy LFSO run."""
    Xs, Xhs = [], []
    for kind, sigma in (("lfso_passive", 0.0), ("lfso_direct", 0.4)):
        sc = lfso_scenario(kind, sigma=sigma, seed=7 if sigma else None, t_end=t_end)
        b = run_batch(sc.observer, sc.gains, sc.family, sc.plant_state(), sc.estimate_state(),
                      sc.input, sigma=sc.sigma, seeds=sc.seeds(), t_end=t_end)
        Xs.append(b.plant_X[0])
        Xhs.append(b.est_X[0])
    return np.concatenate(Xs), np.concatenate(Xhs)


def check_log_error_conjugacy(t_end=2.0, random_trials=200, seed=0):
    """e_r = X e_l X^-1 on recorded trajectory samples and random GL(3) pairs."""

    def run():
        X, Xh = _trajectory_pairs(t_end)
        rng = np.random.default_rng(seed)
        G = GroupFamily("GL", 3)
        Xr = mat_exp(random_algebra(G, rng, random_trials, 1.0))
        Xhr = Xr @ mat_exp(random_algebra(G, rng, random_trials, 1.0))
        X = np.concatenate([X, Xr])
        Xh = np.concatenate([Xh, Xhr])
        Xi = np.linalg.inv(X)
        el = mat_log_principal(Xi @ Xh)
        er = mat_log_principal(Xh @ Xi)
        defect = operator_norm(er - X @ el @ Xi) / np.maximum(1.0, operator_norm(er))
        return defect.max(), f"{len(X)} samples"

    return _timed("conjugate log errors e_r = X e_l X^-1", 1e-9, run)


# -- error dynamics -------------------------------------------------------------

def exact_decay_defects(a0, kind, t_end=5.0):
    """Relative deviation of the matched log-error norm from exp(-a0 t) and
    the fitted decay rate, for the kinematic SO(3) example."""
    sc = lfso_scenario(kind, a0=a0, t_end=t_end)
    b = run_batch(sc.observer, sc.gains, sc.family, sc.plant_state(), sc.estimate_state(),
                  sc.input, t_end=t_end, store_states=False)
    col = "err_er" if kind == "lfso_passive" else "err_el"
    e = b.norms[col][0]
    t = b.t
    expected = np.exp(-a0 * t)
    rel = np.max(np.abs(e / e[0] - expected) / expected)
    rate, _ = decay_rate_fit(t, e)
    return rel, rate


def check_exact_log_decay(gains=(0.5, 1.0, 2.0), t_end=5.0):
    results = []
    for kind in ("lfso_passive", "lfso_direct"):
        for a0 in gains:
            t0 = time.perf_counter()
            rel, rate = exact_decay_defects(a0, kind, t_end)
            secs = time.perf_counter() - t0
            info = f"fitted rate {rate:.6f}"
            results.append(CheckResult(f"exact log decay {kind} a0={a0:g} relative deviation", float(rel),
                                       1e-5, secs, info))
            results.append(CheckResult(f"exact log decay {kind} a0={a0:g} decay rate", abs(rate + a0),
                                       1e-3, 0.0, info))
    return results


def _contraction_rhs(a0):
    def rhs(t, s):
        return [-a0 * s.X @ mat_log_principal(s.X)]

    return rhs


def random_contraction_starts(count, radius=0.6, seed=0, n=3):
    """E0 = exp(L) with ||L|| = radius, L random in gl(n)."""
    rng = np.random.default_rng(seed)
    return mat_exp(random_algebra(GroupFamily("GL", n), rng, count, radius))


def contraction_defect(E0, a0=1.0, t_end=5.0, dt=1e-3, scheme="rkmk4", output_period=0.01):
    """Max deviation of the integrated dE/dt = -a0 E log E from its closed form,
    and max ||E(t) - I|| over the samples."""
    config = IntegratorConfig(scheme, dt)
    every = max(1, int(round(output_period / dt)))
    times, states = integrate(ChainState(E0), _contraction_rhs(a0), 0.0, t_end, config, None, every)
    E = np.stack([s.X for s in states])
    exact = closed_form_error_solution(E0, a0, times.reshape((-1,) + (1,) * (E0.ndim - 2)))
    defect = np.max(operator_norm(E - exact))
    radius = np.max(operator_norm(E - np.eye(E0.shape[-1])))
    return defect, radius


def check_contraction_closed_form(count=10, t_end=5.0, dt=1e-3):
    E0 = random_contraction_starts(count)
    defect, radius = contraction_defect(E0, t_end=t_end, dt=dt)
    return [
        CheckResult("contraction matches closed form", float(defect), 1e-8, detail=f"{count} starts"),
        CheckResult("contraction stays in ball ||E - I|| < 1", float(radius), 1.0 - 1e-12,
                    detail="worst sampled ||E - I||"),
    ]


def integration_order(scheme, dts=(0.1, 0.05, 0.025), t_end=1.0, count=4):
    """Empirical order of ``scheme`` from final-time errors against the closed form."""
    E0 = random_contraction_starts(count, seed=3)
    errs = []
    for dt in dts:
        config = IntegratorConfig(scheme, dt)
        _, states = integrate(ChainState(E0), _contraction_rhs(1.0), 0.0, t_end, config, None,
                              int(round(t_end / dt)))
        exact = closed_form_error_solution(E0, 1.0, t_end)
        errs.append(np.max(operator_norm(states[-1].X - exact)))
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    return float(slope), errs


def check_order():
    out = []
    for scheme, target, tol in (("rkmk4", 4.0, 0.3), ("lie_euler", 1.0, 0.2)):
        p, errs = integration_order(scheme)
        out.append(CheckResult(f"order {scheme} (target {target:g})", abs(p - target), tol,
                               detail=f"order {p:.3f}"))
    return out


def random_ball_starts(count, radius=0.5, seed=0, n=3):
    """E0 = I + M with ||M|| uniform in [0, radius)."""
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((count, n, n))
    M *= (rng.uniform(0.0, radius, count) / operator_norm(M))[:, None, None]
    return np.eye(n) + M


def check_commutator_pair(count=100, t_end=5.0, dt=1e-3, seed=0):
    """dE/dt = [E, u] and de/dt = [e, u] from e(0) = log E(0) keep e = log E."""

    def run():
        E0 = random_ball_starts(count, seed=seed)
        u = InputSignal.sinusoid()
        _, E, e = simulate_commutator_pair(E0, u, t_end, IntegratorConfig("rkmk4", dt), 0.05)
        defect = operator_norm(mat_log_principal(E) - e)
        return defect.max(), f"{count} starts in B(I, 0.5), t_end={t_end:g}"

    return _timed("commutator pair log E = e", 1e-6, run)


# -- SO(3) specifics -----------------------------------------------------------

def random_rotations_in_range(count, lo=0.01, hi=np.pi - 0.1, seed=0):
    rng = np.random.default_rng(seed)
    axes = rng.standard_normal((count, 3))
    axes /= np.linalg.norm(axes, axis=1, keepdims=True)
    theta = rng.uniform(lo, hi, count)
    return exp_so3(skew3(axes * theta[:, None]))


def check_rotation_log_identity(count=1000, seed=0):
    R = random_rotations_in_range(count, seed=seed)

    def identity():
        closed = log_so3_closed_form(R)
        general = mat_log_principal(R)
        return np.max(operator_norm(closed - general)), f"{count} rotations"

    def observers():
        rng = np.random.default_rng(seed + 1)
        Y = random_rotations_in_range(count, seed=seed + 2)
        Rhat = Y @ R  # Y^T Rhat = R has angle in the tested range
        u = skew3(rng.standard_normal((count, 3)))
        g = ObserverGains((1.3,))
        worst = 0.0
        for log_form, proj_form in ((lfso_passive_rhs, lfso_passive_rhs_projection),
                                    (lfso_direct_rhs, lfso_direct_rhs_projection)):
            a = log_form(Rhat, Y, u, g, None, "general")
            b = proj_form(Rhat, Y, u, 1.3)
            worst = max(worst, np.max(operator_norm(a - b)))
        return worst, f"{count} rotations, both observers"

    return [
        _timed("rotation closed-form log = principal log", 1e-9, identity),
        _timed("observer log form = projection form", 1e-9, observers),
    ]


def random_hurwitz_gains(d, rng):
    """Coefficients a_0..a_{d-1} of a monic polynomial with random LHP roots."""
    roots = []
    while len(roots) < d:
        if d - len(roots) >= 2 and rng.random() < 0.5:
            re, im = -rng.uniform(0.2, 3.0), rng.uniform(0.1, 3.0)
            roots += [complex(re, im), complex(re, -im)]
        else:
            roots.append(-rng.uniform(0.2, 3.0))
    poly = np.real(np.poly(roots))  # highest power first
    return ObserverGains(poly[1:][::-1]), np.array(roots)


def check_linearization_spectrum(count=50, ds=(2, 3, 4), n=3, seed=0):
    def run():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for d in ds:
            for _ in range(count):
                gains, roots = random_hurwitz_gains(d, rng)
                got = linearization_spectrum(gains, n)
                want = np.repeat(roots, n)
                cost = np.abs(got[:, None] - want[None, :])
                r, c = linear_sum_assignment(cost)
                worst = max(worst, cost[r, c].max())
        return worst, f"{count} gain sets per d in {tuple(ds)}"

    return _timed("block-companion spectrum", 1e-8, run)


# -- entry point ----------------------------------------------------------------

def run_property_suite(selector="all"):
    """List of CheckResult for ``selector`` (one of SELECTORS or 'all')."""
    if selector != "all" and selector not in SELECTORS:
        raise ValueError(f"unknown selector {selector!r}; choose from {SELECTORS + ('all',)}")
    pick = SELECTORS if selector == "all" else (selector,)
    out = []
    for name in pick:
        if name == "explog":
            out += [check_explog(f) for f in ("GL(3)", "SO(3)", "SL(3)")]
        elif name == "lemma6":
            out.append(check_log_error_conjugacy())
        elif name == "lemma7":
            out += check_exact_log_decay()
        elif name == "prop4":
            out += check_contraction_closed_form() + check_order()
        elif name == "cor3":
            out.append(check_commutator_pair())
        elif name == "pia":
            out += check_rotation_log_identity()
        elif name == "lemma8":
            out.append(check_linearization_spectrum())
    return out


def format_report(results):
    lines = [r.line() for r in results]
    ok = all(r.passed for r in results)
    lines.append(f"{'PASS' if ok else 'FAIL'} aggregate: {sum(r.passed for r in results)}/{len(results)} checks")
    return "\n".join(lines)
