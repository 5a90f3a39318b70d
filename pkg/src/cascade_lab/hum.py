"""HUM control synthesis on a spectrally filtered seed space.

The synthesis solves the duality problem of null control: seeds parametrize
terminal data of the backward (transposed-cascade) adjoint solve, the recorded
observations of the adjoint feed back as controls of the forward system, and the
composition is the HUM Gramian. Seeds are restricted to the lowest K modes per
component because non-propagating discrete high frequencies ruin uniform
observability on any fixed grid; the filter is part of every reported result.

The seed-space representation of a forward terminal state is chosen as the
plain spectral readout (position coefficients plus the staggered leapfrog
velocity for the second-order family, the terminal coefficients for the
first-order one). With the sampling conventions of :mod:`cascade_lab.dynamics`
this readout is the exact discrete adjoint of the control injection, so

    <G X, Y>_seed  =  sum_n w_n <obs_n(X), obs_n(Y)>_G

holds to round-off, the Gramian is symmetric positive semidefinite by
construction, and a converged conjugate-gradient solve drives the measured
filtered terminal energy to the residual level rather than to O(dt^2).

Second-order synthesis solves G X = b exactly (eps = 0 allowed); the
first-order family uses the penalized form (G + eps I) X = b, whose terminal
norm scales like sqrt(eps) under null controllability; ``epsilon_sweep`` fits
that exponent.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    CascadeSystem,
    ControlSignal,
    SystemState,
    _adjoint_levels_from_seed,
    _cn_adjoint,
    _cn_forward,
    _hyp_adjoint,
    _hyp_forward,
    adjoint_system,
    energy,
    interval_weights,
    state_l2_norm,
    step_count,
    trapezoid_weights,
    zero_state,
    _check_cfl,
)

# ---------------------------------------------------------------------------
# seed space
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeedSpace:
    """Filtered adjoint-seed coordinates.

    Second-order family: real coefficients of shape (N, K, 2), slot 0 the
    position coordinate (weighted by lambda_j in the inner product, the natural
    energy pairing) and slot 1 the velocity coordinate. First-order family:
    one complex (real when theta = 0) coefficient per component and mode.
    """

    sys: CascadeSystem
    K: int

    def __post_init__(self):
        if not 1 <= self.K <= self.sys.basis.K:
            raise ValueError(f"K_filter must be in 1..{self.sys.basis.K}")

    @property
    def hyperbolic(self):
        return self.sys.is_hyperbolic

    @property
    def eigenvalues(self):
        return self.sys.basis.eigenvalues[: self.K]

    @property
    def modes(self):
        return self.sys.basis.modes[: self.K]

    @property
    def dim(self):
        return self.sys.N * self.K * (2 if self.hyperbolic else 1)

    def zeros(self):
        if self.hyperbolic:
            return np.zeros((self.sys.N, self.K, 2))
        return np.zeros((self.sys.N, self.K), dtype=self.sys.state_dtype)

    def random(self, rng):
        if self.hyperbolic:
            return rng.standard_normal((self.sys.N, self.K, 2))
        x = rng.standard_normal((self.sys.N, self.K))
        if self.sys.state_dtype == np.complex128:
            x = x + 1j * rng.standard_normal((self.sys.N, self.K))
        return x

    def inner(self, X, Y):
        """Seed inner product; complex Hermitian for the first-order family."""
        if self.hyperbolic:
            lam = self.eigenvalues[None, :]
            return float(np.sum(lam * X[..., 0] * Y[..., 0]) + np.sum(X[..., 1] * Y[..., 1]))
        return complex(np.vdot(Y, X))

    def norm(self, X):
        return math.sqrt(max(np.real(self.inner(X, X)), 0.0))

    def energy_of(self, X):
        """Natural filtered energy of a seed/readout (per-component list, total)."""
        if self.hyperbolic:
            lam = self.eigenvalues[None, :]
            per = 0.5 * (np.sum(lam * X[..., 0] ** 2, axis=1) + np.sum(X[..., 1] ** 2, axis=1))
        else:
            per = 0.5 * np.sum(np.abs(X) ** 2, axis=1)
        per = [float(v) for v in per]
        return per, float(sum(per))

    # -- conversions ----------------------------------------------------------

    def adjoint_terminal_levels(self, X, dt):
        """Backward starting data of the adjoint encoding the seed functional."""
        if self.hyperbolic:
            phi_M = self.synth(X[..., 1])
            phi_M1 = phi_M + dt * self.synth(self.eigenvalues[None, :] * X[..., 0])
            return phi_M, phi_M1
        return self.synth(X)

    def synth(self, coeffs):
        return np.tensordot(coeffs, self.modes, axes=([-1], [0]))

    def proj(self, fields):
        return np.tensordot(fields, self.modes, axes=([-1], [1])) * self.sys.grid.hvol

    def readout(self, levels, dt):
        """Seed-space representation of a forward terminal state."""
        if self.hyperbolic:
            y_m1, y_m = levels
            pos = self.proj(y_m)
            svel = self.proj(y_m - y_m1) / dt
            return np.stack([pos, svel], axis=-1)
        return self.proj(levels)

    def project_state(self, state):
        """Project a SystemState onto the filter space; returns (X, residual)."""
        basis = self.sys.basis
        if self.hyperbolic:
            X = np.stack([self.proj(state.w), self.proj(state.wp)], axis=-1)
            rec_w = self.synth(X[..., 0])
            rec_wp = self.synth(X[..., 1])
            res = math.sqrt(
                (np.sum((state.w - rec_w) ** 2) + np.sum((state.wp - rec_wp) ** 2))
                * self.sys.grid.hvol
            )
            return X, float(res)
        X = self.proj(state.w)
        rec = self.synth(X)
        res = math.sqrt(float(np.real(np.vdot(state.w - rec, state.w - rec))) * self.sys.grid.hvol)
        return X, float(res)

    def state_from_seed(self, X, t=0.0):
        if self.hyperbolic:
            return SystemState(t, self.synth(X[..., 0]), self.synth(X[..., 1]))
        return SystemState(t, self.synth(X).astype(self.sys.state_dtype))


# ---------------------------------------------------------------------------
# Gramian
# ---------------------------------------------------------------------------


@dataclass
class GramianOperator:
    """Matrix-free HUM Gramian on the filtered seed space.

    apply(X) runs the backward adjoint solve seeded by X, feeds the recorded
    observations back as the control of a forward solve from rest, and returns
    the seed-space readout of the terminal state (plus eps * X when eps > 0).
    """

    sys: CascadeSystem
    sys_adj: CascadeSystem
    seeds: SeedSpace
    T: float
    dt: float
    eps: float = 0.0
    apply_count: int = 0

    def __post_init__(self):
        self.M = step_count(self.T, self.dt)
        if self.sys.is_hyperbolic:
            _check_cfl(self.sys, self.dt)
        if self.sys.transposed or not self.sys_adj.transposed:
            raise ValueError("pass (forward, transposed) systems in that order")
        if self.sys.control.entries and self.sys.observation_kind() == "mixed":
            raise ValueError(
                "mixed distributed/end controls are not supported in one synthesis; "
                "the exact discrete pairing exists per observation kind only"
            )

    def observations_of(self, X):
        """Adjoint observations seeded by X, as quadrature-ready sample arrays."""
        if self.seeds.hyperbolic:
            phi_M, phi_M1 = self.seeds.adjoint_terminal_levels(X, self.dt)
            out = _hyp_adjoint(self.sys_adj, phi_M, phi_M1, self.M, self.dt)
            obs = out["observations"]
            for arr in obs.values():  # end samples carry no weight; keep them zero
                arr[0] = 0.0
                arr[-1] = 0.0
            return obs
        phi_T = self.seeds.adjoint_terminal_levels(X, self.dt)
        return _cn_adjoint(self.sys_adj, phi_T, self.M, self.dt)["observations"]

    def signal_from_observations(self, obs):
        t = self.dt * np.arange(self.M + 1)
        if self.seeds.hyperbolic:
            return ControlSignal(t, obs, trapezoid_weights(self.M, self.dt), "node")
        vals = {}
        for k, arr in obs.items():
            padded = np.zeros((self.M + 1,) + arr.shape[1:], dtype=arr.dtype)
            padded[: self.M] = arr[: self.M]
            padded[self.M] = 0.0
            vals[k] = padded
        return ControlSignal(t, vals, interval_weights(self.M, self.dt), "interval")

    def forward_with_control(self, signal, initial=None):
        init = initial if initial is not None else zero_state(self.sys)
        if self.seeds.hyperbolic:
            return _hyp_forward(self.sys, init.w, init.wp, signal, None, self.M, self.dt)
        return _cn_forward(self.sys, init.w, signal, None, self.M, self.dt)

    def readout_of_forward(self, out):
        if self.seeds.hyperbolic:
            return self.seeds.readout(out["levels"], self.dt)
        return self.seeds.readout(out["terminal"].w, self.dt)

    def apply(self, X):
        self.apply_count += 1
        obs = self.observations_of(X)
        signal = self.signal_from_observations(obs)
        out = self.forward_with_control(signal)
        GX = self.readout_of_forward(out)
        if self.eps > 0.0:
            GX = GX + self.eps * X
        return GX

    def observation_quadrature(self, obs_a, obs_b):
        """sum_n w_n <obs_a_n, obs_b_n>_G, the defining bilinear form of G."""
        hvol = self.sys.grid.hvol
        if self.seeds.hyperbolic:
            weights = trapezoid_weights(self.M, self.dt)
        else:
            weights = interval_weights(self.M, self.dt)
        total = 0.0
        for k in obs_a:
            a, b = obs_a[k], obs_b[k]
            prod = np.real(a * np.conj(b))
            per_t = prod.sum(axis=-1) * hvol if prod.ndim == 2 else prod
            total += float(weights[: per_t.shape[0]] @ per_t)
        return total


def gramian_apply(gram, X):
    """Apply the HUM Gramian to a seed (module-level convenience)."""
    return gram.apply(X)


# ---------------------------------------------------------------------------
# conjugate gradient
# ---------------------------------------------------------------------------


@dataclass
class CgResult:
    x: np.ndarray
    converged: bool
    stagnated: bool
    iterations: int
    residual_history: list
    all_residuals: list


def conjugate_gradient(apply_op, b, inner, tol, max_iter, stall_window=20):
    """CG for a self-adjoint PSD operator in the given inner product.

    ``residual_history`` records the strictly decreasing accepted residuals;
    the raw per-iteration trace is kept separately. The solve stops and flags
    stagnation when the residual sits on a flat plateau (constant within
    1e-6 relative) for ``stall_window`` consecutive iterations, or when the
    search direction loses positivity; a hard residual floor is the expected
    outcome for uncontrollable configurations, whereas the oscillating but
    progressing residuals of a merely ill-conditioned solve never plateau.
    """
    x = np.zeros_like(b)
    r = b.copy()
    rz = np.real(inner(r, r))
    norm_b = math.sqrt(max(rz, 0.0))
    if norm_b == 0.0:
        return CgResult(x, True, False, 0, [0.0], [0.0])
    p = r.copy()
    best = math.inf
    x_best = x.copy()
    max_rayleigh = 0.0
    history, raw = [], []
    converged = stagnated = False
    it = 0
    while it < max_iter:
        Ap = apply_op(p)
        pAp = np.real(inner(p, Ap))
        pp = np.real(inner(p, p))
        if pAp <= 0.0 or not np.isfinite(pAp):
            stagnated = True
            break
        rayleigh = pAp / pp if pp > 0.0 else 0.0
        max_rayleigh = max(max_rayleigh, rayleigh)
        if rayleigh < 1e-13 * max_rayleigh:
            # the search direction reached the operator's numerical kernel
            stagnated = True
            break
        alpha = rz / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        rz_new = np.real(inner(r, r))
        res = math.sqrt(max(rz_new, 0.0)) / norm_b
        raw.append(res)
        it += 1
        if not np.isfinite(res):
            stagnated = True
            break
        if res < best * (1.0 - 1e-12):
            best = res
            x_best = x.copy()
            history.append(res)
        if res <= tol:
            converged = True
            break
        if len(raw) >= stall_window:
            window = raw[-stall_window:]
            lo, hi = min(window), max(window)
            if lo > 0.0 and hi / lo < 1.0 + 1e-6:
                stagnated = True
                break
        beta = rz_new / rz
        rz = rz_new
        p = r + beta * p
    # a failed solve reports the best iterate seen, not the last direction
    return CgResult(x if converged else x_best, converged, stagnated, it, history, raw)


# ---------------------------------------------------------------------------
# synthesis
# ---------------------------------------------------------------------------


@dataclass
class HumResult:
    """Outcome of one control synthesis, with everything a replay needs."""

    success: bool
    stagnated: bool
    control: ControlSignal | None
    cg_iterations: int
    residual_history: list
    all_residuals: list
    eps: float
    T: float
    dt: float
    K_filter: int
    initial_energy: float
    terminal_energy_filtered: float
    terminal_energy_full: float
    terminal_energy_filtered_per_component: list
    terminal_energy_full_per_component: list
    terminal_state_norm: float
    free_terminal_norm: float
    free_terminal_energy: float
    projection_residual: float
    control_norm_sq: float
    gram_quadratic: float
    wall_time: float
    terminal_state: SystemState | None = None
    initial_state: SystemState | None = None
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "success": self.success,
            "stagnated": self.stagnated,
            "cg_iterations": self.cg_iterations,
            "residual_history": self.residual_history,
            "eps": self.eps,
            "T": self.T,
            "dt": self.dt,
            "K_filter": self.K_filter,
            "initial_energy": self.initial_energy,
            "terminal_energy_filtered": self.terminal_energy_filtered,
            "terminal_energy_full": self.terminal_energy_full,
            "terminal_energy_filtered_per_component": self.terminal_energy_filtered_per_component,
            "terminal_energy_full_per_component": self.terminal_energy_full_per_component,
            "terminal_state_norm": self.terminal_state_norm,
            "free_terminal_norm": self.free_terminal_norm,
            "free_terminal_energy": self.free_terminal_energy,
            "projection_residual": self.projection_residual,
            "control_norm_sq": self.control_norm_sq,
            "gram_quadratic": self.gram_quadratic,
            "wall_time": self.wall_time,
            "notes": self.notes,
        }


def _filtered_energy_of_readout(seeds, X):
    per, total = seeds.energy_of(X)
    return per, total


def synthesize_control(sys, Y0, T, dt, K_filter, eps=0.0, cg_tol=1e-8, max_iter=None,
                       stall_window=20):
    """Synthesize the minimal-norm null control for initial data Y0.

    Second-order family: exact HUM (eps = 0 allowed). First-order family:
    penalized HUM, eps > 0 required. Y0 is projected onto the filter space
    (the discarded residual is reported); the right-hand side is minus the
    seed-space representation of the free terminal state, so a converged solve
    cancels the filtered terminal state of the re-simulated controlled system.
    """
    t0 = time.perf_counter()
    if sys.transposed:
        raise ValueError("pass the forward system")
    if not sys.control.entries:
        raise ValueError("system carries no control")
    if not sys.is_hyperbolic and eps <= 0.0:
        raise ValueError("the first-order family needs eps > 0 (penalized HUM)")
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")

    seeds = SeedSpace(sys, K_filter)
    gram = GramianOperator(sys, adjoint_system(sys), seeds, T, dt, eps=eps)
    if max_iter is None:
        max_iter = max(100, 4 * seeds.dim)

    notes = []
    if not sys.is_hyperbolic and abs(abs(sys.theta) - math.pi / 2) < 1e-12:
        notes.append("theta at +-pi/2: outside the stated dissipative range, run as-is")

    X0, proj_res = seeds.project_state(Y0)
    Y0f = seeds.state_from_seed(X0, t=0.0)
    init_energy = energy(sys, Y0f).total

    free_out = gram.forward_with_control(None, initial=Y0f)
    b = -gram.readout_of_forward(free_out)
    free_norm = state_l2_norm(sys, free_out["terminal"])
    free_energy = energy(sys, free_out["terminal"]).total

    cg = conjugate_gradient(gram.apply, b, seeds.inner, cg_tol, max_iter, stall_window)

    obs = gram.observations_of(cg.x)
    signal = gram.signal_from_observations(obs)
    ctrl_out = gram.forward_with_control(signal, initial=Y0f)
    X_term = gram.readout_of_forward(ctrl_out)
    filt_per, filt_total = _filtered_energy_of_readout(seeds, X_term)
    full = energy(sys, ctrl_out["terminal"])
    gram_quad = gram.observation_quadrature(obs, obs)
    ctrl_norm = signal.norm_sq(sys.grid)

    success = cg.converged and filt_total <= init_energy * (1.0 + 1e-9)
    if not cg.converged:
        notes.append("cg did not reach tolerance" + (" (stagnation)" if cg.stagnated else ""))
    return HumResult(
        success=success,
        stagnated=cg.stagnated,
        control=signal,
        cg_iterations=cg.iterations,
        residual_history=cg.residual_history,
        all_residuals=cg.all_residuals,
        eps=eps,
        T=T,
        dt=dt,
        K_filter=K_filter,
        initial_energy=init_energy,
        terminal_energy_filtered=filt_total,
        terminal_energy_full=full.total,
        terminal_energy_filtered_per_component=filt_per,
        terminal_energy_full_per_component=full.per_component,
        terminal_state_norm=state_l2_norm(sys, ctrl_out["terminal"]),
        free_terminal_norm=free_norm,
        free_terminal_energy=free_energy,
        projection_residual=proj_res,
        control_norm_sq=ctrl_norm,
        gram_quadratic=gram_quad,
        wall_time=time.perf_counter() - t0,
        terminal_state=ctrl_out["terminal"],
        initial_state=Y0f,
        notes=notes,
    )


@dataclass
class SweepResult:
    eps_list: list
    terminal_norms: list
    results: list
    slope: float
    intercept: float
    free_terminal_norm: float
    partial: bool

    def to_dict(self):
        return {
            "eps_list": self.eps_list,
            "terminal_norms": self.terminal_norms,
            "slope": self.slope,
            "intercept": self.intercept,
            "free_terminal_norm": self.free_terminal_norm,
            "partial": self.partial,
            "runs": [r.to_dict() for r in self.results],
        }


def epsilon_sweep(sys, Y0, T, dt, K_filter, eps_list, cg_tol=1e-8, max_iter=None):
    """Penalized-HUM sweep: fit log ||Y(T)|| against log eps by least squares.

    Requires at least 3 strictly decreasing eps values. Any individual run
    failure marks the sweep partial; the fit then uses the successful runs.
    """
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 3:
        raise ValueError("eps sweep needs at least 3 values")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps values must be strictly decreasing")
    results = []
    for eps in eps_list:
        results.append(synthesize_control(sys, Y0, T, dt, K_filter, eps=eps,
                                          cg_tol=cg_tol, max_iter=max_iter))
    norms = [r.terminal_state_norm for r in results]
    ok = [i for i, r in enumerate(results) if r.success and norms[i] > 0.0]
    partial = len(ok) < len(results)
    if len(ok) >= 2:
        lx = np.log([eps_list[i] for i in ok])
        ly = np.log([norms[i] for i in ok])
        slope, intercept = np.polyfit(lx, ly, 1)
    else:
        slope, intercept = math.nan, math.nan
    return SweepResult(
        eps_list=eps_list,
        terminal_norms=norms,
        results=results,
        slope=float(slope),
        intercept=float(intercept),
        free_terminal_norm=results[0].free_terminal_norm,
        partial=partial,
    )
