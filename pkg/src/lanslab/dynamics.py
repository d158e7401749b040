"""Filtered Navier-Stokes dynamics on the torus: right-hand sides, heat
semigroup, Duhamel fixed-point iteration, and an exponential time marcher.

Two vector fields are implemented.  lans_rhs is the filtered equation for w:

    d_t w = nu*Lap(w) - P[div(w (x) w) + div tau(w, w)]

with tau the filtered stress (alpha^2/2)(1 - alpha^2 Lap)^(-1) applied to
symmetrized Def*Rot matrix products.  mlans_rhs is the equation satisfied
by a perturbation u riding on a known background trajectory v: it carries
the u-self terms and the u-v cross terms but no pure v-v terms, so that

    lans_rhs(u + v) = mlans_rhs(u, v) + lans_rhs(v)

holds exactly at the discrete level.  Pressure never appears: every
nonlinear term is Leray-projected, which removes exactly the gradient
component.  All norms of trajectories are weighted Besov sups of the form
sup_t t^a ||u(t)||.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .littlewood_paley import BesovIndex, build_partition
from .spectral import (
    SpectralField,
    TorusGrid,
    advection_tensor,
    dealias,
    def_rot,
    divergence,
    forward_transform,
    helmholtz_inverse,
    inverse_transform,
    leray_project,
    matrix_product_tensor,
    outer_product,
    require_solenoidal,
)

__all__ = [
    "LansConfig",
    "MildSolverConfig",
    "Trajectory",
    "IterationState",
    "PicardDivergenceError",
    "SolverBlowupError",
    "reynolds_stress",
    "lans_rhs",
    "mlans_rhs",
    "nonlinear_rhs",
    "heat_propagate",
    "duhamel_map",
    "picard_iterate",
    "solve_lans",
    "solve_mlans",
    "weighted_norm",
    "e_norm",
]


class PicardDivergenceError(RuntimeError):
    """Fixed-point iteration failed to contract.

    Signals that the horizon is too large for the data size.  Carries the
    last observed contraction ratio and the per-iterate history.
    """

    def __init__(self, message: str, last_ratio: float, history: list):
        super().__init__(f"{message} (last contraction ratio {last_ratio:.3g})")
        self.last_ratio = last_ratio
        self.history = history


class SolverBlowupError(RuntimeError):
    """Time marcher produced a non-finite state; carries the step index."""

    def __init__(self, step: int, time: float):
        super().__init__(f"non-finite state at step {step}, t = {time:.6g}")
        self.step = step
        self.time = time


@dataclass(frozen=True)
class LansConfig:
    """Physical parameters: filter width alpha >= 0 and viscosity nu > 0.

    alpha = 0 switches the stress off and leaves plain Navier-Stokes.
    """

    grid: TorusGrid
    alpha: float = 0.1
    nu: float = 1.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.nu <= 0:
            raise ValueError(f"nu must be > 0, got {self.nu}")


@dataclass(frozen=True)
class MildSolverConfig:
    """Discretization and stopping control for the Duhamel fixed point.

    weight_a and weight_index define the iteration metric
    sup_t t^weight_a * besov_norm(. , weight_index).  When
    enforce_weight_relation is set, weight_a must equal
    (weight_index.s - dim/2)/2, the scaling-critical choice for data one
    derivative class below weight_index.s.
    """

    t_end: float
    dt: float
    weight_index: BesovIndex
    weight_a: float = 0.0
    quad_rule: str = "trapezoid"  # or "euler"
    picard_tol: float = 1e-9
    picard_max_iters: int = 40
    contraction_target: float = 0.5
    enforce_weight_relation: bool = False
    divergence_factor: float = 1e6

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")
        if self.picard_tol <= 0:
            raise ValueError("picard_tol must be positive")
        if self.quad_rule not in ("trapezoid", "euler"):
            raise ValueError(f"unknown quadrature rule {self.quad_rule!r}")
        if self.weight_a < 0:
            raise ValueError("weight_a must be nonnegative")
        if self.contraction_target <= 0:
            raise ValueError("contraction_target must be positive")

    def validate_weight_relation(self, dim: int):
        expected = (self.weight_index.s - dim / 2.0) / 2.0
        if abs(self.weight_a - expected) > 1e-12:
            raise ValueError(
                f"weight_a = {self.weight_a} inconsistent with "
                f"(s - n/2)/2 = {expected} for s = {self.weight_index.s}, n = {dim}"
            )

    def time_nodes(self) -> np.ndarray:
        steps = int(round(self.t_end / self.dt))
        if steps < 1 or abs(steps * self.dt - self.t_end) > 1e-9 * self.t_end:
            raise ValueError(f"t_end = {self.t_end} is not an integer multiple of dt = {self.dt}")
        return self.dt * np.arange(steps + 1)


@dataclass
class Trajectory:
    """Time-ordered divergence-free states with their production settings."""

    times: np.ndarray
    states: list
    equation: str = "lans"
    config: LansConfig | None = None
    extras: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")
        if len(self.times) == 0:
            raise ValueError("empty trajectory")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def grid(self) -> TorusGrid:
        return self.states[0].grid

    @property
    def final(self) -> SpectralField:
        return self.states[-1]

    def node_index(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} is not a stored node of this trajectory")
        return i

    def state_at(self, t: float) -> SpectralField:
        return self.states[self.node_index(t)]

    def max_relative_divergence(self) -> float:
        from .spectral import relative_divergence

        return max(relative_divergence(s) for s in self.states)


@dataclass
class IterationState:
    """One Duhamel iterate: index, weighted-norm step size, composite norm."""

    iterate_index: int
    delta_norm: float
    e_norm: float
    ratio: float | None = None
    current: Trajectory | None = None


def reynolds_stress(f: SpectralField, g: SpectralField, cfg: LansConfig) -> SpectralField:
    """Divergence of the filtered stress tensor of the pair (f, g).

    Stress = (alpha^2/2) (1 - alpha^2 Lap)^(-1) [Def(f) Rot(g) + Def(g) Rot(f)]
    with pointwise matrix products; the result is div of that tensor,
    dealiased.  Symmetric in (f, g); identically zero for alpha = 0.
    """
    if f.grid != cfg.grid or g.grid != cfg.grid:
        raise ValueError("fields must live on the configured grid")
    if cfg.alpha == 0.0:
        return SpectralField(cfg.grid, np.zeros((cfg.grid.dim,) + cfg.grid.shape, dtype=np.complex128))
    d_f, r_f = def_rot(f)
    d_g, r_g = def_rot(g)
    df, rf = inverse_transform(d_f), inverse_transform(r_f)
    dg, rg = inverse_transform(d_g), inverse_transform(r_g)
    prod = matrix_product_tensor(df, rg) + matrix_product_tensor(dg, rf)
    tens = dealias(forward_transform(prod, cfg.grid, f.real_valued and g.real_valued))
    stress = helmholtz_inverse(tens, cfg.alpha) * (0.5 * cfg.alpha**2)
    return divergence(stress)


def _viscous(u: SpectralField, cfg: LansConfig) -> SpectralField:
    return SpectralField(u.grid, -cfg.nu * u.grid.k_squared * u.coeffs, u.real_valued)


def nonlinear_rhs(u: SpectralField, cfg: LansConfig, v: SpectralField | None = None) -> SpectralField:
    """Projected nonlinear terms, sign convention d_t u = nu*Lap u + N(u[, v]).

    v = None gives the self-contained field: -P[div(u(x)u) + div tau(u,u)].
    With a background v the u-v cross terms are added:
    -P[div(u(x)u + u(x)v + v(x)u) + div tau(u,u) + 2 div tau(u,v)].
    No pure v-v terms appear in either case.
    """
    terms = divergence(outer_product(u, u)) + reynolds_stress(u, u, cfg)
    if v is not None:
        terms = terms + divergence(advection_tensor(u, v)) + 2.0 * reynolds_stress(u, v, cfg)
    return -1.0 * leray_project(terms)


def lans_rhs(w: SpectralField, cfg: LansConfig) -> SpectralField:
    """Full filtered right-hand side nu*Lap w - P[div(w(x)w) + div tau(w,w)]."""
    require_solenoidal(w)
    w = dealias(w)
    return _viscous(w, cfg) + nonlinear_rhs(w, cfg)


def mlans_rhs(u: SpectralField, v: SpectralField, cfg: LansConfig) -> SpectralField:
    """Right-hand side for the perturbation u over the background v.

    Contains u-self and u-v cross terms only, so that adding lans_rhs(v)
    reproduces lans_rhs(u + v) exactly.
    """
    require_solenoidal(u)
    require_solenoidal(v)
    u = dealias(u)
    v = dealias(v)
    return _viscous(u, cfg) + nonlinear_rhs(u, cfg, v)


def heat_propagate(f: SpectralField, t: float, nu: float = 1.0) -> SpectralField:
    """Exact heat semigroup exp(nu t Lap) as a diagonal multiplier; t >= 0."""
    if t < 0:
        raise ValueError(f"heat propagation needs t >= 0, got {t}")
    mult = np.exp(-nu * t * f.grid.k_squared)
    return SpectralField(f.grid, f.coeffs * mult, f.real_valued)


def _background_states(v_traj: Trajectory | None, times: np.ndarray, grid: TorusGrid) -> list:
    if v_traj is None:
        return [None] * len(times)
    if v_traj.grid != grid:
        raise ValueError("background trajectory lives on a different grid")
    return [v_traj.state_at(t) for t in times]


def duhamel_map(
    traj: Trajectory,
    u0: SpectralField,
    cfg: LansConfig,
    mcfg: MildSolverConfig,
    v_traj: Trajectory | None = None,
) -> Trajectory:
    """One application of the mild-solution map

        Phi(u)(t) = exp(nu t Lap) u0 + int_0^t exp(nu (t-s) Lap) N(u(s)) ds

    on the trajectory's time grid.  The integral uses the configured
    composite rule with the semigroup factor applied exactly per node via
    the recurrence I_i = E I_(i-1) + increment, E = one-step semigroup.
    """
    grid = cfg.grid
    times = traj.times
    dt = float(times[1] - times[0])
    v_states = _background_states(v_traj, times, grid)
    step_mult = np.exp(-cfg.nu * dt * grid.k_squared)

    n_fields = [nonlinear_rhs(traj.states[i], cfg, v_states[i]) for i in range(len(times))]
    states = [heat_propagate(u0, times[0], cfg.nu) if times[0] > 0 else dealias(u0.copy())]
    integral = np.zeros_like(u0.coeffs)
    for i in range(1, len(times)):
        if mcfg.quad_rule == "trapezoid":
            integral = step_mult * (integral + 0.5 * dt * n_fields[i - 1].coeffs) + 0.5 * dt * n_fields[i].coeffs
        else:  # euler: left endpoint
            integral = step_mult * (integral + dt * n_fields[i - 1].coeffs)
        coeffs = heat_propagate(u0, times[i], cfg.nu).coeffs + integral
        states.append(SpectralField(grid, coeffs, u0.real_valued))
    return Trajectory(times, states, equation=traj.equation, config=cfg, extras=dict(traj.extras))


def weighted_norm(
    traj: Trajectory,
    a: float,
    index: BesovIndex,
    t_end: float | None = None,
    partition=None,
) -> float:
    """sup over stored nodes in (0, t_end] of t^a * besov_norm(u(t)); the
    t = 0 node participates only when a = 0."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    part = partition or build_partition(traj.grid)
    horizon = traj.times[-1] if t_end is None else t_end
    best = 0.0
    for t, state in zip(traj.times, traj.states):
        if t > horizon * (1 + 1e-12):
            break
        if t == 0.0 and a > 0:
            continue
        w = 1.0 if t == 0.0 else t**a
        best = max(best, w * part.besov_norm(state, index))
    return best


def e_norm(
    traj: Trajectory,
    u0: SpectralField,
    weight_a: float,
    weight_index: BesovIndex,
    base_index: BesovIndex | None = None,
    nu: float = 1.0,
    partition=None,
) -> float:
    """Composite iteration norm: sup_t ||u(t) - exp(nu t Lap) u0|| in the
    base space plus the weighted sup in the target space."""
    part = partition or build_partition(traj.grid)
    n = traj.grid.dim
    base = base_index or BesovIndex(n / 2.0, 2.0, weight_index.q)
    drift = 0.0
    for t, state in zip(traj.times, traj.states):
        drift = max(drift, part.besov_norm(state - heat_propagate(u0, t, nu), base))
    return drift + weighted_norm(traj, weight_a, weight_index, partition=part)


def picard_iterate(
    u0: SpectralField,
    v_traj: Trajectory | None,
    cfg: LansConfig,
    mcfg: MildSolverConfig,
) -> tuple:
    """Iterate the Duhamel map from the pure heat flow of u0.

    Returns (trajectory, history).  history[m].delta_norm is the weighted
    distance between iterates m and m+1; since the returned trajectory is
    the image of the last iterate, the final delta_norm is also its
    predecessor's fixed-point residual.

    Convergence is certified, not just observed: once two distances are
    available their ratio must stay at or below mcfg.contraction_target
    (ratios measured at the picard_tol floor are roundoff noise and are
    exempt).  A ratio above the target, a blow-up, or an exhausted
    iteration budget raises PicardDivergenceError carrying the last ratio
    and the full history; the usual cure is a shorter horizon or smaller
    data, since the certified factor scales linearly with the data size.
    """
    grid = cfg.grid
    require_solenoidal(u0)
    if mcfg.enforce_weight_relation:
        mcfg.validate_weight_relation(grid.dim)
    u0 = leray_project(dealias(u0))
    times = mcfg.time_nodes()
    part = build_partition(grid)

    current = Trajectory(
        times,
        [heat_propagate(u0, t, cfg.nu) for t in times],
        equation="mlans" if v_traj is not None else "lans",
        config=cfg,
    )
    history: list = []
    prev_delta = None
    for m in range(1, mcfg.picard_max_iters + 1):
        image = duhamel_map(current, u0, cfg, mcfg, v_traj)
        delta = _weighted_distance(image, current, mcfg, part)
        ratio = None if prev_delta in (None, 0.0) else delta / prev_delta
        state = IterationState(
            iterate_index=m,
            delta_norm=delta,
            e_norm=e_norm(image, u0, mcfg.weight_a, mcfg.weight_index, nu=cfg.nu, partition=part),
            ratio=ratio,
        )
        history.append(state)
        if not np.isfinite(delta):
            raise PicardDivergenceError("iterate norm is not finite", np.inf, history)
        if delta < mcfg.picard_tol:
            state.current = image
            return image, history
        if ratio is not None and delta >= 10.0 * mcfg.picard_tol and ratio > mcfg.contraction_target:
            raise PicardDivergenceError(
                "contraction ratio exceeds the configured target; "
                "shrink the horizon or the data",
                ratio,
                history,
            )
        first_delta = history[0].delta_norm
        if delta > mcfg.divergence_factor * max(first_delta, mcfg.picard_tol):
            raise PicardDivergenceError("iterates are blowing up", ratio if ratio else np.inf, history)
        if m >= 3 and all(h.ratio is not None and h.ratio >= 1.0 for h in history[-2:]) and delta > first_delta:
            raise PicardDivergenceError("no contraction", history[-1].ratio, history)
        current = image
        prev_delta = delta
    raise PicardDivergenceError(
        f"no convergence within {mcfg.picard_max_iters} iterations",
        history[-1].ratio if history[-1].ratio is not None else np.inf,
        history,
    )


def _weighted_distance(a: Trajectory, b: Trajectory, mcfg: MildSolverConfig, part) -> float:
    best = 0.0
    for i, t in enumerate(a.times):
        if t == 0.0 and mcfg.weight_a > 0:
            continue
        w = 1.0 if t == 0.0 else t**mcfg.weight_a
        best = max(best, w * part.besov_norm(a.states[i] - b.states[i], mcfg.weight_index))
    return best


def _phi_factors(z: np.ndarray) -> tuple:
    """(exp(z), phi1(z), phi2(z)) with phi1 = (e^z - 1)/z, phi2 = (e^z - 1 - z)/z^2.

    Small |z| switches to Taylor series to dodge cancellation; z <= 0 here.
    """
    e = np.exp(z)
    small = np.abs(z) < 1e-5
    zs = np.where(small, 1.0, z)  # placeholder to keep divisions defined
    with np.errstate(invalid="ignore"):
        phi1 = np.where(small, 1.0 + z / 2.0 + z**2 / 6.0, np.expm1(z) / zs)
        phi2 = np.where(small, 0.5 + z / 6.0 + z**2 / 24.0, (np.expm1(z) - z) / zs**2)
    return e, phi1, phi2


def _march(
    u0: SpectralField,
    cfg: LansConfig,
    t_end: float,
    dt: float,
    v_traj: Trajectory | None,
    nonlinear: bool,
    equation: str,
) -> Trajectory:
    grid = cfg.grid
    require_solenoidal(u0)
    steps = int(round(t_end / dt))
    if steps < 1 or abs(steps * dt - t_end) > 1e-9 * t_end:
        raise ValueError(f"t_end = {t_end} is not an integer multiple of dt = {dt}")
    times = dt * np.arange(steps + 1)
    v_states = _background_states(v_traj, times, grid)

    z = -cfg.nu * dt * grid.k_squared
    e_dt, phi1, phi2 = _phi_factors(z)

    u = leray_project(dealias(u0))
    states = [u]
    for i in range(steps):
        if nonlinear:
            n_u = nonlinear_rhs(u, cfg, v_states[i])
            stage = SpectralField(grid, e_dt * u.coeffs + dt * phi1 * n_u.coeffs, u.real_valued)
            n_stage = nonlinear_rhs(stage, cfg, v_states[i + 1])
            nxt = stage.coeffs + dt * phi2 * (n_stage.coeffs - n_u.coeffs)
        else:
            nxt = e_dt * u.coeffs
        u = leray_project(dealias(SpectralField(grid, nxt, u.real_valued)))
        if not np.all(np.isfinite(u.coeffs.view(np.float64))):
            raise SolverBlowupError(i + 1, float(times[i + 1]))
        states.append(u)
    return Trajectory(times, states, equation=equation, config=cfg, extras={"dt": dt, "nonlinear": nonlinear})


def solve_lans(
    w0: SpectralField,
    cfg: LansConfig,
    t_end: float,
    dt: float,
    nonlinear: bool = True,
) -> Trajectory:
    """Second-order exponential-integrator march of the filtered equation.

    The viscous factor is applied exactly, so with the nonlinearity
    disabled the output IS the heat flow.  States are dealiased and
    re-projected every step; a non-finite state aborts with its step index.
    """
    return _march(w0, cfg, t_end, dt, None, nonlinear, "lans")


def solve_mlans(
    u0: SpectralField,
    v_traj: Trajectory,
    cfg: LansConfig,
    t_end: float,
    dt: float,
    nonlinear: bool = True,
) -> Trajectory:
    """Same marcher for the perturbation equation; the background v must
    provide states at every step node (solve it first on the same grid)."""
    return _march(u0, cfg, t_end, dt, v_traj, nonlinear, "mlans")
