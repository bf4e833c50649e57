"""Classical limit: stroboscopic sections, Lyapunov exponents, well areas.

The dimensionless classical Hamiltonian (time in units of 1/omega0) is

    H(q, p, t) = (q^2 + p^2)/2 + (sqrt(69 kappa)/15) q^3 + (kappa/10) q^4
                 + (20 Gamma sqrt(kappa)/sqrt(69)) (w - 1/w) p cos(w t),

with w = omega_d/omega0.  Its cubic/quartic coefficients embed the
nonlinearity ratio g4 = (20/69) g3^2/omega0 (see model.nonlinearities_for_kappa),
and the drive coefficient equals sqrt(2) Omega_d for the Gamma defined through
the exact linear-response displacement.  Trajectories are strobed at
t = n tau with tau = 4 pi / omega_d, the period-doubled frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from .errors import ContractViolationError, KposimError, UnsupportedRegimeError
from .model import chaos_boundary_gamma

SQRT69 = math.sqrt(69.0)
#: total tangent growth allowed over the classification window before a
#: trajectory counts as chaotic (the "10^3 stretching" budget)
GROWTH_BUDGET = math.log(1.0e3)


@dataclass(frozen=True)
class ClassicalParams:
    """Dimensionless parameters of the classical limit."""

    kappa: float
    gamma: float
    omega_d_ratio: float = 2.0

    def __post_init__(self):
        if self.kappa <= 0:
            raise UnsupportedRegimeError(f"kappa must be positive, got {self.kappa}")
        if self.gamma < 0:
            raise UnsupportedRegimeError(f"gamma must be nonnegative, got {self.gamma}")
        if self.omega_d_ratio <= 1.0:
            raise UnsupportedRegimeError("omega_d must exceed omega0 (drive above resonance)")

    @property
    def tau(self) -> float:
        """Stroboscopic period 4 pi / omega_d in 1/omega0 time units."""
        return 4.0 * math.pi / self.omega_d_ratio

    @property
    def section_time(self) -> float:
        """Start/strobe time of the Poincare section, pi/(2 omega_d) = tau/8.

        At this drive phase the section is symmetric under p -> -p (the flow
        maps (q, p, t) to (q, -p, pi/omega_d - t)), which pins both well
        centers onto the p = 0 axis; sections at phase 0 show the same
        structure rotated off-axis, where a p = 0 seed line misses the wells.
        """
        return self.tau / 8.0

    @property
    def cubic_force(self) -> float:
        return SQRT69 * math.sqrt(self.kappa) / 5.0

    @property
    def quartic_force(self) -> float:
        return 2.0 * self.kappa / 5.0

    @property
    def drive_coefficient(self) -> float:
        w = self.omega_d_ratio
        return (20.0 * self.gamma * math.sqrt(self.kappa) / SQRT69) * (w - 1.0 / w)

    @property
    def well_halfdistance_estimate(self) -> float:
        """Quartic-theory half distance between the wells, sqrt(2 Gamma)."""
        return math.sqrt(2.0 * self.gamma)


def rescaled(params: ClassicalParams, eta2: float) -> ClassicalParams:
    """Parameters (kappa/eta^2, eta^2 Gamma) of the area-similarity symmetry."""
    return replace(params, kappa=params.kappa / eta2, gamma=params.gamma * eta2)


def eom(t: float, state, params: ClassicalParams) -> tuple[float, float]:
    """(dq/dt, dp/dt) of the driven double-well flow."""
    q, p = state
    dq = p + params.drive_coefficient * math.cos(params.omega_d_ratio * t)
    dp = -q - params.cubic_force * q * q - params.quartic_force * q**3
    return dq, dp


def hamiltonian_value(t: float, q: float, p: float, params: ClassicalParams) -> float:
    """Classical Hamiltonian (per omega0) at phase-space point (q, p)."""
    return (
        0.5 * (q * q + p * p)
        + (SQRT69 * math.sqrt(params.kappa) / 15.0) * q**3
        + (params.kappa / 10.0) * q**4
        + params.drive_coefficient * p * math.cos(params.omega_d_ratio * t)
    )


@njit(cache=True)
def _run_benettin(q0, p0, c3, c4, dcoef, wd, tau, t_start, n_periods, steps_per_period,
                  escape_radius2, strobes):
    """RK4 evolution with a co-integrated tangent vector.

    Renormalizes the tangent every strobe period, records strobe points, and
    returns (periods completed, total log growth, tail log growth, escaped).
    """
    dt = tau / steps_per_period
    q, p = q0, p0
    vq, vp = 1.0, 0.0
    sum_log = 0.0
    tail_log = 0.0
    tail_start = n_periods // 2
    strobes[0, 0] = q
    strobes[0, 1] = p
    for n in range(n_periods):
        t = t_start + n * tau
        for _ in range(steps_per_period):
            k1q = p + dcoef * math.cos(wd * t)
            k1p = -q - q * q * (c3 + c4 * q)
            j1 = -1.0 - q * (2.0 * c3 + 3.0 * c4 * q)
            l1q = vp
            l1p = j1 * vq

            qa = q + 0.5 * dt * k1q
            pa = p + 0.5 * dt * k1p
            va = vq + 0.5 * dt * l1q
            wa = vp + 0.5 * dt * l1p
            tm = t + 0.5 * dt
            cosm = math.cos(wd * tm)
            k2q = pa + dcoef * cosm
            k2p = -qa - qa * qa * (c3 + c4 * qa)
            j2 = -1.0 - qa * (2.0 * c3 + 3.0 * c4 * qa)
            l2q = wa
            l2p = j2 * va

            qb = q + 0.5 * dt * k2q
            pb = p + 0.5 * dt * k2p
            vb = vq + 0.5 * dt * l2q
            wb = vp + 0.5 * dt * l2p
            k3q = pb + dcoef * cosm
            k3p = -qb - qb * qb * (c3 + c4 * qb)
            j3 = -1.0 - qb * (2.0 * c3 + 3.0 * c4 * qb)
            l3q = wb
            l3p = j3 * vb

            qc = q + dt * k3q
            pc = p + dt * k3p
            vc = vq + dt * l3q
            wc = vp + dt * l3p
            te = t + dt
            cose = math.cos(wd * te)
            k4q = pc + dcoef * cose
            k4p = -qc - qc * qc * (c3 + c4 * qc)
            j4 = -1.0 - qc * (2.0 * c3 + 3.0 * c4 * qc)
            l4q = wc
            l4p = j4 * vc

            q += dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
            p += dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
            vq += dt / 6.0 * (l1q + 2.0 * l2q + 2.0 * l3q + l4q)
            vp += dt / 6.0 * (l1p + 2.0 * l2p + 2.0 * l3p + l4p)
            t = te
            if q * q + p * p > escape_radius2:
                return n, sum_log, tail_log, True
        strobes[n + 1, 0] = q
        strobes[n + 1, 1] = p
        norm = math.sqrt(vq * vq + vp * vp)
        if norm > 0.0:
            growth = math.log(norm)
            sum_log += growth
            if n >= tail_start:
                tail_log += growth
            vq /= norm
            vp /= norm
    return n_periods, sum_log, tail_log, False


@njit(cache=True)
def _strobe_map_with_jacobian(q0, p0, c3, c4, dcoef, wd, tau, t_start, steps_per_period):
    """One-period strobe map and its 2x2 Jacobian (two tangent columns)."""
    dt = tau / steps_per_period
    q, p = q0, p0
    a11, a21 = 1.0, 0.0
    a12, a22 = 0.0, 1.0
    t = t_start
    for _ in range(steps_per_period):
        k1q = p + dcoef * math.cos(wd * t)
        k1p = -q - q * q * (c3 + c4 * q)
        j1 = -1.0 - q * (2.0 * c3 + 3.0 * c4 * q)
        m1_11, m1_21 = a21, j1 * a11
        m1_12, m1_22 = a22, j1 * a12

        qa = q + 0.5 * dt * k1q
        pa = p + 0.5 * dt * k1p
        b11 = a11 + 0.5 * dt * m1_11
        b21 = a21 + 0.5 * dt * m1_21
        b12 = a12 + 0.5 * dt * m1_12
        b22 = a22 + 0.5 * dt * m1_22
        tm = t + 0.5 * dt
        cosm = math.cos(wd * tm)
        k2q = pa + dcoef * cosm
        k2p = -qa - qa * qa * (c3 + c4 * qa)
        j2 = -1.0 - qa * (2.0 * c3 + 3.0 * c4 * qa)
        m2_11, m2_21 = b21, j2 * b11
        m2_12, m2_22 = b22, j2 * b12

        qb = q + 0.5 * dt * k2q
        pb = p + 0.5 * dt * k2p
        b11 = a11 + 0.5 * dt * m2_11
        b21 = a21 + 0.5 * dt * m2_21
        b12 = a12 + 0.5 * dt * m2_12
        b22 = a22 + 0.5 * dt * m2_22
        k3q = pb + dcoef * cosm
        k3p = -qb - qb * qb * (c3 + c4 * qb)
        j3 = -1.0 - qb * (2.0 * c3 + 3.0 * c4 * qb)
        m3_11, m3_21 = b21, j3 * b11
        m3_12, m3_22 = b22, j3 * b12

        qc = q + dt * k3q
        pc = p + dt * k3p
        b11 = a11 + dt * m3_11
        b21 = a21 + dt * m3_21
        b12 = a12 + dt * m3_12
        b22 = a22 + dt * m3_22
        te = t + dt
        cose = math.cos(wd * te)
        k4q = pc + dcoef * cose
        k4p = -qc - qc * qc * (c3 + c4 * qc)
        j4 = -1.0 - qc * (2.0 * c3 + 3.0 * c4 * qc)
        m4_11, m4_21 = b21, j4 * b11
        m4_12, m4_22 = b22, j4 * b12

        q += dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        p += dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        a11 += dt / 6.0 * (m1_11 + 2.0 * m2_11 + 2.0 * m3_11 + m4_11)
        a21 += dt / 6.0 * (m1_21 + 2.0 * m2_21 + 2.0 * m3_21 + m4_21)
        a12 += dt / 6.0 * (m1_12 + 2.0 * m2_12 + 2.0 * m3_12 + m4_12)
        a22 += dt / 6.0 * (m1_22 + 2.0 * m2_22 + 2.0 * m3_22 + m4_22)
        t = te
    return q, p, a11, a12, a21, a22


@dataclass(frozen=True)
class TrajectoryResult:
    """Strobe samples and chaos indicators of one trajectory."""

    initial: tuple[float, float]
    strobe_points: np.ndarray
    lyapunov: float | None
    lyapunov_tail: float | None
    classified: str | None
    escaped: bool
    t_total: float
    params: ClassicalParams


def default_escape_radius(params: ClassicalParams) -> float:
    """Ten times the inter-minima distance (plus a floor for tiny Gamma)."""
    return 20.0 * params.well_halfdistance_estimate + 10.0


def trajectory(
    initial: tuple[float, float],
    params: ClassicalParams,
    n_periods: int,
    steps_per_period: int = 256,
    escape_radius: float | None = None,
) -> TrajectoryResult:
    """Evolve one seed for n_periods stroboscopic periods with tangent dynamics.

    Classification: a trajectory is regular when the tangent growth
    accumulated over the second half of the run stays below the 10^3
    stretching budget; escapes count as chaotic.
    """
    if steps_per_period < 200:
        raise ContractViolationError(
            f"steps_per_period = {steps_per_period} gives dt > tau/200"
        )
    if escape_radius is None:
        escape_radius = default_escape_radius(params)
    strobes = np.empty((n_periods + 1, 2))
    done, sum_log, tail_log, escaped = _run_benettin(
        float(initial[0]),
        float(initial[1]),
        params.cubic_force,
        params.quartic_force,
        params.drive_coefficient,
        params.omega_d_ratio,
        params.tau,
        params.section_time,
        n_periods,
        steps_per_period,
        escape_radius**2,
        strobes,
    )
    t_done = done * params.tau
    if escaped:
        return TrajectoryResult(
            initial=tuple(initial),
            strobe_points=strobes[: done + 1].copy(),
            lyapunov=max(sum_log / t_done, 0.0) if t_done > 0 else None,
            lyapunov_tail=None,
            classified="chaotic",
            escaped=True,
            t_total=t_done,
            params=params,
        )
    lam = max(sum_log / t_done, 0.0)
    regular = tail_log < GROWTH_BUDGET
    return TrajectoryResult(
        initial=tuple(initial),
        strobe_points=strobes,
        lyapunov=lam,
        lyapunov_tail=max(tail_log / (0.5 * t_done), 0.0),
        classified="regular" if regular else "chaotic",
        escaped=False,
        t_total=t_done,
        params=params,
    )


def integrate(
    initial: tuple[float, float],
    params: ClassicalParams,
    t_end: float,
    dt: float | None = None,
) -> TrajectoryResult:
    """Strobe samples at t = n tau up to t_end (fixed-step 4th order)."""
    if dt is None:
        steps = 256
    else:
        if dt > params.tau / 200.0:
            raise ContractViolationError(f"dt = {dt} exceeds tau/200")
        steps = int(math.ceil(params.tau / dt))
    n_periods = int(round(t_end / params.tau))
    if n_periods < 1:
        raise ContractViolationError("t_end shorter than one stroboscopic period")
    return trajectory(initial, params, n_periods, steps_per_period=steps)


def lyapunov(
    initial: tuple[float, float],
    params: ClassicalParams,
    t_total: float,
    dt: float | None = None,
) -> float:
    """Asymptotic Lyapunov estimate (Benettin, clipped at zero).

    Requires t_total >= 2000 tau; shorter runs do not separate slow shear
    from weak chaos reliably.
    """
    if t_total < 2000.0 * params.tau:
        raise ContractViolationError("lyapunov requires t_total >= 2000 tau")
    result = integrate(initial, params, t_total, dt)
    if result.escaped:
        raise KposimError("trajectory escaped; Lyapunov estimate unreliable")
    return result.lyapunov


@dataclass(frozen=True)
class WellInfo:
    """Period-tau elliptic fixed points of the strobe map."""

    minus: tuple[float, float]
    plus: tuple[float, float]
    converged: bool

    @property
    def separation(self) -> float:
        return self.plus[0] - self.minus[0]

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.plus[0] + self.minus[0])


def _newton_fixed_point(guess, params: ClassicalParams, steps_per_period: int,
                        tol: float = 1e-11, max_iter: int = 60):
    q, p = guess
    for _ in range(max_iter):
        qt, pt, a11, a12, a21, a22 = _strobe_map_with_jacobian(
            q, p,
            params.cubic_force, params.quartic_force, params.drive_coefficient,
            params.omega_d_ratio, params.tau, params.section_time, steps_per_period,
        )
        rq, rp = qt - q, pt - p
        if math.hypot(rq, rp) < tol:
            return (q, p), True
        m11, m12, m21, m22 = a11 - 1.0, a12, a21, a22 - 1.0
        det = m11 * m22 - m12 * m21
        if det == 0.0 or not math.isfinite(det):
            return (q, p), False
        q -= (m22 * rq - m12 * rp) / det
        p -= (-m21 * rq + m11 * rp) / det
        if not (math.isfinite(q) and math.isfinite(p)):
            return guess, False
    return (q, p), False


def locate_wells(params: ClassicalParams, steps_per_period: int = 256) -> WellInfo:
    """Find the two stable period-tau orbits at the bottoms of the wells.

    Newton iteration on the strobe map seeded at the quartic-theory minima
    (+/- sqrt(2 Gamma), 0) of the symmetric section.  Falls back to the seed
    positions (converged=False) deep in the chaotic regime.
    """
    half = params.well_halfdistance_estimate
    minus, ok_m = _newton_fixed_point((-half, 0.0), params, steps_per_period)
    plus, ok_p = _newton_fixed_point((half, 0.0), params, steps_per_period)
    converged = ok_m and ok_p and minus[0] < 0.0 < plus[0]
    if not converged:
        minus, plus = (-half, 0.0), (half, 0.0)
    return WellInfo(minus=minus, plus=plus, converged=converged)


def quadrature_scale(params: ClassicalParams, wells: WellInfo | None = None) -> float:
    """Classical-to-quantum coordinate scale from the well half-distance.

    Ratio of the measured half-distance between the strobe-map wells to the
    quantum quadrature value sqrt(2 Gamma); close to 1 in the regular regime.
    """
    if params.gamma <= 0:
        raise UnsupportedRegimeError("quadrature scale needs a double well (Gamma > 0)")
    if wells is None:
        wells = locate_wells(params)
    return 0.5 * wells.separation / math.sqrt(2.0 * params.gamma)


@dataclass(frozen=True)
class AreaScanConfig:
    """Knobs of the double-well area algorithm.

    seed_windows "span" seeds one q interval of span_factor times the
    inter-minima distance (the double-well-structure scan); "wells" seeds two
    narrow windows of +-0.15 separation around each well center, which keeps
    far circulating orbits out of the raster when hunting shrinking islands.
    """

    n_seeds: int = 400
    span_factor: float = 1.5
    n_periods: int = 2000
    steps_per_period: int = 256
    grid_size: int = 512
    pad_fraction: float = 0.2
    escape_radius: float | None = None
    seed_windows: str = "span"


@dataclass(frozen=True)
class AreaEstimate:
    """Raster estimate of the regular double-well region."""

    area: float
    grid_cell: float
    n_regular_cells: int
    params: ClassicalParams
    n_regular: int
    n_chaotic: int
    n_escaped: int
    all_chaotic: bool
    wells: WellInfo
    occupancy: np.ndarray
    q_edges: np.ndarray
    p_edges: np.ndarray


def doublewell_area(params: ClassicalParams, config: AreaScanConfig | None = None) -> AreaEstimate:
    """Area of the regular region seeded across the double-well structure.

    Follows the five-step recipe: locate the wells, seed p = 0 initial
    conditions across span_factor times the inter-minima distance, classify
    each trajectory by its tangent growth, rasterize the strobe points of the
    regular ones, and sum the occupied cells.
    """
    cfg = config or AreaScanConfig()
    wells = locate_wells(params, cfg.steps_per_period)
    if cfg.seed_windows == "wells":
        half = cfg.n_seeds // 2
        width = 0.15 * wells.separation
        seeds = np.concatenate(
            [
                np.linspace(wells.minus[0] - width, wells.minus[0] + width, half),
                np.linspace(wells.plus[0] - width, wells.plus[0] + width,
                            cfg.n_seeds - half),
            ]
        )
    elif cfg.seed_windows == "span":
        span = cfg.span_factor * wells.separation
        seeds = np.linspace(
            wells.midpoint - 0.5 * span, wells.midpoint + 0.5 * span, cfg.n_seeds
        )
    else:
        raise ContractViolationError(f"unknown seed_windows mode {cfg.seed_windows!r}")
    escape = cfg.escape_radius or default_escape_radius(params)

    regular_strobes = []
    n_regular = n_chaotic = n_escaped = 0
    for q0 in seeds:
        result = trajectory(
            (q0, 0.0), params, cfg.n_periods, cfg.steps_per_period, escape_radius=escape
        )
        if result.escaped:
            n_escaped += 1
            n_chaotic += 1
        elif result.classified == "chaotic":
            n_chaotic += 1
        else:
            n_regular += 1
            regular_strobes.append(result.strobe_points)

    if n_regular == 0:
        empty = np.zeros((1, 1), dtype=bool)
        return AreaEstimate(
            area=0.0, grid_cell=0.0, n_regular_cells=0, params=params,
            n_regular=0, n_chaotic=n_chaotic, n_escaped=n_escaped,
            all_chaotic=True, wells=wells, occupancy=empty,
            q_edges=np.zeros(2), p_edges=np.zeros(2),
        )

    points = np.concatenate(regular_strobes, axis=0)
    qlo, qhi = points[:, 0].min(), points[:, 0].max()
    plo, phi = points[:, 1].min(), points[:, 1].max()
    qpad = cfg.pad_fraction * max(qhi - qlo, 1e-9)
    ppad = cfg.pad_fraction * max(phi - plo, 1e-9)
    hist, q_edges, p_edges = np.histogram2d(
        points[:, 0], points[:, 1], bins=cfg.grid_size,
        range=[[qlo - qpad, qhi + qpad], [plo - ppad, phi + ppad]],
    )
    occupancy = hist > 0
    cell = float((q_edges[1] - q_edges[0]) * (p_edges[1] - p_edges[0]))
    n_cells = int(np.count_nonzero(occupancy))
    return AreaEstimate(
        area=n_cells * cell, grid_cell=cell, n_regular_cells=n_cells, params=params,
        n_regular=n_regular, n_chaotic=n_chaotic, n_escaped=n_escaped,
        all_chaotic=False, wells=wells, occupancy=occupancy,
        q_edges=q_edges, p_edges=p_edges,
    )


def connected_double_well(estimate: AreaEstimate) -> bool:
    """True when both well centers fall in one connected regular raster blob."""
    from scipy import ndimage

    if estimate.all_chaotic:
        return False
    labels, _ = ndimage.label(estimate.occupancy, structure=np.ones((3, 3), dtype=int))

    def _label_at(point):
        i = np.searchsorted(estimate.q_edges, point[0]) - 1
        j = np.searchsorted(estimate.p_edges, point[1]) - 1
        if 0 <= i < labels.shape[0] and 0 <= j < labels.shape[1]:
            return labels[i, j]
        return 0

    lm, lp = _label_at(estimate.wells.minus), _label_at(estimate.wells.plus)
    return lm != 0 and lm == lp


@dataclass(frozen=True)
class IslandVanishingResult:
    """Gamma at which the regular-island area drops below the floor."""

    kappa: float
    gamma_vanish: float
    gamma_star: float
    area_floor: float
    quadrature_scale: float
    trace: tuple[tuple[float, float], ...]


def island_vanishing_gamma(
    kappa: float,
    area_floor: float | None = None,
    omega_d_ratio: float = 2.0,
    config: AreaScanConfig | None = None,
    gamma_start: float | None = None,
    gamma_max: float | None = None,
    rel_tol: float = 0.02,
) -> IslandVanishingResult:
    """Bisect over Gamma until the regular area falls below `area_floor`.

    The default floor is one quantum resolution cell, 2 pi s^2, with s the
    measured classical-to-quantum quadrature scale at the starting Gamma.
    """
    cfg = config or AreaScanConfig(n_seeds=256, n_periods=1000, seed_windows="wells")
    gamma_star = chaos_boundary_gamma(kappa)
    # start safely inside the regular regime; the islands only start shrinking
    # around the chaos boundary
    gamma_lo = gamma_start or 0.8 * gamma_star
    gamma_cap = gamma_max or 8.0 * gamma_star
    params_lo = ClassicalParams(kappa=kappa, gamma=gamma_lo, omega_d_ratio=omega_d_ratio)
    scale = quadrature_scale(params_lo)
    floor = area_floor if area_floor is not None else 2.0 * math.pi * scale**2
    if floor <= 0:
        raise ContractViolationError("area_floor must be positive")

    trace: list[tuple[float, float]] = []

    def area_at(gamma: float) -> float:
        est = doublewell_area(
            ClassicalParams(kappa=kappa, gamma=gamma, omega_d_ratio=omega_d_ratio), cfg
        )
        trace.append((gamma, est.area))
        return est.area

    a_lo = area_at(gamma_lo)
    if a_lo <= floor:
        raise KposimError(
            f"area {a_lo:.3g} at starting Gamma {gamma_lo:.3g} is already below "
            f"the floor {floor:.3g}; scan trace: {trace}"
        )
    gamma_hi = gamma_lo
    while True:
        gamma_hi *= 1.3
        if gamma_hi > gamma_cap:
            raise KposimError(
                f"area never fell below the floor {floor:.3g} up to Gamma = "
                f"{gamma_cap:.3g}; scan trace: {trace}"
            )
        if area_at(gamma_hi) <= floor:
            break
        gamma_lo = gamma_hi

    while (gamma_hi - gamma_lo) > rel_tol * gamma_hi:
        mid = 0.5 * (gamma_lo + gamma_hi)
        if area_at(mid) <= floor:
            gamma_hi = mid
        else:
            gamma_lo = mid

    return IslandVanishingResult(
        kappa=kappa,
        gamma_vanish=0.5 * (gamma_lo + gamma_hi),
        gamma_star=gamma_star,
        area_floor=floor,
        quadrature_scale=scale,
        trace=tuple(trace),
    )
