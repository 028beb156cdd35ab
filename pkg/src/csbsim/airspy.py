"""Mobile-eavesdropper trajectory attack against a codebook beamformer.

A ground receiver drives along a lane while the transmitter tracks it with
per-step codewords. The eavesdropper rides a virtual plane parallel to the
array face at distance d, discretized to a G x G grid of plane coordinates,
and plans a finite-horizon trajectory maximizing the summed rate reward
log2(1 + SNR * |gain|^2) under a per-step velocity bound and a minimum
angular separation from the receiver. Planning is exact backward induction
over the (cell, step) state space; states with no permissible successor are
marked -inf and never selected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .array import ArrayConfig, GridIndex, dft_codeword, nearest_grid_index
from .channel_sim import path_power
from .geometry import RectPoint, UavPlaneSpec, UavPlaneCoord, rect_to_msph

NEG_INF = float("-inf")


class InfeasibleError(RuntimeError):
    """No permissible trajectory exists (every start state is excluded)."""


@dataclass(frozen=True)
class Scenario:
    """Episode geometry: TX at the origin, RX driving the lane {x=lane_x, z=-h}."""

    array_cfg: ArrayConfig
    theta_tilt: float
    h: float
    lane_x: float
    rx_speed: float
    y_range: tuple[float, float]
    t_s: float
    sigma2: float
    p0: float = 1.0
    r0: float = 1.0

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError(f"h must be positive, got {self.h}")
        if self.lane_x <= 0:
            raise ValueError(f"lane_x must be positive, got {self.lane_x}")
        if self.rx_speed <= 0 or self.t_s <= 0:
            raise ValueError("rx_speed and t_s must be positive")
        if self.y_range[1] <= self.y_range[0]:
            raise ValueError(f"empty y_range {self.y_range}")
        if self.sigma2 <= 0 or self.p0 <= 0 or self.r0 <= 0:
            raise ValueError("sigma2, p0, r0 must be positive")

    @property
    def num_steps(self) -> int:
        span = self.y_range[1] - self.y_range[0]
        return round(span / (self.rx_speed * self.t_s)) + 1


@dataclass(frozen=True)
class AttackConstraints:
    uav_plane: UavPlaneSpec
    v_max: float
    epsilon: float
    grid_g: int

    def __post_init__(self):
        if self.v_max <= 0:
            raise ValueError(f"v_max must be positive, got {self.v_max}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.grid_g < 2:
            raise ValueError(f"grid_g must be >= 2, got {self.grid_g}")

    @property
    def step_radius(self) -> float:
        """Max per-step plane-coordinate displacement: v_max*T_s/(2 d tan(beta/2)).

        T_s is supplied by the scenario; this property returns the radius per
        unit T_s and is scaled at use sites.
        """
        spec = self.uav_plane
        return self.v_max / (2 * spec.d * math.tan(spec.beta / 2))


@dataclass(frozen=True)
class Trajectory:
    """Planned eavesdropper path: one plane coordinate per episode step."""

    steps: tuple[UavPlaneCoord, ...]
    cells: tuple[tuple[int, int], ...]
    total_reward: float


@dataclass(frozen=True)
class ValueTable:
    """Backward-induction values, indexed (grid u, grid v, time step)."""

    h_values: np.ndarray


def rx_state_at(scenario: Scenario, t: int):
    """Receiver beam grid index, true angles, and range at step t.

    The receiver is at (lane_x, y_start + speed*t*T_s, -h); angles come from
    the modified spherical transform with the scenario's tilt, and the beam
    index is the nearest codebook grid point.
    """
    if not 0 <= t < scenario.num_steps:
        raise ValueError(f"step {t} outside episode of {scenario.num_steps} steps")
    y = scenario.y_range[0] + scenario.rx_speed * t * scenario.t_s
    sph = rect_to_msph(RectPoint(scenario.lane_x, y, -scenario.h), scenario.theta_tilt)
    cfg = scenario.array_cfg
    grid = nearest_grid_index(sph.theta, sph.phi, cfg.n_t, cfg.n_rows)
    return grid, (sph.theta, sph.phi), sph.r


def secrecy_rate(f, rx_angles, rx_range, eve_angles, eve_range, scenario: Scenario) -> float:
    """Unclamped log2(1 + snr_rx*|g_rx|^2) - log2(1 + snr_eve*|g_eve|^2)."""
    from .array import array_response, beam_gain

    rows, cols = f.shape
    terms = []
    for (theta, phi), rng in ((rx_angles, rx_range), (eve_angles, eve_range)):
        snr = path_power(rng, scenario.p0, scenario.r0) / scenario.sigma2
        g = abs(beam_gain(array_response(theta, phi, cols, rows), f))
        terms.append(math.log2(1 + snr * g * g))
    return terms[0] - terms[1]


class _Tables:
    """Static cell geometry plus per-step beams, rewards, and feasibility.

    Obtain instances through _tables(); construction does the full per-step
    gain evaluation and is worth caching across the planning calls.
    """

    def __init__(self, scenario: Scenario, constraints: AttackConstraints):
        spec = constraints.uav_plane
        if abs(spec.theta_tilt - scenario.theta_tilt) > 1e-12:
            raise ValueError("UAV plane tilt differs from the scenario tilt")
        g = constraints.grid_g
        self.g = g
        self.scenario = scenario
        self.constraints = constraints
        self.u_grid = -1.0 + 2.0 * np.arange(g) / g
        self.v_grid = self.u_grid.copy()
        half = spec.d * math.tan(spec.beta / 2)
        sin_t, cos_t = math.sin(spec.theta_tilt), math.cos(spec.theta_tilt)
        uu = self.u_grid[:, None]
        vv = self.v_grid[None, :]
        x = uu * half * sin_t + spec.d * cos_t + 0.0 * vv
        y = np.broadcast_to(vv * half, (g, g))
        z = uu * half * cos_t - spec.d * sin_t + 0.0 * vv
        self.r = np.sqrt(x * x + y * y + z * z)
        with np.errstate(divide="ignore", invalid="ignore"):
            theta = np.arctan(y / x)
            phi = np.arctan(z / x) + spec.theta_tilt
        fov = spec.beta / 2 + 1e-12
        self.valid = (x > 0) & (np.abs(theta) <= fov) & (np.abs(phi) <= fov)
        self.theta = np.where(self.valid, theta, 0.0)
        self.phi = np.where(self.valid, phi, 0.0)

        cfg = scenario.array_cfg
        rows, cols = cfg.shape
        n = scenario.num_steps
        self.rx_grids = []
        self.rx_angles = []
        self.rx_ranges = []
        for t in range(n):
            grid, angles, rng = rx_state_at(scenario, t)
            self.rx_grids.append(grid)
            self.rx_angles.append(angles)
            self.rx_ranges.append(rng)

        # per-step |gain|^2 of each valid cell under that step's beam
        a_el = np.exp(-1j * np.pi * np.sin(self.phi[self.valid, None]) * np.arange(rows))
        a_az = np.exp(-1j * np.pi * np.sin(self.theta[self.valid, None]) * np.arange(cols))
        gain_cache: dict[GridIndex, np.ndarray] = {}
        snr = path_power(self.r[self.valid], scenario.p0, scenario.r0) / scenario.sigma2
        self.reward = np.full((g, g, n), NEG_INF)
        self.gain2 = np.zeros((g, g, n))
        for t in range(n):
            beam_grid = self.rx_grids[t]
            if beam_grid not in gain_cache:
                f = dft_codeword(beam_grid, cfg)
                amp = np.abs(np.einsum("ck,kl,cl->c", a_el, f.conj(), a_az))
                gain_cache[beam_grid] = amp * amp
            gain2 = gain_cache[beam_grid]
            self.gain2[:, :, t][self.valid] = gain2
            self.reward[:, :, t][self.valid] = np.log2(1.0 + snr * gain2)

        # feasibility: valid geometry and eps-separation from the RX angles
        eps2 = constraints.epsilon**2
        self.feasible = np.empty((g, g, n), dtype=bool)
        for t in range(n):
            th_r, ph_r = self.rx_angles[t]
            sep2 = (self.theta - th_r) ** 2 + (self.phi - ph_r) ** 2
            self.feasible[:, :, t] = self.valid & (sep2 > eps2)

        rad_idx = constraints.step_radius * scenario.t_s * g / 2.0
        lim = int(math.floor(rad_idx))
        self.offsets = [
            (di, dj)
            for di in range(-lim, lim + 1)
            for dj in range(-lim, lim + 1)
            if di * di + dj * dj <= rad_idx * rad_idx
        ]

    def coord(self, cell) -> UavPlaneCoord:
        return UavPlaneCoord(float(self.u_grid[cell[0]]), float(self.v_grid[cell[1]]))


@lru_cache(maxsize=8)
def _tables(scenario: Scenario, constraints: AttackConstraints) -> _Tables:
    return _Tables(scenario, constraints)


def reward(s, scenario: Scenario, constraints: AttackConstraints) -> float:
    """Rate reward log2(1 + snr * |gain|^2) of state s = (a, b, t).

    Evaluated at the cell's angles under the beamformer of the state's own
    step t (the planner credits this value when s is entered at step t).

    Raises:
        ValueError: if the cell maps behind the array or outside the
            transmitter's field of view, where the link model is undefined.
    """
    a, b, t = s
    tab = _tables(scenario, constraints)
    if not 0 <= t < scenario.num_steps:
        raise ValueError(f"step {t} outside episode of {scenario.num_steps} steps")
    if not tab.valid[a, b]:
        raise ValueError(f"cell ({a}, {b}) is outside the coverage region")
    return float(tab.reward[a, b, t])


def feasible_cells(t: int, scenario: Scenario, constraints: AttackConstraints) -> np.ndarray:
    """Boolean (grid_g, grid_g) mask of cells permissible at step t.

    A cell is permissible when it maps in front of the array inside the
    field of view and keeps angular separation epsilon from the step-t
    receiver direction.

    Raises:
        ValueError: if t is outside the episode.
    """
    if not 0 <= t < scenario.num_steps:
        raise ValueError(f"step {t} outside episode of {scenario.num_steps} steps")
    tab = _tables(scenario, constraints)
    return tab.feasible[:, :, t].copy()


def valid_actions(s, constraints: AttackConstraints, scenario: Scenario) -> set[tuple[int, int]]:
    """Successor cells of state s = (grid u index, grid v index, t).

    A successor is any in-bounds cell within the velocity radius whose step
    t+1 angles exist (in front of the array, inside the field of view) and
    keep the squared angular separation from the receiver above epsilon^2.
    The empty set is a valid result.
    """
    a, b, t = s
    tab = _tables(scenario, constraints)
    if not 0 <= t < scenario.num_steps - 1:
        return set()
    out = set()
    for di, dj in tab.offsets:
        aa, bb = a + di, b + dj
        if 0 <= aa < tab.g and 0 <= bb < tab.g and tab.feasible[aa, bb, t + 1]:
            out.add((aa, bb))
    return out


def value_iteration(scenario: Scenario, constraints: AttackConstraints) -> ValueTable:
    """Finite-horizon backward induction over (cell, step).

    Terminal-layer values are 0; earlier layers satisfy
    H(s, t) = max over permissible successors s' of R(s', t+1) + H(s', t+1),
    with -inf where no successor is permissible.
    """
    tab = _tables(scenario, constraints)
    g, n = tab.g, scenario.num_steps
    h = np.zeros((g, g, n))
    for t in range(n - 2, -1, -1):
        cand = tab.reward[:, :, t + 1] + h[:, :, t + 1]
        cand[~tab.feasible[:, :, t + 1]] = NEG_INF
        best = np.full((g, g), NEG_INF)
        for di, dj in tab.offsets:
            src_a = slice(max(0, -di), g - max(0, di))
            src_b = slice(max(0, -dj), g - max(0, dj))
            dst_a = slice(max(0, di), g + min(0, di))
            dst_b = slice(max(0, dj), g + min(0, dj))
            np.maximum(best[src_a, src_b], cand[dst_a, dst_b], out=best[src_a, src_b])
        h[:, :, t] = best
    return ValueTable(h)


def extract_trajectory(h: ValueTable, scenario: Scenario, constraints: AttackConstraints) -> Trajectory:
    """Greedy forward walk through the value table.

    The start is the feasible step-0 cell with maximal finite value; each
    step follows the successor maximizing R + H at the next layer. All ties
    break toward the lexicographically smallest cell, and the returned
    path's summed reward reproduces the start value exactly.

    Raises:
        InfeasibleError: if no step-0 cell is both feasible and has a
            permissible continuation.
    """
    tab = _tables(scenario, constraints)
    g, n = tab.g, scenario.num_steps
    values = h.h_values
    start_vals = np.where(tab.feasible[:, :, 0], values[:, :, 0], NEG_INF)
    if not np.isfinite(start_vals).any():
        raise InfeasibleError("no feasible start state on the plane grid")
    flat = int(np.argmax(start_vals))  # first maximum in C order = lexicographic
    cell = (flat // g, flat % g)
    cells = [cell]
    for t in range(n - 1):
        candidates = []
        for di, dj in tab.offsets:
            aa, bb = cell[0] + di, cell[1] + dj
            if 0 <= aa < g and 0 <= bb < g and tab.feasible[aa, bb, t + 1]:
                candidates.append((aa, bb))
        candidates.sort()
        best_val = NEG_INF
        best_cell = None
        for aa, bb in candidates:
            val = tab.reward[aa, bb, t + 1] + values[aa, bb, t + 1]
            if val > best_val:
                best_val = val
                best_cell = (aa, bb)
        if best_cell is None:
            raise InfeasibleError(f"dead end at step {t} from cell {cell}")
        cell = best_cell
        cells.append(cell)

    total = 0.0
    for t in range(n - 1, 0, -1):
        total = tab.reward[cells[t][0], cells[t][1], t] + total
    rad = constraints.step_radius * scenario.t_s
    for t in range(1, n):
        du = tab.u_grid[cells[t][0]] - tab.u_grid[cells[t - 1][0]]
        dv = tab.v_grid[cells[t][1]] - tab.v_grid[cells[t - 1][1]]
        if math.hypot(du, dv) > rad + 1e-12:
            raise AssertionError(f"velocity bound violated at step {t}")
        if not tab.feasible[cells[t][0], cells[t][1], t]:
            raise AssertionError(f"separation violated at step {t}")
    if not tab.feasible[cells[0][0], cells[0][1], 0]:
        raise AssertionError("infeasible start cell")
    return Trajectory(
        steps=tuple(tab.coord(c) for c in cells),
        cells=tuple(cells),
        total_reward=total,
    )


def trajectory_rewards(trajectory: Trajectory, scenario: Scenario, constraints: AttackConstraints) -> np.ndarray:
    """Per-step rate reward of each visited cell under that step's beam.

    The planner's objective counts steps 1..N-1 only; index 0 here is the
    start cell's own (uncounted) reward.
    """
    tab = _tables(scenario, constraints)
    return np.array([tab.reward[a, b, t] for t, (a, b) in enumerate(trajectory.cells)])


def episode_secrecy_profile(trajectory: Trajectory, scenario: Scenario, constraints: AttackConstraints) -> np.ndarray:
    """Per-step unclamped secrecy rate along a planned trajectory."""
    tab = _tables(scenario, constraints)
    cfg = scenario.array_cfg
    out = np.empty(len(trajectory.cells))
    for t, (a, b) in enumerate(trajectory.cells):
        f = dft_codeword(tab.rx_grids[t], cfg)
        out[t] = secrecy_rate(
            f,
            tab.rx_angles[t],
            tab.rx_ranges[t],
            (float(tab.theta[a, b]), float(tab.phi[a, b])),
            float(tab.r[a, b]),
            scenario,
        )
    return out
