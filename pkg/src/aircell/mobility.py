"""Ground-user population dynamics.

Four movement models (static, random walk, random waypoint, Gauss-Markov) over
a shared (n, 2) position array, plus a lat/lon CSV loader for real user
positions. Users bounce off the area edges by specular reflection; waypoint
targets are drawn inside the area so that model never needs it.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .area import AreaBounds

MODELS = ("static", "rw", "rwp", "gmm")
EARTH_RADIUS_M = 6371000.0

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GmmParams:
    """Gauss-Markov tuning: one memory knob plus the speed/heading targets.

    mean_direction=None gives each user its initial heading as its long-run
    mean, which avoids herding the whole population into one wall.
    """

    memory_alpha: float = 0.75
    mean_speed: float = 1.0
    mean_direction: float | None = None
    speed_sigma: float = 0.5
    direction_sigma: float = 0.3

    def __post_init__(self):
        if not 0.0 <= self.memory_alpha <= 1.0:
            raise ValueError("memory_alpha must be in [0, 1]")
        if self.speed_sigma < 0 or self.direction_sigma < 0:
            raise ValueError("sigmas must be nonnegative")
        if self.mean_speed < 0:
            raise ValueError("mean speed must be nonnegative")


@dataclass
class UserPopulation:
    """One cohort of ground users advanced by a single mobility model."""

    positions: np.ndarray
    model: str
    bounds: AreaBounds
    speed_max: float = 2.0
    step_duration: float = 1.0
    # per-model state; only the fields the model needs are populated
    speed: np.ndarray | None = None
    direction: np.ndarray | None = None
    waypoint: np.ndarray | None = None
    pause: np.ndarray | None = None
    mean_direction: np.ndarray | None = None
    gmm_params: GmmParams | None = None
    rwp_pause_max: float = 5.0

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @classmethod
    def create(
        cls,
        model: str,
        positions,
        bounds: AreaBounds,
        rng: np.random.Generator,
        *,
        gmm_params: GmmParams | None = None,
        speed_max: float = 2.0,
        step_duration: float = 1.0,
        rwp_pause_max: float = 5.0,
    ) -> "UserPopulation":
        if model not in MODELS:
            raise ValueError(f"unknown mobility model {model!r}; expected one of {MODELS}")
        positions = np.array(positions, dtype=np.float64).reshape(-1, 2)
        pop = cls(
            positions=positions,
            model=model,
            bounds=bounds,
            speed_max=speed_max,
            step_duration=step_duration,
            rwp_pause_max=rwp_pause_max,
        )
        n = pop.n
        if model == "rwp":
            pop.waypoint = _draw_waypoints(n, bounds, rng)
            pop.speed = speed_max - rng.uniform(0.0, speed_max, n)  # (0, max], zero excluded
            pop.pause = np.zeros(n)
        elif model == "gmm":
            pop.gmm_params = gmm_params or GmmParams()
            pop.direction = rng.uniform(0.0, TWO_PI, n)
            pop.speed = np.full(n, pop.gmm_params.mean_speed)
            if pop.gmm_params.mean_direction is None:
                pop.mean_direction = pop.direction.copy()
            else:
                pop.mean_direction = np.full(n, pop.gmm_params.mean_direction)
        return pop


def uniform_positions(n: int, bounds: AreaBounds, rng: np.random.Generator) -> np.ndarray:
    """n ground positions uniform over the area floor."""
    x = rng.uniform(bounds.x_min, bounds.x_max, n)
    y = rng.uniform(bounds.y_min, bounds.y_max, n)
    return np.column_stack([x, y])


def _draw_waypoints(n: int, bounds: AreaBounds, rng: np.random.Generator) -> np.ndarray:
    return uniform_positions(n, bounds, rng)


def _reflect_axis(coords: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Specular reflection of out-of-range coordinates, in place.

    Returns the mask of coordinates that bounced (for mirroring headings).
    """
    flipped = np.zeros(coords.shape[0], dtype=bool)
    for _ in range(16):
        below = coords < lo
        above = coords > hi
        if not (below.any() or above.any()):
            break
        coords[below] = 2.0 * lo - coords[below]
        coords[above] = 2.0 * hi - coords[above]
        flipped ^= below | above
    else:  # pathological speed/area ratio: pin to the edge rather than loop forever
        np.clip(coords, lo, hi, out=coords)
    return flipped


def _reflect_into_bounds(pop: UserPopulation) -> tuple[np.ndarray, np.ndarray]:
    b = pop.bounds
    flipped_x = _reflect_axis(pop.positions[:, 0], b.x_min, b.x_max)
    flipped_y = _reflect_axis(pop.positions[:, 1], b.y_min, b.y_max)
    return flipped_x, flipped_y


def step_static(pop: UserPopulation) -> UserPopulation:
    """Static users: the fixed point of stepping."""
    if pop.model != "static":
        raise ValueError("population model is not 'static'")
    return pop


def step_rw(pop: UserPopulation, rng: np.random.Generator) -> UserPopulation:
    """Random walk: fresh uniform heading and speed every step, zero pause."""
    if pop.model != "rw":
        raise ValueError("population model is not 'rw'")
    n = pop.n
    if n == 0:
        return pop
    theta = rng.uniform(0.0, TWO_PI, n)
    speed = rng.uniform(0.0, pop.speed_max, n)
    step_len = speed * pop.step_duration
    pop.positions[:, 0] += step_len * np.cos(theta)
    pop.positions[:, 1] += step_len * np.sin(theta)
    _reflect_into_bounds(pop)
    return pop


def step_rwp(pop: UserPopulation, rng: np.random.Generator) -> UserPopulation:
    """Random waypoint: pause, else head to the waypoint; redraw on arrival."""
    if pop.model != "rwp":
        raise ValueError("population model is not 'rwp'")
    n = pop.n
    if n == 0:
        return pop
    dt = pop.step_duration
    paused = pop.pause > 0.0
    pop.pause[paused] -= dt

    moving = ~paused
    delta = pop.waypoint - pop.positions
    dist = np.hypot(delta[:, 0], delta[:, 1])
    reach = pop.speed * dt
    arriving = moving & (dist <= reach)
    cruising = moving & ~arriving

    if cruising.any():
        scale = (reach[cruising] / dist[cruising])[:, None]
        pop.positions[cruising] += delta[cruising] * scale
    if arriving.any():
        k = int(arriving.sum())
        pop.positions[arriving] = pop.waypoint[arriving]  # land exactly on target
        pop.waypoint[arriving] = _draw_waypoints(k, pop.bounds, rng)
        pop.speed[arriving] = pop.speed_max - rng.uniform(0.0, pop.speed_max, k)
        pop.pause[arriving] = rng.uniform(0.0, pop.rwp_pause_max, k)
    return pop


def step_gmm(pop: UserPopulation, params: GmmParams, rng: np.random.Generator) -> UserPopulation:
    """Gauss-Markov: AR(1) recurrences on speed and heading.

    v_t = a*v_{t-1} + (1-a)*v_mean + sqrt(1-a^2)*N(0, sigma_v), same for the
    heading; speed clamps to [0, speed_max] and bounced users get a mirrored
    heading so they walk away from the wall.
    """
    if pop.model != "gmm":
        raise ValueError("population model is not 'gmm'")
    n = pop.n
    if n == 0:
        return pop
    a = params.memory_alpha
    spread = math.sqrt(1.0 - a * a)
    noise_speed = rng.normal(0.0, 1.0, n)
    noise_dir = rng.normal(0.0, 1.0, n)
    pop.speed = a * pop.speed + (1.0 - a) * params.mean_speed + spread * params.speed_sigma * noise_speed
    pop.direction = (
        a * pop.direction + (1.0 - a) * pop.mean_direction + spread * params.direction_sigma * noise_dir
    )
    np.clip(pop.speed, 0.0, pop.speed_max, out=pop.speed)
    step_len = pop.speed * pop.step_duration
    pop.positions[:, 0] += step_len * np.cos(pop.direction)
    pop.positions[:, 1] += step_len * np.sin(pop.direction)
    flipped_x, flipped_y = _reflect_into_bounds(pop)
    pop.direction[flipped_x] = math.pi - pop.direction[flipped_x]
    pop.direction[flipped_y] = -pop.direction[flipped_y]
    return pop


def step_population(pop: UserPopulation, rng: np.random.Generator) -> UserPopulation:
    """Advance one step under the population's own model."""
    if pop.model == "static":
        return step_static(pop)
    if pop.model == "rw":
        return step_rw(pop, rng)
    if pop.model == "rwp":
        return step_rwp(pop, rng)
    if pop.model == "gmm":
        return step_gmm(pop, pop.gmm_params or GmmParams(), rng)
    raise ValueError(f"unknown mobility model {pop.model!r}")


@dataclass(frozen=True)
class CsvUsers:
    """Loaded user positions in local meters plus the out-of-area reject count."""

    positions: np.ndarray
    static: np.ndarray
    n_rejected: int


def load_users_csv(path, origin_lat: float, origin_lon: float, bounds: AreaBounds | None = None) -> CsvUsers:
    """Read `lat,lon[,static]` rows and project them to local meters.

    Equirectangular projection about the origin: x = R * dlon * cos(lat0),
    y = R * dlat (radians). Rows falling outside `bounds` are dropped and
    counted in the result. Malformed rows raise with their line number.
    """
    lat0 = math.radians(origin_lat)
    lon0 = math.radians(origin_lon)
    cos_lat0 = math.cos(lat0)

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        cols = [c.strip().lower() for c in header]
        if cols not in (["lat", "lon"], ["lat", "lon", "static"]):
            raise ValueError(f"{path}: header must be 'lat,lon' or 'lat,lon,static', got {header!r}")
        has_static = len(cols) == 3

        xs, ys, statics = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(cols):
                raise ValueError(f"{path}: line {lineno}: expected {len(cols)} fields, got {len(row)}")
            try:
                lat = float(row[0])
                lon = float(row[1])
                is_static = bool(int(row[2])) if has_static else True
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: malformed row {row!r}") from exc
            xs.append(EARTH_RADIUS_M * (math.radians(lon) - lon0) * cos_lat0)
            ys.append(EARTH_RADIUS_M * (math.radians(lat) - lat0))
            statics.append(is_static)

    if not xs:
        raise ValueError(f"{path}: no user rows")

    positions = np.column_stack([np.asarray(xs), np.asarray(ys)])
    static = np.asarray(statics, dtype=bool)
    if bounds is not None:
        keep = (
            (positions[:, 0] >= bounds.x_min)
            & (positions[:, 0] <= bounds.x_max)
            & (positions[:, 1] >= bounds.y_min)
            & (positions[:, 1] <= bounds.y_max)
        )
        n_rejected = int((~keep).sum())
        positions = positions[keep]
        static = static[keep]
    else:
        n_rejected = 0
    return CsvUsers(positions=positions, static=static, n_rejected=n_rejected)
