"""
Fractal dimension of sampled attractors.

Covers use axis-aligned boxes of side eps anchored at the cloud's min corner instead
of eps-balls; the two covering numbers differ by a dimension-dependent factor that
drops out of the log-log slope.
"""

import logging
from dataclasses import replace
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from src.backend.models.errors import FitError, InvalidDiscretizationError
from src.backend.models.model_spec import ModelSpec
from src.backend.models.point_cloud import DimensionEstimate, PointCloud
from src.backend.models.reports import DecayFit
from src.backend.models.spectrum import SpectralState
from src.backend.models.trajectory import IntegratorConfig
from src.backend.services.diagnostics import fit_decay
from src.backend.services.integrator import integrate_ensemble
from src.backend.services.model_terms import random_states

logger = logging.getLogger(__name__)

LADDER_RATIO = 0.5
LADDER_RUNGS = 8
COARSE_RUNGS_DROPPED = 2
SATURATION_FRACTION = 0.2
MIN_CLOUD_POINTS = 1000
MAX_PAIR_POINTS = 2000
BOX_SNAP = 1e-9


def sample_attractor(
    spec: ModelSpec,
    cfg: IntegratorConfig,
    n_traj: int,
    transient: float,
    sample_dt: float,
    embed_modes: int,
    seed: int = 0,
    scale: float = 1.0,
    workers: int = 1,
) -> PointCloud:
    """
    Post-transient samples of the first embed_modes coefficients.

    Initial data are constant histories with random coefficients (1/k decay, amplitude
    scale) drawn from np.random.default_rng(seed). Each trajectory runs to cfg.T_final
    and contributes the states recorded every sample_dt after the transient.
    """
    if n_traj < 1:
        raise ValueError(f"n_traj must be positive, got {n_traj}")
    if not 1 <= embed_modes <= spec.m:
        raise ValueError(f"embed_modes must lie in [1, {spec.m}], got {embed_modes}")
    if transient >= cfg.T_final:
        raise InvalidDiscretizationError(
            f"transient={transient} leaves nothing to sample before T_final={cfg.T_final}"
        )
    stride = int(round(sample_dt / cfg.dt))
    if stride < 1 or abs(stride * cfg.dt - sample_dt) > 1e-9 * sample_dt:
        raise InvalidDiscretizationError(
            f"sample_dt={sample_dt} is not a multiple of dt={cfg.dt}"
        )
    if transient < 1.0 / spec.spectrum.lambda_1 + spec.r:
        logger.warning(
            f"transient={transient} is shorter than 1/lambda_1 + r; samples may carry "
            "the initial layer"
        )

    rng = np.random.default_rng(seed)
    rows = random_states(rng, n_traj, spec.m, scale)
    initial = [lambda theta, row=row: SpectralState(row, theta) for row in rows]
    sampling_cfg = replace(cfg, record_every=stride, store_states=True)
    records = integrate_ensemble(spec, initial, sampling_cfg, workers=workers)

    points = []
    for record in records:
        for t, coeffs in zip(record.times, record.states):
            if t >= transient - 1e-12:
                points.append(coeffs[:embed_modes])
    if not points:
        raise FitError("No post-transient samples were recorded")
    if len(points) < MIN_CLOUD_POINTS:
        logger.warning(
            f"Attractor sample holds {len(points)} points (< {MIN_CLOUD_POINTS}); "
            "dimension estimates will be coarse"
        )
    meta = {
        "seed": seed,
        "n_traj": n_traj,
        "transient": transient,
        "sample_dt": sample_dt,
        "embed_modes": embed_modes,
        "m": spec.m,
        "T_final": cfg.T_final,
        "scale": scale,
    }
    return PointCloud(np.vstack(points), meta)


def default_ladder(cloud: PointCloud) -> list[float]:
    top = cloud.diameter_bound
    top = top if top > 0.0 else 1.0
    return [top * LADDER_RATIO**k for k in range(LADDER_RUNGS)]


def _check_ladder(eps_ladder) -> np.ndarray:
    eps = np.asarray(eps_ladder, dtype=float)
    if eps.ndim != 1 or eps.size < 2:
        raise FitError(f"Need at least two scales, got {eps.size}")
    if np.any(eps <= 0.0) or np.any(np.diff(eps) >= 0.0):
        raise FitError("Scales must be positive and strictly descending")
    return eps


def box_count(points: np.ndarray, eps: float) -> int:
    """Occupied boxes of side eps on the grid anchored at the min corner"""
    offsets = (points - points.min(axis=0)) / eps
    index = np.floor(offsets + BOX_SNAP).astype(np.int64)
    return int(np.unique(index, axis=0).shape[0])


def _default_window(counts: np.ndarray, n_points: int) -> tuple[int, int]:
    usable = [
        i
        for i in range(COARSE_RUNGS_DROPPED, counts.size)
        if 0 < counts[i] <= SATURATION_FRACTION * n_points
    ]
    if len(usable) < 2:
        return 0, int(counts.size)
    return usable[0], usable[-1] + 1


def _fit_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    if x.size < 2 or np.ptp(x) == 0.0:
        raise FitError("Degenerate fit window")
    if x.size == 2:
        slope = (y[1] - y[0]) / (x[1] - x[0])
        return float(slope), 0.0
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    dof = x.size - 2
    stderr = np.sqrt(np.sum(residuals**2) / dof / np.sum((x - x.mean()) ** 2))
    return float(slope), float(stderr)


def box_counting(
    cloud: PointCloud,
    eps_ladder: Optional[list[float]] = None,
    window: Optional[tuple[int, int]] = None,
) -> DimensionEstimate:
    """
    Slope of ln n(eps) against ln(1/eps).

    The default ladder halves eps eight times starting from the bounding-box diagonal.
    The default window drops the two coarsest rungs and every rung whose count exceeds
    a fifth of the sample size; window=(start, stop) selects rungs explicitly.
    """
    eps = _check_ladder(default_ladder(cloud) if eps_ladder is None else eps_ladder)
    counts = np.array([box_count(cloud.points, e) for e in eps])
    start, stop = _default_window(counts, cloud.n) if window is None else window
    if stop - start < 2:
        raise FitError(f"Fit window {start}:{stop} holds fewer than two scales")
    x = np.log(1.0 / eps[start:stop])
    y = np.log(counts[start:stop])
    slope, stderr = _fit_slope(x, y)
    return DimensionEstimate(
        epsilons=eps.tolist(),
        counts=counts.tolist(),
        slope=max(slope, 0.0),
        stderr=stderr,
        window=(int(start), int(stop)),
    )


def correlation_dimension(
    cloud: PointCloud,
    radii: Optional[list[float]] = None,
    window: Optional[tuple[int, int]] = None,
) -> DimensionEstimate:
    """
    Pair-counting slope of ln C(r) against ln r, C(r) the fraction of pairs closer than r.

    Clouds larger than MAX_PAIR_POINTS are thinned by a fixed stride. Counts hold the
    number of pairs per radius.
    """
    radii = _check_ladder(default_ladder(cloud) if radii is None else radii)
    points = cloud.points
    if cloud.n > MAX_PAIR_POINTS:
        points = points[:: int(np.ceil(cloud.n / MAX_PAIR_POINTS))]
    if points.shape[0] < 2:
        return DimensionEstimate(
            radii.tolist(), [0] * radii.size, 0.0, 0.0, (0, int(radii.size)), "correlation"
        )
    distances = pdist(points)
    counts = np.array([np.count_nonzero(distances < r) for r in radii])
    if window is None:
        usable = [i for i in range(COARSE_RUNGS_DROPPED, radii.size) if counts[i] > 0]
        start, stop = (usable[0], usable[-1] + 1) if len(usable) >= 2 else (0, radii.size)
    else:
        start, stop = window
    sel = slice(start, stop)
    mask = counts[sel] > 0
    if np.count_nonzero(mask) < 2:
        slope, stderr = 0.0, 0.0
    else:
        x = np.log(radii[sel][mask])
        y = np.log(counts[sel][mask] / distances.size)
        slope, stderr = _fit_slope(x, y)
    return DimensionEstimate(
        epsilons=radii.tolist(),
        counts=counts.tolist(),
        slope=max(slope, 0.0),
        stderr=stderr,
        window=(int(start), int(stop)),
        method="correlation",
    )


def covering_dimension_bound(gamma: float, mZ_value: float, L_K: Optional[float] = None) -> float:
    """
    ln m_Z / ln(2 / (1 + gamma)) for a covering count m_Z taken at radius 4 L_K / (1 - gamma).

    L_K only documents which radius the caller evaluated m_Z at; the count itself is
    supplied.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    if mZ_value < 1:
        raise ValueError(f"Covering count must be >= 1, got {mZ_value}")
    if L_K is not None and L_K <= 0.0:
        raise ValueError(f"L_K must be positive, got {L_K}")
    return float(np.log(mZ_value) / np.log(2.0 / (1.0 + gamma)))


def attraction_rate(
    times, states: np.ndarray, reference: PointCloud, window=None
) -> DecayFit:
    """Exponential rate at which a trajectory approaches a sampled attractor cloud"""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    tree = cKDTree(reference.points)
    distances, _ = tree.query(states[:, : reference.d])
    return fit_decay(times, distances, window, nonnegative=True)


def cantor_points(depth: int) -> np.ndarray:
    """Left endpoints of the 2^depth intervals of the middle-thirds Cantor construction"""
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    digits = (np.arange(2**depth)[:, None] >> np.arange(depth - 1, -1, -1)) & 1
    weights = 2.0 * 3.0 ** -np.arange(1, depth + 1)
    return (digits * weights).sum(axis=1).reshape(-1, 1)
