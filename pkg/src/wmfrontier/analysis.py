"""Post-hoc numerics for trade-off curves.

Pearson/Spearman correlation, per-axis whitening, a tanh frontier fit that
minimizes the mean perpendicular distance in whitened coordinates, and
truncated-linear transfer maps for predicting one model's frontier from
another's.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from .errors import DomainError

# inner projection: dense grid then derivative bisection
PROJECTION_GRID = 512
PROJECTION_BISECTIONS = 40
GRID_EXTENSION = 0.20  # x-range extended this fraction on each side

NM_MAX_ITER = 2000
NM_TOL = 1e-9
NM_RESTARTS = 4

TRANSFER_SAMPLES = 256


@dataclass(frozen=True)
class Point2D:
    x: float  # detectability axis (F0.5)
    y: float  # quality axis (s_q)

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise DomainError("points must be finite")


@dataclass(frozen=True)
class WhitenTransform:
    mean: Tuple[float, float]
    scale: Tuple[float, float]

    def apply(self, pts: np.ndarray) -> np.ndarray:
        return (pts - np.array(self.mean)) / np.array(self.scale)

    def invert(self, pts: np.ndarray) -> np.ndarray:
        return pts * np.array(self.scale) + np.array(self.mean)


@dataclass
class TanhCurve:
    """y = a * tanh(b * (x - c)) + d, in the original data coordinates."""

    a: float
    b: float
    c: float
    d: float
    residual: float = float("nan")  # mean perpendicular distance, whitened
    converged: bool = True
    whiten: Optional[WhitenTransform] = None

    def __post_init__(self):
        if self.b == 0:
            raise DomainError("tanh curve requires b != 0")

    def __call__(self, x):
        return self.a * np.tanh(self.b * (np.asarray(x, dtype=float) - self.c)) + self.d

    def to_json(self) -> dict:
        return {
            "a": self.a, "b": self.b, "c": self.c, "d": self.d,
            "residual": self.residual, "converged": self.converged,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TanhCurve":
        return cls(a=float(obj["a"]), b=float(obj["b"]),
                   c=float(obj["c"]), d=float(obj["d"]),
                   residual=float(obj.get("residual", float("nan"))),
                   converged=bool(obj.get("converged", True)))


@dataclass(frozen=True)
class TruncatedLinear:
    """y = min(cap, slope * x + intercept)."""

    slope: float
    intercept: float
    cap: float

    def __call__(self, x):
        return np.minimum(self.cap, self.slope * np.asarray(x, dtype=float)
                          + self.intercept)

    def to_json(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "cap": self.cap}

    @classmethod
    def from_json(cls, obj: dict) -> "TruncatedLinear":
        return cls(slope=float(obj["slope"]), intercept=float(obj["intercept"]),
                   cap=float(obj["cap"]))


def identity_map() -> TruncatedLinear:
    return TruncatedLinear(slope=1.0, intercept=0.0, cap=float("inf"))


# --- correlations ------------------------------------------------------------

def _as_vectors(xs, ys):
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise DomainError("correlation inputs must be equal-length vectors")
    if xs.size < 2:
        raise DomainError("correlation requires at least 2 points")
    return xs, ys


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Product-moment correlation; domain error on zero variance."""
    xs, ys = _as_vectors(xs, ys)
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    sx = float(np.sqrt((dx * dx).sum()))
    sy = float(np.sqrt((dy * dy).sum()))
    if sx == 0.0 or sy == 0.0:
        raise DomainError("pearson undefined for zero-variance input")
    return float((dx * dy).sum() / (sx * sy))


def fractional_ranks(xs: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the mean of their rank range."""
    xs = np.asarray(xs, dtype=np.float64)
    order = np.argsort(xs, kind="stable")
    ranks = np.empty(len(xs), dtype=np.float64)
    i = 0
    while i < len(xs):
        j = i
        while j + 1 < len(xs) and xs[order[j + 1]] == xs[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pearson correlation of fractional ranks."""
    xs, ys = _as_vectors(xs, ys)
    return pearson(fractional_ranks(xs), fractional_ranks(ys))


# --- whitening ---------------------------------------------------------------

def _points_array(points: Sequence[Point2D]) -> np.ndarray:
    return np.array([[p.x, p.y] for p in points], dtype=np.float64)


def whiten(points: Sequence[Point2D]):
    """Standardize each axis to zero mean, unit variance.

    Returns (whitened points, transform); invert with transform.invert.
    """
    pts = _points_array(points)
    if pts.shape[0] < 2:
        raise DomainError("whitening requires at least 2 points")
    mean = pts.mean(axis=0)
    scale = pts.std(axis=0)
    if (scale <= 0).any():
        raise DomainError("whitening undefined for a zero-variance axis")
    tf = WhitenTransform(mean=(float(mean[0]), float(mean[1])),
                         scale=(float(scale[0]), float(scale[1])))
    white = tf.apply(pts)
    return [Point2D(float(x), float(y)) for x, y in white], tf


def _safe_whiten_transform(pts: np.ndarray) -> WhitenTransform:
    """Whitening for fitting: degenerate axes get unit scale, not an error."""
    mean = pts.mean(axis=0)
    scale = pts.std(axis=0)
    scale = np.where(scale > 1e-12, scale, 1.0)
    return WhitenTransform(mean=(float(mean[0]), float(mean[1])),
                           scale=(float(scale[0]), float(scale[1])))


# --- tanh frontier fit -------------------------------------------------------

def _perp_distances(params: np.ndarray, pts: np.ndarray,
                    t_grid: np.ndarray) -> np.ndarray:
    """Shortest Euclidean distance from each point to the curve.

    Coarse argmin over t_grid, then bisection on the distance derivative
    inside the bracketing grid cells; vectorized across points.
    """
    a, b, c, d = params
    fx = a * np.tanh(b * (t_grid - c)) + d
    # squared distance matrix: grid x points
    dx = t_grid[:, None] - pts[None, :, 0]
    dy = fx[:, None] - pts[None, :, 1]
    k = np.argmin(dx * dx + dy * dy, axis=0)
    lo = t_grid[np.maximum(k - 1, 0)]
    hi = t_grid[np.minimum(k + 1, len(t_grid) - 1)]

    px = pts[:, 0]
    py = pts[:, 1]

    def dist_deriv(t):
        th = np.tanh(b * (t - c))
        f = a * th + d
        fp = a * b * (1.0 - th * th)
        return (t - px) + (f - py) * fp

    glo = dist_deriv(lo)
    for _ in range(PROJECTION_BISECTIONS):
        mid = 0.5 * (lo + hi)
        gm = dist_deriv(mid)
        take_lo = np.sign(gm) == np.sign(glo)
        lo = np.where(take_lo, mid, lo)
        glo = np.where(take_lo, gm, glo)
        hi = np.where(take_lo, hi, mid)
    t = 0.5 * (lo + hi)
    th = np.tanh(b * (t - c))
    f = a * th + d
    return np.sqrt((t - px) ** 2 + (f - py) ** 2)


def perpendicular_residuals(points: Sequence[Point2D],
                            curve: TanhCurve) -> np.ndarray:
    """Per-point perpendicular distances in the curve's whitened frame."""
    pts = _points_array(points)
    tf = curve.whiten or _safe_whiten_transform(pts)
    white = tf.apply(pts)
    # map the curve into whitened coordinates
    mx, my = tf.mean
    sx, sy = tf.scale
    wp = np.array([curve.a / sy, curve.b * sx, (curve.c - mx) / sx,
                   (curve.d - my) / sy])
    t_grid = _projection_grid(white[:, 0])
    return _perp_distances(wp, white, t_grid)


def _projection_grid(xs: np.ndarray) -> np.ndarray:
    span = xs.max() - xs.min()
    if span <= 0:
        span = 1.0
    lo = xs.min() - GRID_EXTENSION * span
    hi = xs.max() + GRID_EXTENSION * span
    return np.linspace(lo, hi, PROJECTION_GRID)


def fit_tanh_curve(points: Sequence[Point2D]) -> TanhCurve:
    """Fit y = a tanh(b (x - c)) + d by mean perpendicular distance.

    Distances are measured in per-axis whitened coordinates. Nelder-Mead
    from a moment-based start plus jittered restarts; if no restart
    converges within the iteration budget the best parameters so far are
    returned with converged=False.
    """
    pts = _points_array(points)
    if pts.shape[0] < 4:
        raise DomainError("tanh fit requires at least 4 points")
    tf = _safe_whiten_transform(pts)
    white = tf.apply(pts)
    xs, ys = white[:, 0], white[:, 1]
    t_grid = _projection_grid(xs)

    def objective(params):
        if params[1] == 0.0:
            return float("inf")
        return float(_perp_distances(params, white, t_grid).mean())

    x_range = max(xs.max() - xs.min(), 1e-6)
    y_half = 0.5 * (ys.max() - ys.min())
    x0 = np.array([y_half if y_half > 0 else 0.1,
                   4.0 / x_range,
                   float(np.median(xs)),
                   float(ys.mean())])

    rng = np.random.default_rng(0)
    best = None
    best_val = float("inf")
    converged = False
    for restart in range(1 + NM_RESTARTS):
        start = x0 if restart == 0 else x0 * (1 + 0.3 * rng.standard_normal(4)) \
            + 0.1 * rng.standard_normal(4)
        if start[1] == 0.0:
            start[1] = 1.0
        res = minimize(objective, start, method="Nelder-Mead",
                       options={"maxiter": NM_MAX_ITER, "xatol": NM_TOL,
                                "fatol": NM_TOL})
        if res.fun < best_val:
            best_val = res.fun
            best = res.x
            converged = converged or bool(res.success)
    a, b, c, d = best
    if b == 0.0:
        b = 1e-12
    mx, my = tf.mean
    sx, sy = tf.scale
    # unwhiten: y' = a tanh(b (x'-c)) + d with x'=(x-mx)/sx, y'=(y-my)/sy
    return TanhCurve(
        a=float(a * sy),
        b=float(b / sx),
        c=float(c * sx + mx),
        d=float(d * sy + my),
        residual=float(best_val),
        converged=converged,
        whiten=tf,
    )


# --- truncated-linear fit and transfer ---------------------------------------

def _ols(xs: np.ndarray, ys: np.ndarray):
    A = np.column_stack([xs, np.ones_like(xs)])
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    return float(coef[0]), float(coef[1])


def fit_truncated_linear(xs: Sequence[float], ys: Sequence[float]) -> TruncatedLinear:
    """Least-squares fit of y = min(cap, slope x + intercept).

    The cap is scanned over the distinct y values, midpoints between
    them, and a sentinel above the maximum (plain OLS), fitting the linear
    part on the un-truncated subset each time; ties pick the smallest cap,
    and the plain-OLS candidate guarantees SSE <= OLS SSE.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1 or xs.size < 3:
        raise DomainError("truncated-linear fit requires >= 3 (x, y) points")

    distinct = np.unique(ys)
    candidates = list(distinct)
    candidates += [0.5 * (u + v) for u, v in zip(distinct[:-1], distinct[1:])]
    candidates.append(float(distinct[-1]) + 1.0)  # truncation inactive

    best = None
    best_sse = float("inf")
    for cap in sorted(candidates):
        mask = ys < cap
        if mask.sum() < 2:
            continue
        slope, intercept = _ols(xs[mask], ys[mask])
        pred = np.minimum(cap, slope * xs + intercept)
        sse = float(((pred - ys) ** 2).sum())
        if sse < best_sse - 1e-15:  # strict: ties keep the smaller cap
            best_sse = sse
            best = TruncatedLinear(slope=slope, intercept=intercept, cap=float(cap))
    if best is None:
        raise DomainError("no admissible cap candidate (degenerate y values)")
    return best


def transfer_curve(
    base: TanhCurve,
    quality_map: TruncatedLinear,
    detect_map: TruncatedLinear,
    x_range: Tuple[float, float] = (0.0, 1.0),
    n_samples: int = TRANSFER_SAMPLES,
) -> List[Point2D]:
    """Predicted frontier: sample the base curve, push through both maps.

    Both axes are scores, so predictions are clipped into [0, 1].
    """
    xs = np.linspace(x_range[0], x_range[1], n_samples)
    ys = base(xs)
    return [
        Point2D(float(np.clip(detect_map(x), 0.0, 1.0)),
                float(np.clip(quality_map(y), 0.0, 1.0)))
        for x, y in zip(xs, ys)
    ]
