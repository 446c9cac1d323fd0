"""Homogeneous 2D geometry: homography representation, normalized DLT
fitting, projection, and transfer-error metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSample,
    HorizonDegenerate,
    InsufficientData,
    SingularModel,
)

# |w| <= HORIZON_RTOL * ||(x, y, 1)|| marks a point as on the horizon.
HORIZON_RTOL = 1e-8
_DET_TOL = 1e-12
_SV_TIE_TOL = 1e-12


class Homography:
    """3x3 projective transform with a unique stored representation.

    The matrix is rescaled to unit Frobenius norm with its largest-magnitude
    entry positive, so any two matrices describing the same transform store
    identical entries and can be compared entrywise.
    """

    __slots__ = ("m", "_inv")

    def __init__(self, m):
        m = np.array(m, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("homography entries must be finite")
        norm = float(np.linalg.norm(m))
        if norm == 0.0:
            raise SingularModel("zero matrix")
        m /= norm
        flat = m.ravel()
        if flat[int(np.argmax(np.abs(flat)))] < 0.0:
            np.negative(m, out=m)
        if abs(float(np.linalg.det(m))) <= _DET_TOL:
            raise SingularModel("matrix is numerically singular")
        m.flags.writeable = False
        self.m = m
        self._inv = None

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    def inverse(self) -> "Homography":
        """Inverse transform, cached (instances are immutable)."""
        if self._inv is None:
            self._inv = Homography(np.linalg.inv(self.m))
        return self._inv

    def to_line(self) -> str:
        """Serialize as 9 whitespace-separated reals, row-major."""
        return " ".join(f"{v:.17g}" for v in self.m.ravel())

    @classmethod
    def from_line(cls, line: str) -> "Homography":
        parts = line.split()
        if len(parts) != 9:
            raise ValueError(f"expected 9 numbers, got {len(parts)}")
        return cls(np.array([float(p) for p in parts]).reshape(3, 3))

    def __repr__(self):
        rows = "; ".join(
            " ".join(f"{v:.6g}" for v in row) for row in self.m
        )
        return f"Homography([{rows}])"

    def __reduce__(self):
        # Restore the stored matrix verbatim: re-entering the constructor
        # would renormalize and shift the last ulp, breaking bitwise
        # determinism across process boundaries.
        return (_restore_homography, (np.array(self.m),))


def _restore_homography(m: np.ndarray) -> Homography:
    h = Homography.__new__(Homography)
    m = np.array(m)
    m.flags.writeable = False
    h.m = m
    h._inv = None
    return h


def invert(h: Homography) -> Homography:
    """Normalized inverse of ``h``. Raises SingularModel if not invertible."""
    return h.inverse()


@dataclass(frozen=True)
class ImageExtents:
    """Pixel dimensions of an image."""

    width: float
    height: float

    def __post_init__(self):
        if not (np.isfinite(self.width) and np.isfinite(self.height)):
            raise ValueError("extents must be finite")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("extents must be positive")

    @property
    def diagonal(self) -> float:
        return float(np.hypot(self.width, self.height))


class MatchSet:
    """Paired 2D point correspondences between two images.

    Coordinates are stored as two read-only (N, 2) float arrays. Homogeneous
    forms are cached lazily since residual evaluation reuses them for every
    hypothesis.
    """

    __slots__ = ("src", "dst", "_cache")

    def __init__(self, src, dst):
        src = np.array(src, dtype=float)
        dst = np.array(dst, dtype=float)
        if src.ndim != 2 or src.shape[1] != 2 or src.shape != dst.shape:
            raise ValueError(
                f"expected matching (N, 2) arrays, got {src.shape} and {dst.shape}"
            )
        if not (np.all(np.isfinite(src)) and np.all(np.isfinite(dst))):
            raise ValueError("match coordinates must be finite")
        src.flags.writeable = False
        dst.flags.writeable = False
        self.src = src
        self.dst = dst
        self._cache = None

    def __len__(self):
        return self.src.shape[0]

    def subset(self, indices) -> "MatchSet":
        """New MatchSet restricted to ``indices`` (index array or bool mask)."""
        return MatchSet(self.src[indices], self.dst[indices])

    @classmethod
    def from_rows(cls, rows) -> "MatchSet":
        """Build from an (N, 4) array of ``x1 y1 x2 y2`` rows."""
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != 4:
            raise ValueError(f"expected an (N, 4) array, got {rows.shape}")
        return cls(rows[:, :2], rows[:, 2:])

    def _homogeneous(self):
        # (src_h, dst_h, src_norms, dst_norms); *_h are (3, N)
        if self._cache is None:
            src_h = np.vstack([self.src.T, np.ones(len(self))])
            dst_h = np.vstack([self.dst.T, np.ones(len(self))])
            self._cache = (
                src_h,
                dst_h,
                np.linalg.norm(src_h, axis=0),
                np.linalg.norm(dst_h, axis=0),
            )
        return self._cache


def project(h: Homography, p) -> np.ndarray:
    """Project a single point through ``h``.

    Raises HorizonDegenerate when the point lies (numerically) on the line
    mapped to infinity.
    """
    p = np.asarray(p, dtype=float)
    v = h.m @ (p[0], p[1], 1.0)
    if abs(v[2]) <= HORIZON_RTOL * np.sqrt(p[0] ** 2 + p[1] ** 2 + 1.0):
        raise HorizonDegenerate(f"point {tuple(p)} maps to infinity")
    return np.array([v[0] / v[2], v[1] / v[2]])


def project_points(h: Homography, pts) -> np.ndarray:
    """Project an (N, 2) array of points; raises HorizonDegenerate if any
    point is on the horizon."""
    pts = np.asarray(pts, dtype=float)
    q = h.m[:, :2] @ pts.T + h.m[:, 2:]
    norms = np.sqrt(pts[:, 0] ** 2 + pts[:, 1] ** 2 + 1.0)
    if np.any(np.abs(q[2]) <= HORIZON_RTOL * norms):
        raise HorizonDegenerate("one or more points map to infinity")
    return (q[:2] / q[2]).T


def _squared_errors(m, pts_h, pts_norms, targets):
    # Squared distance between projections of pts_h and targets; np.inf where
    # the projection is on the horizon (absorbed as outliers by callers).
    q = m @ pts_h
    w = q[2]
    bad = np.abs(w) <= HORIZON_RTOL * pts_norms
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        dx = q[0] / w - targets[:, 0]
        dy = q[1] / w - targets[:, 1]
        e = dx * dx + dy * dy
    e[bad] = np.inf
    np.nan_to_num(e, copy=False, nan=np.inf, posinf=np.inf)
    return e


def direct_transfer_errors(h: Homography, matches: MatchSet) -> np.ndarray:
    """Per-match squared forward-projection error, np.inf on the horizon."""
    src_h, _, src_norms, _ = matches._homogeneous()
    return _squared_errors(h.m, src_h, src_norms, matches.dst)


def symmetric_transfer_errors(h: Homography, matches: MatchSet) -> np.ndarray:
    """Per-match squared symmetric transfer error (forward plus backward),
    np.inf where either projection is on the horizon.

    A model too close to singular for its inverse to satisfy the
    representation invariant gets all-infinite errors, so consensus scoring
    absorbs it as scoring zero inliers instead of failing.
    """
    src_h, dst_h, src_norms, dst_norms = matches._homogeneous()
    try:
        inv_m = h.inverse().m
    except SingularModel:
        return np.full(len(matches), np.inf)
    fwd = _squared_errors(h.m, src_h, src_norms, matches.dst)
    bwd = _squared_errors(inv_m, dst_h, dst_norms, matches.src)
    return fwd + bwd


def direct_transfer_error(h: Homography, src, dst) -> float:
    """Squared distance between ``project(h, src)`` and ``dst``."""
    p = project(h, src)
    dst = np.asarray(dst, dtype=float)
    return float((p[0] - dst[0]) ** 2 + (p[1] - dst[1]) ** 2)


def symmetric_transfer_error(h: Homography, src, dst) -> float:
    """Sum of forward and backward squared transfer errors for one match."""
    return direct_transfer_error(h, src, dst) + direct_transfer_error(
        h.inverse(), dst, src
    )


def _hartley(pts):
    # Translate centroid to origin, scale mean norm to sqrt(2). Returns the
    # normalized points plus the transform and its inverse.
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    mean_dist = np.sqrt((centered**2).sum(axis=1)).mean()
    if mean_dist <= 1e-12:
        raise DegenerateSample("sample points coincide")
    s = np.sqrt(2.0) / mean_dist
    t = np.array(
        [[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]]
    )
    t_inv = np.array(
        [[1.0 / s, 0.0, centroid[0]], [0.0, 1.0 / s, centroid[1]], [0.0, 0.0, 1.0]]
    )
    return centered * s, t, t_inv


def fit_homography_arrays(src, dst) -> Homography:
    """Least-squares homography from (N, 2) arrays via normalized DLT.

    Hartley normalization conditions both point sets, the algebraic solution
    is the right singular vector of the 2Nx9 design matrix with the smallest
    singular value, and the result is denormalized and canonicalized.

    Raises:
        InsufficientData: fewer than 4 correspondences.
        DegenerateSample: the sample does not determine a unique homography
            (rank deficiency, tied smallest singular values, or a singular
            least-squares solution).
    """
    n = src.shape[0]
    if n < 4:
        raise InsufficientData(f"need at least 4 matches, got {n}")
    src_n, t1, _ = _hartley(src)
    dst_n, _, t2_inv = _hartley(dst)

    a = np.zeros((2 * n, 9))
    x, y = src_n[:, 0], src_n[:, 1]
    u, v = dst_n[:, 0], dst_n[:, 1]
    a[0::2, 0] = x
    a[0::2, 1] = y
    a[0::2, 2] = 1.0
    a[0::2, 6] = -x * u
    a[0::2, 7] = -y * u
    a[0::2, 8] = -u
    a[1::2, 3] = x
    a[1::2, 4] = y
    a[1::2, 5] = 1.0
    a[1::2, 6] = -x * v
    a[1::2, 7] = -y * v
    a[1::2, 8] = -v

    try:
        if 2 * n < 9:
            # Exactly-determined 4-point case: the null vector only appears in
            # the full V, with an implicit ninth singular value of zero.
            _, s, vt = np.linalg.svd(a, full_matrices=True)
            s = np.append(s, 0.0)
        else:
            _, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise DegenerateSample(f"SVD failed: {exc}") from exc

    scale = max(1.0, float(s[0]))
    if s[7] <= 1e-12 * scale or (s[7] - s[8]) <= _SV_TIE_TOL * scale:
        raise DegenerateSample("sample does not determine a unique homography")

    h_norm = vt[8].reshape(3, 3)
    try:
        return Homography(t2_inv @ h_norm @ t1)
    except SingularModel as exc:
        raise DegenerateSample(f"least-squares solution is singular: {exc}") from exc


def dlt_fit(matches: MatchSet) -> Homography:
    """Least-squares homography for a MatchSet via normalized DLT."""
    return fit_homography_arrays(matches.src, matches.dst)
