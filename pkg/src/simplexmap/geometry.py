"""Regular-simplex geometry of the latent space.

For n classes the latent space is R^(n-1), carved into n cone segments by
the n unit vertices of a regular simplex centered at the origin.  Segment k
is the set of nonnegative combinations of the mirrored vertices -p_i, i != k,
and contains vertex p_k on its central ray.  Everything else in the package
(the training-data transformation, the label rule, the probability
integrals, the visualization compression) is built on these vertices.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

#: coefficient slack used when deciding cone membership at segment borders
MEMBERSHIP_TOL = 1e-9


@dataclass(frozen=True)
class SimplexGeometry:
    """The n vertices p_1..p_n (rows of ``vertices``), each a unit vector
    in R^(n-1), summing to zero componentwise."""

    n: int
    vertices: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.n - 1

    def __post_init__(self):
        self.vertices.setflags(write=False)


def build_simplex(n: int) -> SimplexGeometry:
    """Construct the canonical regular simplex for ``n`` classes.

    Vertices are the columns of the (n-1) x n Helmert orthonormal basis of
    the zero-sum hyperplane, scaled to unit norm.  Deterministic, and for
    n = 2 yields p_1 = (+1), p_2 = (-1).
    """
    if n < 2:
        raise ConfigError(f"need at least 2 classes, got n={n}")
    helmert = np.zeros((n - 1, n))
    for k in range(1, n):
        helmert[k - 1, :k] = 1.0
        helmert[k - 1, k] = -float(k)
        helmert[k - 1] /= np.sqrt(k * (k + 1.0))
    vertices = (helmert * np.sqrt(n / (n - 1.0))).T
    return SimplexGeometry(n=n, vertices=vertices)


def nearest_vertex_label(z, g: SimplexGeometry) -> int:
    """Label of the segment containing ``z``: the 1-based index of the
    nearest vertex, ties broken by the smallest index."""
    z = np.asarray(z, dtype=float)
    d2 = np.sum((g.vertices - z) ** 2, axis=1)
    return int(np.argmin(d2)) + 1


def nearest_vertex_labels(points, g: SimplexGeometry) -> np.ndarray:
    """Vectorized :func:`nearest_vertex_label` for a (T, n-1) array."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    diffs = points[:, None, :] - g.vertices[None, :, :]
    d2 = np.sum(diffs * diffs, axis=2)
    return np.argmin(d2, axis=1) + 1


def cone_coefficients(z, k: int, g: SimplexGeometry) -> np.ndarray:
    """Solve z = sum_{i != k} c_i * (-p_i) for the unique coefficients c.

    This is the literal geometric definition of segment k; membership means
    all coefficients are (numerically) nonnegative.
    """
    if not 1 <= k <= g.n:
        raise ConfigError(f"segment index {k} out of range 1..{g.n}")
    others = np.delete(np.arange(g.n), k - 1)
    basis = -g.vertices[others].T  # (n-1) x (n-1)
    return np.linalg.solve(basis, np.asarray(z, dtype=float))


def cone_membership_oracle(z, k: int, g: SimplexGeometry, tol: float = MEMBERSHIP_TOL) -> bool:
    """True iff ``z`` lies in cone segment ``k`` (coefficients >= -tol)."""
    c = cone_coefficients(z, k, g)
    return bool(np.min(c) >= -tol)


def compress(z, g: SimplexGeometry) -> np.ndarray:
    """Map a latent point into the open simplex interior, preserving its
    segment.

    Scores s_j = <z, p_j> sum to zero; their softmax gives barycentric
    weights b, and the image is w = sum_j b_j p_j.  The softmax argmax
    equals the nearest-vertex label, so segment membership is unchanged.
    """
    z = np.asarray(z, dtype=float)
    s = g.vertices @ z
    e = np.exp(s - np.max(s))  # shift-stable
    b = e / np.sum(e)
    return b @ g.vertices


def decompress(w, g: SimplexGeometry) -> np.ndarray:
    """Exact inverse of :func:`compress` for points strictly inside the
    simplex."""
    b = barycentric(w, g)
    if np.min(b) <= 0.0:
        raise ConfigError(
            "point is on or outside the simplex boundary; cannot invert compression"
        )
    s = np.log(b)
    s = s - np.mean(s)
    return ((g.n - 1.0) / g.n) * (s @ g.vertices)


def barycentric(w, g: SimplexGeometry) -> np.ndarray:
    """Barycentric coordinates of ``w`` w.r.t. the simplex vertices:
    b_k = ((n-1)<w, p_k> + 1)/n, the unique weights with sum 1 and
    sum_k b_k p_k = w."""
    w = np.asarray(w, dtype=float)
    return ((g.n - 1.0) * (g.vertices @ w) + 1.0) / g.n


def vertex_permutation_map(perm, g: SimplexGeometry) -> np.ndarray:
    """Orthogonal map Q of the latent space with Q p_i = p_perm(i).

    ``perm`` maps 0-based vertex index i to its image perm[i].  Because the
    vertex matrix P (columns p_i) satisfies P P^T = n/(n-1) I, the map is
    Q = (n-1)/n * P_perm P^T.
    """
    perm = np.asarray(perm, dtype=int)
    if sorted(perm.tolist()) != list(range(g.n)):
        raise ConfigError("perm must be a permutation of 0..n-1")
    p = g.vertices.T
    p_perm = g.vertices[perm].T
    return (g.n - 1.0) / g.n * (p_perm @ p.T)
