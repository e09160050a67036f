"""Discrete geometries and vertex-centred finite-volume operators.

Every geometry is a collocated grid: the boundary nodes are ordinary grid
nodes, so the boundary trace of a nodal field is simply its restriction to
``boundary_index``.  Each node owns a control volume (half cells on the
boundary), and fluxes live on the faces between neighbouring control volumes.
This gives an exact discrete divergence theorem and exact conservation of

    integral over dm  =  sum_i w_i v_i + alpha * sum_b s_b v_b.

All weights and face transmissibilities are divided by the physical volume
|Omega|, so ``bulk_weights`` sums to one.  Ratios such as the discrete
Laplacian are unaffected by that rescaling.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp


class DomainError(ValueError):
    """Structural problem with a domain or with a field living on it."""


class DomainKind(str, Enum):
    INTERVAL = "interval"
    DISK = "disk"
    ANNULUS = "annulus"


@dataclass(frozen=True, eq=False)
class DiscreteDomain:
    """Grid geometry together with its quadrature and flux stencils.

    Attributes:
        kind: Which geometry this is.
        extent: Geometry parameters (``length``; ``radius``; or
            ``r_inner``/``r_outer``) plus the resolution used.
        nodes: Node coordinates, shape ``(n_nodes, dim)``.  The annulus is
            radially symmetric and stores only the radius.
        boundary_index: Indices of the boundary nodes in ``nodes``.
        bulk_weights: Control-volume measure of each node, normalised to sum 1.
        boundary_weights: Surface measure of each boundary node, divided by
            the same physical volume.
        volume: Physical |Omega|.
        surface: Physical |Gamma|.
        stiffness: Symmetric flux matrix ``K`` with ``(K w)_i`` the net flux
            into control volume ``i`` through interior faces.
        boundary_stiffness: Symmetric matrix ``S`` on the full node set,
            nonzero only between boundary nodes; ``(S w)_b / s_b`` is the
            Laplace-Beltrami operator.
        faces: ``(i, j, area, distance)`` for each interior face, area and
            distance normalised like the weights.
        normal_neighbours: For each boundary node the two nodes that follow
            it along the inward normal (used to extrapolate the Laplacian).
        spacing: Smallest grid spacing.
        length_scale: Characteristic size (interval length, disk radius,
            annulus width).
    """

    kind: DomainKind
    extent: dict
    nodes: np.ndarray
    boundary_index: np.ndarray
    bulk_weights: np.ndarray
    boundary_weights: np.ndarray
    volume: float
    surface: float
    stiffness: sp.csr_matrix
    boundary_stiffness: sp.csr_matrix
    faces: tuple
    normal_neighbours: np.ndarray
    spacing: float
    length_scale: float
    boundary_edges: tuple = field(default=((), ()))

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_boundary(self) -> int:
        return self.boundary_index.size

    @property
    def boundary_measure(self) -> float:
        """Normalised |Gamma|, i.e. the sum of ``boundary_weights``."""
        return float(self.boundary_weights.sum())

    @property
    def has_surface_diffusion(self) -> bool:
        """True when the boundary is a genuine curve (Laplace-Beltrami != 0)."""
        return self.kind is DomainKind.DISK

    def boundary_weights_full(self) -> np.ndarray:
        """Boundary weights scattered onto the full node set (zero inside)."""
        out = np.zeros(self.n_nodes)
        out[self.boundary_index] = self.boundary_weights
        return out

    def interior_mask(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary_index] = False
        return mask

    def trace(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values)[self.boundary_index]

    def radii(self) -> np.ndarray:
        """Distance of each node from the origin (radius for the annulus)."""
        if self.kind is DomainKind.ANNULUS:
            return self.nodes[:, 0].copy()
        if self.kind is DomainKind.DISK:
            return np.hypot(self.nodes[:, 0], self.nodes[:, 1])
        return np.abs(self.nodes[:, 0])

    def boundary_distance(self) -> np.ndarray:
        """Distance of each node to the nearest boundary component."""
        if self.kind is DomainKind.INTERVAL:
            x = self.nodes[:, 0]
            return np.minimum(x, self.extent["length"] - x)
        if self.kind is DomainKind.DISK:
            return self.extent["radius"] - self.radii()
        r = self.nodes[:, 0]
        return np.minimum(r - self.extent["r_inner"], self.extent["r_outer"] - r)

    def nearest_boundary(self) -> np.ndarray:
        """Position in ``boundary_index`` of the boundary node each node projects to."""
        if self.kind is DomainKind.DISK:
            n_phi = self.extent["n_phi"]
            out = np.empty(self.n_nodes, dtype=int)
            out[0] = 0
            out[1:] = (np.arange(self.n_nodes - 1)) % n_phi
            return out
        coord = self.nodes[:, 0]
        lo = self.nodes[self.boundary_index[0], 0]
        hi = self.nodes[self.boundary_index[1], 0]
        return np.where(coord - lo <= hi - coord, 0, 1)


@dataclass
class Field:
    """A pair (bulk values, boundary values) living on a domain.

    For a solver state the boundary values are the trace of the bulk values;
    raw data may carry an independent boundary datum.
    """

    values: np.ndarray
    boundary_values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.boundary_values = np.asarray(self.boundary_values, dtype=float)

    @classmethod
    def from_nodes(cls, domain: DiscreteDomain, values) -> "Field":
        values = np.asarray(values, dtype=float)
        if values.shape != (domain.n_nodes,):
            raise DomainError(
                f"expected {domain.n_nodes} nodal values, got shape {values.shape}"
            )
        return cls(values.copy(), values[domain.boundary_index].copy())

    @classmethod
    def constant(cls, domain: DiscreteDomain, c: float) -> "Field":
        return cls(np.full(domain.n_nodes, float(c)), np.full(domain.n_boundary, float(c)))

    def check(self, domain: DiscreteDomain) -> "Field":
        if self.values.shape != (domain.n_nodes,) or self.boundary_values.shape != (
            domain.n_boundary,
        ):
            raise DomainError(
                "field shape mismatch: "
                f"values {self.values.shape} / boundary {self.boundary_values.shape}, "
                f"domain has {domain.n_nodes} nodes and {domain.n_boundary} boundary nodes"
            )
        return self


def _as_field(domain: DiscreteDomain, v) -> Field:
    if isinstance(v, Field):
        return v.check(domain)
    return Field.from_nodes(domain, v)


# --------------------------------------------------------------------------
# construction
# --------------------------------------------------------------------------


def _assemble(n: int, faces_i, faces_j, trans) -> sp.csr_matrix:
    faces_i = np.asarray(faces_i, dtype=int)
    faces_j = np.asarray(faces_j, dtype=int)
    trans = np.asarray(trans, dtype=float)
    rows = np.concatenate([faces_i, faces_j, faces_i, faces_j])
    cols = np.concatenate([faces_j, faces_i, faces_i, faces_j])
    vals = np.concatenate([trans, trans, -trans, -trans])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _finish(kind, extent, nodes, bidx, vol, bw, faces, normal_nb, spacing, scale,
            bedges=None) -> DiscreteDomain:
    volume = float(vol.sum())
    n = nodes.shape[0]
    fi, fj, area, dist = (np.asarray(a) for a in faces)
    area = area / volume
    trans = area / dist
    K = _assemble(n, fi, fj, trans)
    if bedges is None:
        S = sp.csr_matrix((n, n))
        bedges = ((), (), ())
    else:
        ei, ej, etrans = bedges
        etrans = np.asarray(etrans) / volume
        S = _assemble(n, ei, ej, etrans)
        bedges = (np.asarray(ei), np.asarray(ej), etrans)
    return DiscreteDomain(
        kind=kind,
        extent=extent,
        nodes=nodes,
        boundary_index=np.asarray(bidx, dtype=int),
        bulk_weights=vol / volume,
        boundary_weights=np.asarray(bw, dtype=float) / volume,
        volume=volume,
        surface=float(np.sum(bw)),
        stiffness=K,
        boundary_stiffness=S,
        faces=(fi, fj, area, dist),
        normal_neighbours=np.asarray(normal_nb, dtype=int),
        spacing=spacing,
        length_scale=scale,
        boundary_edges=bedges,
    )


def interval(length: float = 1.0, n: int = 100) -> DiscreteDomain:
    """Uniform grid on [0, length] with ``n`` cells (``n + 1`` nodes).

    The boundary is the two endpoints, each carrying unit surface measure.
    """
    if n < 2:
        raise DomainError("interval needs at least 3 nodes")
    if length <= 0:
        raise DomainError("interval length must be positive")
    h = length / n
    x = np.linspace(0.0, length, n + 1)
    vol = np.full(n + 1, h)
    vol[[0, -1]] = h / 2
    faces = (np.arange(n), np.arange(1, n + 1), np.ones(n), np.full(n, h))
    normal_nb = [[1, 2], [n - 1, n - 2]]
    return _finish(
        DomainKind.INTERVAL, {"length": float(length), "n": int(n)}, x[:, None],
        [0, n], vol, [1.0, 1.0], faces, normal_nb, h, float(length),
    )


def annulus(r_inner: float = 1.0, r_outer: float = 3.0, n: int = 64) -> DiscreteDomain:
    """Radially symmetric spherical shell r_inner <= |x| <= r_outer in 3D.

    Fluxes use the 3D radial Laplacian (1/r^2)(r^2 w_r)_r; control volumes
    are exact spherical shells.
    """
    if n < 2:
        raise DomainError("annulus needs at least 3 radial nodes")
    if not 0 < r_inner < r_outer:
        raise DomainError("annulus needs 0 < r_inner < r_outer")
    h = (r_outer - r_inner) / n
    r = np.linspace(r_inner, r_outer, n + 1)
    edges = np.concatenate([[r_inner], 0.5 * (r[1:] + r[:-1]), [r_outer]])
    vol = 4.0 * np.pi / 3.0 * (edges[1:] ** 3 - edges[:-1] ** 3)
    mid = edges[1:-1]
    faces = (np.arange(n), np.arange(1, n + 1), 4.0 * np.pi * mid**2, np.full(n, h))
    bw = [4.0 * np.pi * r_inner**2, 4.0 * np.pi * r_outer**2]
    normal_nb = [[1, 2], [n - 1, n - 2]]
    return _finish(
        DomainKind.ANNULUS,
        {"r_inner": float(r_inner), "r_outer": float(r_outer), "n": int(n)},
        r[:, None], [0, n], vol, bw, faces, normal_nb, h, float(r_outer - r_inner),
    )


def disk(radius: float = 1.0, n_r: int = 32, n_phi: int = 32) -> DiscreteDomain:
    """Tensor polar grid on the disk of given radius.

    Node 0 is the pole; ring ``j`` (1..n_r) holds ``n_phi`` nodes at radius
    ``j * radius / n_r``.  The pole's control volume is the disk of radius
    h_r/2, so its Laplacian is 4 (ring-1 average - centre) / h_r^2.  Faces
    between angular neighbours are measured by chords, which makes the
    stencil exact on affine functions, pole included.
    """
    if n_r < 2 or n_phi < 3:
        raise DomainError("disk needs n_r >= 2 and n_phi >= 3")
    if radius <= 0:
        raise DomainError("disk radius must be positive")
    hr = radius / n_r
    hp = 2.0 * np.pi / n_phi
    chord = 2.0 * np.sin(hp / 2)
    phi = np.arange(n_phi) * hp
    rings = np.arange(1, n_r + 1) * hr

    def idx(j, k):
        return 1 + (j - 1) * n_phi + (k % n_phi)

    n = 1 + n_r * n_phi
    nodes = np.zeros((n, 2))
    rr, pp = np.meshgrid(rings, phi, indexing="ij")
    nodes[1:, 0] = (rr * np.cos(pp)).ravel()
    nodes[1:, 1] = (rr * np.sin(pp)).ravel()

    vol = np.empty(n)
    vol[0] = np.pi * (hr / 2) ** 2
    r_out = np.minimum(rings + hr / 2, radius)
    r_in = rings - hr / 2
    vol[1:] = np.repeat(0.5 * hp * (r_out**2 - r_in**2), n_phi)

    fi, fj, area, dist = [], [], [], []
    k = np.arange(n_phi)
    # pole to first ring
    fi.append(np.zeros(n_phi, dtype=int))
    fj.append(idx(1, k))
    area.append(np.full(n_phi, (hr / 2) * chord))
    dist.append(np.full(n_phi, hr))
    for j in range(1, n_r + 1):
        # angular faces on ring j
        fi.append(idx(j, k))
        fj.append(idx(j, k + 1))
        area.append(np.full(n_phi, hr if j < n_r else hr / 2))
        dist.append(np.full(n_phi, rings[j - 1] * chord))
        if j < n_r:
            fi.append(idx(j, k))
            fj.append(idx(j + 1, k))
            area.append(np.full(n_phi, (rings[j - 1] + hr / 2) * chord))
            dist.append(np.full(n_phi, hr))
    faces = tuple(np.concatenate(a) for a in (fi, fj, area, dist))

    bidx = idx(n_r, k)
    bw = np.full(n_phi, radius * hp)
    nb2 = idx(n_r - 2, k) if n_r > 2 else np.zeros(n_phi, dtype=int)
    normal_nb = np.stack([idx(n_r - 1, k), nb2], axis=1)
    bedges = (bidx, idx(n_r, k + 1), np.full(n_phi, 1.0 / (radius * hp)))
    return _finish(
        DomainKind.DISK,
        {"radius": float(radius), "n_r": int(n_r), "n_phi": int(n_phi)},
        nodes, bidx, vol, bw, faces, normal_nb, min(hr, radius * hp), float(radius),
        bedges=bedges,
    )


def from_descriptor(desc: dict) -> DiscreteDomain:
    """Build a domain from a plain mapping, e.g. a configuration section."""
    desc = dict(desc)
    kind = DomainKind(desc.pop("kind"))
    if kind is DomainKind.INTERVAL:
        return interval(**desc)
    if kind is DomainKind.DISK:
        return disk(**desc)
    return annulus(**desc)


# --------------------------------------------------------------------------
# integration and operators
# --------------------------------------------------------------------------


def integrate_dm(domain: DiscreteDomain, v, alpha: float = 0.0) -> float:
    """Integral of ``v`` against dm: bulk quadrature plus alpha times boundary quadrature."""
    f = _as_field(domain, v)
    return float(
        np.dot(domain.bulk_weights, f.values)
        + alpha * np.dot(domain.boundary_weights, f.boundary_values)
    )


def mean_m(domain: DiscreteDomain, v, alpha: float = 0.0) -> float:
    """Mean value with respect to dm; reduces to the bulk mean when alpha = 0."""
    total = domain.bulk_weights.sum() + alpha * domain.boundary_measure
    return integrate_dm(domain, v, alpha) / total


def mean_omega(domain: DiscreteDomain, values) -> float:
    values = np.asarray(values, dtype=float)
    return float(np.dot(domain.bulk_weights, values) / domain.bulk_weights.sum())


def flux_divergence(domain: DiscreteDomain, w) -> np.ndarray:
    """Net flux ``K w`` into every control volume through interior faces."""
    return domain.stiffness @ _as_field(domain, w).values


def laplacian(domain: DiscreteDomain, w) -> np.ndarray:
    """Conservative discrete Laplacian at every grid node.

    Interior nodes use the flux stencil divided by the control volume.  At a
    boundary node the bulk Laplacian is linearly extrapolated along the inward
    normal; together with :func:`normal_derivative` this closes the discrete
    divergence theorem exactly.
    """
    f = _as_field(domain, w)
    lap = (domain.stiffness @ f.values) / domain.bulk_weights
    b = domain.boundary_index
    nb = domain.normal_neighbours
    lap[b] = 2.0 * lap[nb[:, 0]] - lap[nb[:, 1]]
    return lap


def normal_derivative(domain: DiscreteDomain, w) -> np.ndarray:
    """Outward normal derivative at the boundary nodes.

    Defined as the flux through the boundary face that balances the boundary
    control volume:  s_b dn w = w_b (Lap w)_b - (K w)_b.
    """
    f = _as_field(domain, w)
    b = domain.boundary_index
    lap = laplacian(domain, f)
    inner = (domain.stiffness @ f.values)[b]
    return (domain.bulk_weights[b] * lap[b] - inner) / domain.boundary_weights


def laplace_beltrami(domain: DiscreteDomain, eta_values) -> np.ndarray:
    """Periodic second difference in arc length on the boundary circle.

    Point boundaries (interval, annulus) have no tangential direction and the
    operator is identically zero there.
    """
    eta = np.asarray(eta_values, dtype=float)
    if eta.shape != (domain.n_boundary,):
        raise DomainError(f"expected {domain.n_boundary} boundary values, got {eta.shape}")
    if not domain.has_surface_diffusion:
        return np.zeros_like(eta)
    full = np.zeros(domain.n_nodes)
    full[domain.boundary_index] = eta
    return (domain.boundary_stiffness @ full)[domain.boundary_index] / domain.boundary_weights


def warn_point_boundary(domain: DiscreteDomain, beta: float) -> None:
    if beta > 0 and not domain.has_surface_diffusion:
        warnings.warn(
            f"beta={beta} on a {domain.kind.value} domain: the boundary is a set of points "
            "and the Laplace-Beltrami term vanishes",
            stacklevel=3,
        )


def face_gradient_l1(domain: DiscreteDomain, v) -> float:
    """Discrete ||grad v||_1 as the sum over faces of |face| * |jump|."""
    fi, fj, area, _ = domain.faces
    v = np.asarray(v, dtype=float)
    return float(np.sum(area * np.abs(v[fj] - v[fi])))


def dirichlet_form(domain: DiscreteDomain, a, b=None) -> float:
    """Bulk bilinear form sum_faces T (a_j - a_i)(b_j - b_i); equals -a.K.b."""
    fi, fj, area, dist = domain.faces
    a = np.asarray(a, dtype=float)
    b = a if b is None else np.asarray(b, dtype=float)
    return float(np.sum(area / dist * (a[fj] - a[fi]) * (b[fj] - b[fi])))


def boundary_dirichlet_form(domain: DiscreteDomain, a, b=None) -> float:
    """Same as :func:`dirichlet_form` along the boundary circle (nodal arrays)."""
    if not domain.has_surface_diffusion:
        return 0.0
    ei, ej, et = domain.boundary_edges
    a = np.asarray(a, dtype=float)
    b = a if b is None else np.asarray(b, dtype=float)
    return float(np.sum(et * (a[ej] - a[ei]) * (b[ej] - b[ei])))
