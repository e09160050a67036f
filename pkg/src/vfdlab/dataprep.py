"""Approximation of initial data and forcing.

Initial data go through truncation to [1/n, n], mollification with a
polynomial bump, or elliptic smoothing with the coupled bulk/boundary
operator.  Forcing slices are clipped and projected onto zero bulk mean.
"""

from __future__ import annotations

import csv
import math
import warnings
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve
from scipy.spatial import cKDTree

from .diagnostics import log_minus
from .domain import DiscreteDomain, DomainError, DomainKind, Field, mean_omega
from .stepper import State

#: Recorded in run metadata: mollifier profile as a function of s = |x - y| / radius.
KERNEL_NAME = "(1 - s^2)^3 on s < 1"


def _kernel(s):
    return np.where(s < 1.0, (1.0 - s * s) ** 3, 0.0)


def _split(domain, data):
    """Nodal bulk array and boundary array from a Field or a nodal array."""
    if isinstance(data, Field):
        data.check(domain)
        return data.values.copy(), data.boundary_values.copy()
    v = np.asarray(data, dtype=float)
    if v.shape != (domain.n_nodes,):
        raise DomainError(f"expected {domain.n_nodes} nodal values, got shape {v.shape}")
    return v.copy(), v[domain.boundary_index].copy()


def truncate(values, n: int):
    """Clamp pointwise to [1/n, n]."""
    if n < 1:
        raise ValueError("truncation level n must be >= 1")
    if isinstance(values, Field):
        return Field(truncate(values.values, n), truncate(values.boundary_values, n))
    return np.clip(np.asarray(values, dtype=float), 1.0 / n, float(n))


# --------------------------------------------------------------------------
# mollification
# --------------------------------------------------------------------------


def _coords(domain: DiscreteDomain) -> np.ndarray:
    return np.asarray(domain.nodes, dtype=float)


def _reflected_images(domain: DiscreteDomain, radius: float):
    """Mirror images of the nodes lying within ``radius`` of the boundary.

    Returns image coordinates and, for each image, the node it copies.
    """
    x = _coords(domain)
    images, owners = [], []
    if domain.kind is DomainKind.DISK:
        R = domain.extent["radius"]
        r = np.hypot(x[:, 0], x[:, 1])
        near = np.nonzero(R - r <= radius)[0]
        scale = (2 * R - r[near]) / np.where(r[near] > 0, r[near], 1.0)
        images.append(x[near] * scale[:, None])
        owners.append(near)
    else:
        if domain.kind is DomainKind.INTERVAL:
            lo, hi = 0.0, domain.extent["length"]
        else:
            lo, hi = domain.extent["r_inner"], domain.extent["r_outer"]
        c = x[:, 0]
        for wall in (lo, hi):
            near = np.nonzero(np.abs(c - wall) <= radius)[0]
            images.append((2 * wall - c[near])[:, None])
            owners.append(near)
    if not images:
        return np.empty((0, x.shape[1])), np.empty(0, dtype=int)
    return np.concatenate(images), np.concatenate(owners)


def _mollify_bulk(domain: DiscreteDomain, v: np.ndarray, radius: float) -> np.ndarray:
    x = _coords(domain)
    img, own = _reflected_images(domain, radius)
    pts = np.concatenate([x, img])
    src = np.concatenate([np.arange(domain.n_nodes), own])
    w = domain.bulk_weights[src]
    tree = cKDTree(pts)
    out = np.empty_like(v)
    for i, nbrs in enumerate(tree.query_ball_point(x, radius)):
        nbrs = np.asarray(nbrs, dtype=int)
        s = np.linalg.norm(pts[nbrs] - x[i], axis=1) / radius
        k = _kernel(s) * w[nbrs]
        out[i] = np.dot(k, v[src[nbrs]]) / k.sum()
    return out


def _mollify_circle(domain: DiscreteDomain, eta: np.ndarray, radius: float) -> np.ndarray:
    """Periodic convolution along the boundary circle in arc length."""
    n = eta.size
    arc = domain.extent["radius"] * 2 * np.pi / n
    m = int(radius // arc)
    if m == 0:
        return eta.copy()
    offsets = np.arange(-m, m + 1)
    k = _kernel(np.abs(offsets) * arc / radius)
    k /= k.sum()
    return sum(kk * np.roll(eta, -o) for o, kk in zip(offsets, k))


def mollify(domain: DiscreteDomain, data, radius: float):
    """Convolution with a normalised (1 - s^2)^3 bump of the given radius.

    Near the boundary the field is extended by reflection.  The result at each
    node is a convex combination of input values, so constants are reproduced
    and the range never widens.  On the disk the boundary datum is mollified
    separately along the circle.  A radius below the grid spacing leaves the
    data unchanged (with a warning).
    """
    v, eta = _split(domain, data)
    if radius < domain.spacing:
        warnings.warn(
            f"mollifier radius {radius:g} below grid spacing {domain.spacing:g}; data left unchanged",
            stacklevel=2,
        )
        return data.__class__(v, eta) if isinstance(data, Field) else v
    out = _mollify_bulk(domain, v, radius)
    if isinstance(data, Field):
        if domain.kind is DomainKind.DISK:
            eta = _mollify_circle(domain, eta, radius)
        return Field(out, eta)
    return out


# --------------------------------------------------------------------------
# elliptic smoothing
# --------------------------------------------------------------------------


def smoothing_matrix(domain: DiscreteDomain, n: int, alpha: float = 1.0) -> sp.csc_matrix:
    """diag(w + alpha s) - (K + S) / n, a strictly diagonally dominant M-matrix."""
    if n < 1:
        raise ValueError("smoothing parameter n must be >= 1")
    mass = domain.bulk_weights + alpha * domain.boundary_weights_full()
    return (sp.diags(mass) - (domain.stiffness + domain.boundary_stiffness) / n).tocsc()


def elliptic_smooth(domain: DiscreteDomain, data, n: int, alpha: float = 1.0) -> np.ndarray:
    """Solve theta - (1/n) Lap theta = theta0 coupled with the boundary law.

    The boundary rows carry theta - (1/n) Lap_Gamma theta + (1/n) dn theta =
    eta0.  Rows are weighted by the control volumes and the boundary measure;
    summing them shows that integrate_dm(., alpha) is preserved, and the
    M-matrix structure gives the discrete maximum principle.
    """
    v, eta = _split(domain, data)
    rhs = domain.bulk_weights * v
    rhs[domain.boundary_index] += alpha * domain.boundary_weights * eta
    return spsolve(smoothing_matrix(domain, n, alpha), rhs)


# --------------------------------------------------------------------------
# forcing
# --------------------------------------------------------------------------


def project_zero_mean(domain: DiscreteDomain, f_slice) -> np.ndarray:
    """Remove the bulk mean.  A second pass cleans up the rounding of the first."""
    f = np.asarray(f_slice, dtype=float)
    f = f - mean_omega(domain, f)
    return f - mean_omega(domain, f)


class ForcingKind(str, Enum):
    ZERO = "zero"
    SINUSOID = "sinusoid"
    GRID_SAMPLES = "grid_samples"
    MMS = "mms"


@dataclass
class ForcingDescriptor:
    """Bulk forcing f(t) on the grid nodes.

    ``sinusoid`` is amplitude * sin(2 pi k xi / L) * cos(omega t), with xi the
    first coordinate.  ``grid_samples`` holds ``times`` and a ``samples``
    array of shape (n_times, n_nodes), held piecewise constant in time.
    ``mms`` wraps a closed form ``reference(t) -> nodal array`` and is never
    projected, since manufactured forcings need not have zero mean.
    ``truncate_level`` clips values to [-level, level] before projection.
    ``epsilon`` is the summability parameter of the forcing class and only
    affects which norms are reported.
    """

    kind: ForcingKind = ForcingKind.ZERO
    amplitude: float = 0.0
    wavenumber: int = 1
    omega: float = 1.0
    epsilon: float = 0.5
    times: np.ndarray | None = None
    samples: np.ndarray | None = None
    reference: Callable | None = None
    truncate_level: float | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.kind = ForcingKind(self.kind)
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.kind is ForcingKind.GRID_SAMPLES:
            if self.times is None or self.samples is None:
                raise ValueError("grid_samples forcing needs times and samples")
            self.times = np.asarray(self.times, dtype=float)
            self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
            if self.samples.shape[0] != self.times.size:
                raise ValueError("one sample row per time is required")
        if self.kind is ForcingKind.MMS and self.reference is None:
            raise ValueError("mms forcing needs a reference closure")

    @property
    def is_zero_mean(self) -> bool:
        return self.kind is not ForcingKind.MMS

    def raw(self, t: float, domain: DiscreteDomain) -> np.ndarray:
        if self.kind is ForcingKind.ZERO:
            return np.zeros(domain.n_nodes)
        if self.kind is ForcingKind.SINUSOID:
            xi = domain.nodes[:, 0]
            if domain.kind is DomainKind.ANNULUS:
                xi = xi - domain.extent["r_inner"]
            L = domain.length_scale
            return self.amplitude * np.sin(2 * np.pi * self.wavenumber * xi / L) * math.cos(self.omega * t)
        if self.kind is ForcingKind.GRID_SAMPLES:
            k = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.times.size - 1))
            return self.samples[k].copy()
        return np.asarray(self.reference(t), dtype=float)

    def slice(self, t: float, domain: DiscreteDomain) -> np.ndarray:
        """Forcing at time t after truncation and zero-mean projection."""
        f = self.raw(t, domain)
        if self.kind is ForcingKind.MMS:
            return f
        if self.truncate_level is not None:
            f = np.clip(f, -self.truncate_level, self.truncate_level)
        return project_zero_mean(domain, f)

    def __call__(self, t: float, domain: DiscreteDomain) -> np.ndarray:
        return self.slice(t, domain)


def regularize_forcing(domain: DiscreteDomain, f_slice, n: int) -> np.ndarray:
    """Truncate at level n and project onto zero bulk mean."""
    return project_zero_mean(domain, np.clip(np.asarray(f_slice, dtype=float), -n, n))


# --------------------------------------------------------------------------
# initial data
# --------------------------------------------------------------------------


class Strategy(str, Enum):
    NONE = "none"
    SMOOTH = "smooth"
    ENERGY = "energy"


def collar_cutoff(s):
    """Smooth step: 1 at s <= 0, 0 at s >= 1, C^1 in between."""
    s = np.clip(s, 0.0, 1.0)
    return 1.0 - s * s * (3.0 - 2.0 * s)


def prepare_initial(domain: DiscreteDomain, theta0, eta0=None, strategy="smooth", n: int = 10) -> State:
    """Turn raw data into a strictly positive solver state.

    ``none`` only checks positivity.  ``smooth`` applies :func:`elliptic_smooth`.
    ``energy`` truncates to [1/n, n], mollifies with radius L/n (L the domain
    length scale) and then blends the separately mollified boundary datum
    into a collar of width L/n, so the trace of the result is the prepared
    boundary datum while the bulk away from the collar is untouched.
    """
    strategy = Strategy(strategy)
    bulk = np.asarray(theta0, dtype=float)
    if eta0 is None:
        eta = bulk[domain.boundary_index].copy()
    else:
        eta = np.asarray(eta0, dtype=float)
    raw = Field(bulk, eta).check(domain)
    if strategy is Strategy.NONE:
        out = raw.values.copy()
        out[domain.boundary_index] = raw.boundary_values
    elif strategy is Strategy.SMOOTH:
        out = elliptic_smooth(domain, raw, n)
    else:
        cut = truncate(raw, n)
        width = domain.length_scale / n
        mol = mollify(domain, cut, width)
        collar = collar_cutoff(domain.boundary_distance() / width)
        eta_ext = mol.boundary_values[domain.nearest_boundary()]
        out = (1.0 - collar) * mol.values + collar * eta_ext
    if not np.all(out > 0):
        raise AssertionError("prepared initial data must be strictly positive")
    return State(out, 0.0)


def log_approx_constant(domain: DiscreteDomain, raw, prepared) -> float:
    """c with int log^- prepared = c (1 + int log^- raw)."""
    return log_minus(domain, prepared) / (1.0 + log_minus(domain, raw))


def load_field_csv(path, domain: DiscreteDomain) -> np.ndarray:
    """Read ``node,value`` rows into a nodal array; every node must be present."""
    out = np.full(domain.n_nodes, np.nan)
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().lower() == "node":
                continue
            out[int(row[0])] = float(row[1])
    if np.isnan(out).any():
        raise DomainError(f"{path}: values missing for {int(np.isnan(out).sum())} nodes")
    return out
