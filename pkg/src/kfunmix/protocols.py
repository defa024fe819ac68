"""Acquisition ordering protocols.

P1 acquires spectra in native (or seeded-shuffle) order.  P2 reorders the
stream so that geometrically extreme, mutually diverse spectra arrive
first: spectra are embedded in the 2-D phasor plane (real and imaginary
parts of the first Fourier harmonic of each max-normalized spectrum),
convex hull layers are peeled until enough candidates accumulate, the
candidates are clustered, and clusters then take turns contributing their
most central remaining member, with each round shuffled.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass

import numpy as np

from .datamodel import FloatArray, SpectraMatrix
from .fourier import FourierBasis, build_basis

KMEANS_MAX_ITERS = 100


@dataclass(frozen=True)
class AcquisitionOrder:
    """A permutation prefix: the order spectra should be acquired in."""

    indices: tuple[int, ...]
    n_essential: int

    def __post_init__(self) -> None:
        if len(self.indices) < 1:
            raise ValueError("order must contain at least one index")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("order contains duplicate indices")
        if min(self.indices) < 0:
            raise ValueError("order contains negative indices")
        if not 1 <= self.n_essential <= len(self.indices):
            raise ValueError("n_essential must be in [1, len(indices)]")


@dataclass(frozen=True)
class P2Config:
    n_essential: int
    n_clusters: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_essential < 1:
            raise ValueError("n_essential must be >= 1")
        if not 1 <= self.n_clusters <= self.n_essential:
            raise ValueError("n_clusters must be in [1, n_essential]")


def protocol_p1(n: int, shuffle_seed: int | None = None) -> AcquisitionOrder:
    """Native order, or a seeded uniform shuffle when a seed is given."""
    if n < 1:
        raise ValueError("n must be >= 1")
    idx = np.arange(n)
    if shuffle_seed is not None:
        idx = np.random.default_rng(shuffle_seed).permutation(n)
    return AcquisitionOrder(tuple(int(i) for i in idx), n)


def _orientation(o: FloatArray, a: FloatArray, b: FloatArray) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull_phasor(points: FloatArray) -> np.ndarray:
    """Indices of convex hull vertices in counterclockwise order.

    Collinear points interior to an edge are excluded; a fully collinear
    input yields its two extreme points, and a single (possibly repeated)
    point yields one index.  Ties between coincident points resolve to the
    lowest original index.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must have shape (n, 2)")
    if pts.shape[0] < 1:
        raise ValueError("need at least one point")

    # Deduplicate exact coincidences, keeping the lowest index of each site.
    seen: dict[tuple[float, float], int] = {}
    for i, (x, y) in enumerate(pts):
        seen.setdefault((float(x), float(y)), i)
    unique = sorted(seen.items())  # lexicographic by (x, y)
    if len(unique) == 1:
        return np.array([unique[0][1]], dtype=int)
    if len(unique) == 2:
        return np.array([unique[0][1], unique[1][1]], dtype=int)

    coords = [np.array(c) for c, _ in unique]
    original = [i for _, i in unique]

    def chain(order: range) -> list[int]:
        out: list[int] = []
        for pos in order:
            while (
                len(out) >= 2
                and _orientation(coords[out[-2]], coords[out[-1]], coords[pos]) <= 0.0
            ):
                out.pop()
            out.append(pos)
        return out

    lower = chain(range(len(coords)))
    upper = chain(range(len(coords) - 1, -1, -1))
    hull_positions = lower[:-1] + upper[:-1]
    return np.array([original[p] for p in hull_positions], dtype=int)


def _kmeans(
    points: FloatArray, k: int, rng: np.random.Generator
) -> tuple[np.ndarray, FloatArray]:
    """Lloyd iterations from a k-means++ seeding; empty clusters are re-seeded."""
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = points[first]
    closest = np.sum((points - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = float(np.sum(closest))
        if total == 0.0:
            pick = int(rng.integers(n))
        else:
            pick = int(rng.choice(n, p=closest / total))
        centroids[j] = points[pick]
        closest = np.minimum(closest, np.sum((points - centroids[j]) ** 2, axis=1))

    labels = np.full(n, -1)
    for _ in range(KMEANS_MAX_ITERS):
        dist = np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(dist, axis=1)
        spread = dist[np.arange(n), new_labels].copy()
        for j in range(k):
            members = points[new_labels == j]
            if members.shape[0] > 0:
                centroids[j] = members.mean(axis=0)
            else:
                # Re-seed an empty cluster at the point farthest from its
                # centroid; mark it so a second empty cluster picks elsewhere.
                far = int(np.argmax(spread))
                centroids[j] = points[far]
                new_labels[far] = j
                spread[far] = -1.0
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels, centroids


def phasor_embedding(
    spectra: SpectraMatrix | FloatArray, basis: FourierBasis | None = None
) -> FloatArray:
    """(n, 2) coordinates: first-harmonic Re/Im of each intensity-normalized spectrum.

    Normalizing by total intensity makes the embedding of a mixture a convex
    combination of its endmembers' embeddings, so convex-hull vertices are
    the least-mixed spectra in the set.
    """
    rows = spectra.values if isinstance(spectra, SpectraMatrix) else np.asarray(spectra)
    if basis is None or basis.n_harmonics < 2:
        basis = build_basis(rows.shape[1], 2)
    totals = np.sum(rows, axis=1, keepdims=True)
    safe = np.where(totals > 0.0, totals, 1.0)
    normalized = rows / safe
    m = basis.n_harmonics
    reduced = (basis.operator @ normalized.T).T  # (n, 2M)
    return np.column_stack([reduced[:, 1], reduced[:, m + 1]])


def protocol_p2(
    spectra: SpectraMatrix | FloatArray,
    basis: FourierBasis,
    config: P2Config,
) -> AcquisitionOrder:
    """Diversity-first ordering from hull peeling plus cluster round-robin.

    Phases: (1) embed each spectrum as a 2-D phasor point; (2) peel convex
    hull layers until at least n_essential candidates are found or points
    run out; (3) k-means the candidates into n_clusters groups; (4) in
    rounds, each cluster contributes the unclaimed candidate nearest its
    centroid, the round is shuffled, and rounds repeat until n_essential
    indices are ordered.  A degenerate embedding (all points coincide)
    falls back to P1 with a warning.
    """
    rows = spectra.values if isinstance(spectra, SpectraMatrix) else np.asarray(spectra)
    n = rows.shape[0]
    points = phasor_embedding(rows, basis)

    if np.all(points == points[0]):
        warnings.warn(
            "phasor embedding is degenerate; falling back to protocol P1",
            stacklevel=2,
        )
        return protocol_p1(n)

    n_essential = min(config.n_essential, n)
    rng = np.random.default_rng(config.seed)

    remaining_mask = np.ones(n, dtype=bool)
    candidates: list[int] = []
    while len(candidates) < n_essential and np.any(remaining_mask):
        remaining_idx = np.nonzero(remaining_mask)[0]
        layer = convex_hull_phasor(points[remaining_idx])
        for pos in remaining_idx[layer]:
            candidates.append(int(pos))
            remaining_mask[pos] = False

    cand = np.array(sorted(candidates))
    k = min(config.n_clusters, cand.size)
    _, centroids = _kmeans(points[cand], k, rng)

    taken = np.zeros(cand.size, dtype=bool)
    ordered: list[int] = []
    while len(ordered) < n_essential and not np.all(taken):
        round_indices: list[int] = []
        for j in range(k):
            open_pos = np.nonzero(~taken)[0]
            if open_pos.size == 0:
                break
            dist = np.sum((points[cand[open_pos]] - centroids[j]) ** 2, axis=1)
            chosen = open_pos[int(np.argmin(dist))]
            taken[chosen] = True
            round_indices.append(int(cand[chosen]))
        ordered.extend(int(i) for i in rng.permutation(round_indices))
    ordered = ordered[:n_essential]

    return AcquisitionOrder(tuple(ordered), n_essential)


def save_order_csv(order: AcquisitionOrder, path: str | os.PathLike[str]) -> None:
    """Persist an order as a single column of indices."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(str(i) for i in order.indices) + "\n")


def load_order_csv(path: str | os.PathLike[str]) -> AcquisitionOrder:
    """Read a single-column order file; n_essential is the line count."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln and not ln.startswith("#")]
    indices = []
    for line_no, line in enumerate(lines, start=1):
        try:
            indices.append(int(line))
        except ValueError:
            raise ValueError(f"{path}: line {line_no}: non-integer index {line!r}") from None
    return AcquisitionOrder(tuple(indices), len(indices))
