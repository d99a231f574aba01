"""Marching-squares iso-contours of a grid estimate."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import GridEstimate

# Cell corners, counter-clockwise from (i, j): c0=(i,j) c1=(i+1,j) c2=(i+1,j+1) c3=(i,j+1).
# Cell edges: e0=c0-c1 (bottom), e1=c1-c2 (right), e2=c3-c2 (top), e3=c0-c3 (left).
_EDGE_CORNERS = ((0, 1), (1, 2), (3, 2), (0, 3))
_CORNER_OFFSETS = ((0, 0), (1, 0), (1, 1), (0, 1))


@dataclass(frozen=True)
class ContourPiece:
    level: float
    vertices: np.ndarray  # (k, 2)
    closed: bool

    @property
    def length(self) -> float:
        return float(np.sum(np.hypot(*np.diff(self.vertices, axis=0).T)))


def _edge_id(P: int, Q: int, i: int, j: int, k: int) -> int:
    """Global id of edge ``k`` of cell ``(i, j)``.

    x-directed edges ``(i,j)-(i+1,j)`` get ids ``i*Q + j``; y-directed edges
    ``(i,j)-(i,j+1)`` follow, offset by ``(P-1)*Q``.
    """
    if k == 0:
        return i * Q + j
    if k == 2:
        return i * Q + j + 1
    base = (P - 1) * Q
    return base + (i + (1 if k == 1 else 0)) * (Q - 1) + j


def cell_segments(estimate: GridEstimate, level: float):
    """Crossing segments per cell.

    Returns a list of ``(edge_a, edge_b, point_a, point_b)`` tuples in cell
    order. Corners with ``value >= level`` count as above. Saddle cells are
    resolved by the mean of the four corners.
    """
    g = estimate.values
    spec = estimate.spec
    P, Q = g.shape
    xs, ys = spec.xs, spec.ys
    above = g >= level
    case = (above[:-1, :-1].astype(np.int8) + 2 * above[1:, :-1] + 4 * above[1:, 1:]
            + 8 * above[:-1, 1:])
    segs = []
    for i, j in zip(*np.nonzero((case != 0) & (case != 15))):
        i, j = int(i), int(j)
        corners = [(i + di, j + dj) for di, dj in _CORNER_OFFSETS]
        vals = [g[c] for c in corners]
        ab = [v >= level for v in vals]
        points = {}
        for k, (a, b) in enumerate(_EDGE_CORNERS):
            if ab[a] != ab[b]:
                t = (level - vals[a]) / (vals[b] - vals[a])
                (ia, ja), (ib, jb) = corners[a], corners[b]
                points[k] = (xs[ia] + t * (xs[ib] - xs[ia]), ys[ja] + t * (ys[jb] - ys[ja]))
        if len(points) == 2:
            pairs = [tuple(points)]
        else:
            center_above = sum(vals) / 4.0 >= level
            if center_above == ab[0]:
                pairs = [(0, 1), (2, 3)]  # isolate c1 and c3
            else:
                pairs = [(0, 3), (1, 2)]  # isolate c0 and c2
        for ka, kb in pairs:
            segs.append((_edge_id(P, Q, i, j, ka), _edge_id(P, Q, i, j, kb),
                         points[ka], points[kb]))
    return segs


def _chain(segs) -> list[tuple[list, bool]]:
    by_edge: dict[int, list[int]] = {}
    point_of: dict[int, tuple] = {}
    for s, (ea, eb, pa, pb) in enumerate(segs):
        by_edge.setdefault(ea, []).append(s)
        by_edge.setdefault(eb, []).append(s)
        point_of[ea] = pa
        point_of[eb] = pb
    used = [False] * len(segs)

    def walk(edge):
        path = [edge]
        while True:
            nxt = [s for s in by_edge[edge] if not used[s]]
            if not nxt:
                return path
            s = nxt[0]
            used[s] = True
            ea, eb = segs[s][0], segs[s][1]
            edge = eb if ea == edge else ea
            path.append(edge)

    chains = []
    for edge in sorted(e for e, ss in by_edge.items() if len(ss) == 1):
        if not used[by_edge[edge][0]]:
            chains.append(([point_of[e] for e in walk(edge)], False))
    for s in range(len(segs)):
        if not used[s]:
            path = walk(segs[s][0])
            chains.append(([point_of[e] for e in path], True))
    return chains


def extract_contours(estimate: GridEstimate, level: float) -> list[ContourPiece]:
    """All iso-contour pieces of ``estimate`` at ``level``.

    Levels outside the open interval ``(min, max)`` give no pieces.
    """
    if not estimate.vmin < level < estimate.vmax:
        return []
    pieces = []
    for points, closed in _chain(cell_segments(estimate, level)):
        verts = np.array(points, dtype=float)
        if len(verts) >= 2:
            pieces.append(ContourPiece(float(level), verts, closed))
    return pieces


def pick_start_points(pieces: list[ContourPiece], estimate: GridEstimate | None = None):
    """One initiation coordinate per piece.

    Open pieces start at their first vertex, which lies on the area
    boundary. Closed pieces start where the estimate's gradient magnitude
    is largest along the piece; without an estimate the first vertex is used.
    """
    if not pieces:
        return []
    grad_mag = None
    if estimate is not None and any(p.closed for p in pieces):
        gx, gy = np.gradient(estimate.values, estimate.spec.dx, estimate.spec.dy)
        grad_mag = GridEstimate(estimate.spec, np.hypot(gx, gy))
    starts = []
    for piece in pieces:
        if piece.closed and grad_mag is not None:
            mags = [grad_mag.bilinear(x, y) for x, y in piece.vertices]
            k = int(np.argmax(mags))
        else:
            k = 0
        starts.append((float(piece.vertices[k, 0]), float(piece.vertices[k, 1])))
    return starts


def write_contours_csv(pieces: list[ContourPiece], path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["level", "piece_id", "x", "y"])
        for pid, piece in enumerate(pieces):
            for x, y in piece.vertices:
                w.writerow([f"{piece.level:.12g}", pid, f"{x:.12g}", f"{y:.12g}"])
