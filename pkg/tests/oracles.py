"""Independent reference implementations used as test oracles."""

import itertools

import numpy as np

from contour_sg.levels import EmpiricalPdf


def uniform_pdf(lo=0.0, hi=100.0, bins=256):
    return EmpiricalPdf(np.linspace(lo, hi, bins + 1), np.full(bins, 1.0 / bins))


def mass_pdf(points, weights, width=1e-6, lo=0.0, hi=100.0):
    """Histogram with narrow populated bins centred on ``points``."""
    edges, probs = [lo], []
    for p, w in zip(points, weights):
        edges += [p - width / 2, p + width / 2]
        probs += [0.0, w]
    edges.append(hi)
    probs.append(0.0)
    return EmpiricalPdf(np.array(edges), np.array(probs) / np.sum(weights))


def exhaustive_optimum(points, weights, width, M):
    """Best MSE over all contiguous groupings of the masses into M cells.

    Each mass is uniform over ``width``; a cell's optimal level is the mean
    of its masses, and the spread inside a mass contributes ``width^2/12``.
    """
    pts, w = np.asarray(points, float), np.asarray(weights, float) / np.sum(weights)
    best = np.inf
    for cuts in itertools.combinations(range(1, len(pts)), M - 1):
        mse = 0.0
        for grp in np.split(np.arange(len(pts)), cuts):
            lvl = np.sum(w[grp] * pts[grp]) / np.sum(w[grp])
            mse += np.sum(w[grp] * ((pts[grp] - lvl) ** 2 + width ** 2 / 12))
        best = min(best, mse)
    return best


def brute_force_segments(values, xs, ys, level):
    """Independent per-cell enumeration, returned as a sorted list of rounded point pairs.

    Corners go counter-clockwise c0=(i,j), c1=(i+1,j), c2=(i+1,j+1), c3=(i,j+1);
    side s joins c_s and c_{s+1}. A saddle whose center agrees with c0 cuts
    off c1 and c3, otherwise it cuts off c0 and c2.
    """
    out = []
    P, Q = values.shape
    for i in range(P - 1):
        for j in range(Q - 1):
            cs = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
            v = [values[c] for c in cs]
            up = [x >= level for x in v]
            hits = {}
            for s in range(4):
                a, b = s, (s + 1) % 4
                if up[a] != up[b]:
                    t = (level - v[a]) / (v[b] - v[a])
                    pa = np.array([xs[cs[a][0]], ys[cs[a][1]]])
                    pb = np.array([xs[cs[b][0]], ys[cs[b][1]]])
                    hits[s] = pa + t * (pb - pa)
            if len(hits) == 2:
                pairs = [tuple(hits)]
            elif len(hits) == 4:
                if (np.mean(v) >= level) == up[0]:
                    pairs = [(0, 1), (2, 3)]
                else:
                    pairs = [(3, 0), (1, 2)]
            else:
                assert not hits
                pairs = []
            for a, b in pairs:
                out.append(seg_key(hits[a], hits[b]))
    return sorted(out)


def seg_key(p, q):
    p, q = tuple(np.round(p, 9)), tuple(np.round(q, 9))
    return (p, q) if p <= q else (q, p)
