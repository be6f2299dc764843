"""Adaptive Gauss-Kronrod (7/15) quadrature for many integrands sharing nodes.

The integrand maps a 1-d array of abscissae to a (rows, nodes) array.  All
rows are refined on a common set of intervals; an interval is bisected when
any row still needs it.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError

# QUADPACK 15-point Kronrod abscissae (non-negative half) and weights
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
# 7-point Gauss weights, attached to the odd Kronrod nodes 1, 3, 5, 7
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
K_WEIGHTS = np.concatenate([_WK[:-1], _WK[::-1]])
G_WEIGHTS = np.zeros(15)
G_WEIGHTS[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG, _WG[2::-1]])


def gk15(a, b):
    """Nodes and Kronrod/Gauss weights on each interval ``[a_i, b_i]``."""
    a = np.asarray(a, dtype=float)[:, None]
    b = np.asarray(b, dtype=float)[:, None]
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * NODES
    return x, half * K_WEIGHTS, half * G_WEIGHTS


@dataclass
class QuadResult:
    value: np.ndarray
    error: np.ndarray
    evaluations: int
    intervals: np.ndarray
    converged: bool


class VectorGK:
    """Accumulates interval estimates for a row-vector integrand.

    ``measure`` maps the complex per-interval estimates to the real quantity
    whose accuracy is controlled (by default the real part).
    """

    def __init__(self, f, rows, measure=np.real, chunk=None):
        self.f = f
        self.rows = rows
        self.measure = measure
        self.chunk = chunk
        self.a = np.empty(0)
        self.b = np.empty(0)
        self.K = np.empty((rows, 0), dtype=complex)
        self.err = np.empty((rows, 0))
        self.evaluations = 0

    def _evaluate(self, a, b):
        x, wk, wg = gk15(a, b)
        flat = x.ravel()
        step = len(flat) if not self.chunk else max(15, self.chunk // 15 * 15)
        vals = np.concatenate([self.f(flat[i:i + step]) for i in range(0, len(flat), step)], axis=1)
        self.evaluations += flat.size
        vals = vals.reshape(self.rows, len(a), 15)
        K = np.einsum("rij,ij->ri", vals, wk)
        G = np.einsum("rij,ij->ri", vals, wg)
        return K, np.abs(self.measure(K) - self.measure(G))

    def add(self, a, b):
        """Add intervals; returns their Kronrod estimates."""
        a = np.atleast_1d(np.asarray(a, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        K, err = self._evaluate(a, b)
        self.a = np.concatenate([self.a, a])
        self.b = np.concatenate([self.b, b])
        self.K = np.concatenate([self.K, K], axis=1)
        self.err = np.concatenate([self.err, err], axis=1)
        return K

    @property
    def value(self):
        return self.K.sum(axis=1)

    @property
    def error(self):
        return self.err.sum(axis=1)

    def refine(self, tol_fn, max_evaluations):
        """Bisect until every row's error is below ``tol_fn(value)``.

        Returns True on success, False if the evaluation budget ran out.
        """
        while True:
            tol = tol_fn(self.value)
            bad_rows = self.error > tol
            if not np.any(bad_rows):
                return True
            if self.evaluations >= max_evaluations:
                return False
            nint = self.a.size
            # split every interval holding more than its fair share of a failing row's budget
            share = (tol / (2 * nint))[:, None]
            split = np.any((self.err > share) & bad_rows[:, None], axis=0)
            if not np.any(split):
                split = np.zeros(nint, dtype=bool)
                split[np.argmax(np.max(self.err[bad_rows], axis=0))] = True
            a, b = self.a[split], self.b[split]
            mid = 0.5 * (a + b)
            if np.any((mid <= a) | (mid >= b)):
                return False
            keep = ~split
            self.a, self.b = self.a[keep], self.b[keep]
            self.K, self.err = self.K[:, keep], self.err[:, keep]
            self.add(np.concatenate([a, mid]), np.concatenate([mid, b]))


def integrate(f, rows, edges, rtol=1e-8, atol=1e-8, max_evaluations=200000, measure=np.real):
    """Integrate ``f`` over the panels defined by ``edges``; raise on failure."""
    edges = np.asarray(edges, dtype=float)
    gk = VectorGK(f, rows, measure=measure)
    gk.add(edges[:-1], edges[1:])
    ok = gk.refine(lambda v: np.maximum(atol, rtol * np.abs(measure(v))), max_evaluations)
    res = QuadResult(gk.value, gk.error, gk.evaluations, np.stack([gk.a, gk.b]), ok)
    if not ok:
        raise ConvergenceError("quadrature did not reach tolerance", partial=res)
    return res
