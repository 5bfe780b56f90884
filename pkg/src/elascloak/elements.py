"""Reference triangle elements and quadrature rules.

Reference triangle: vertices (0,0), (1,0), (0,1). P2 nodes append the
edge midpoints in edge order (0,1), (1,2), (2,0). The triangle rule is
the 7-point degree-5 rule, so stiffness integrands of P2 elements with
per-point coefficient evaluation are integrated exactly on affine
elements with constant coefficients. Edge rule: 3-point Gauss, exact to
degree 5 for boundary traces.
"""

import numpy as np

_S15 = np.sqrt(15.0)
_A = (6.0 + _S15) / 21.0
_B = (6.0 - _S15) / 21.0

# weights sum to 1/2, the reference triangle area
TRI_POINTS = np.array([
    [1.0 / 3.0, 1.0 / 3.0],
    [_A, _A], [1.0 - 2.0 * _A, _A], [_A, 1.0 - 2.0 * _A],
    [_B, _B], [1.0 - 2.0 * _B, _B], [_B, 1.0 - 2.0 * _B],
])
TRI_WEIGHTS = 0.5 * np.array([
    9.0 / 40.0,
    (155.0 + _S15) / 1200.0, (155.0 + _S15) / 1200.0,
    (155.0 + _S15) / 1200.0,
    (155.0 - _S15) / 1200.0, (155.0 - _S15) / 1200.0,
    (155.0 - _S15) / 1200.0,
])

_G = np.sqrt(0.6)
EDGE_POINTS = np.array([0.5 * (1.0 - _G), 0.5, 0.5 * (1.0 + _G)])
EDGE_WEIGHTS = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])


def shape_values(order: int, pts: np.ndarray) -> np.ndarray:
    """Shape functions at reference points; (n_pts, n_shape)."""
    pts = np.asarray(pts, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    l0, l1, l2 = 1.0 - x - y, x, y
    if order == 1:
        return np.column_stack([l0, l1, l2])
    if order == 2:
        return np.column_stack([
            l0 * (2.0 * l0 - 1.0), l1 * (2.0 * l1 - 1.0),
            l2 * (2.0 * l2 - 1.0),
            4.0 * l0 * l1, 4.0 * l1 * l2, 4.0 * l2 * l0,
        ])
    raise ValueError("element order must be 1 or 2")


def shape_gradients(order: int, pts: np.ndarray) -> np.ndarray:
    """Reference gradients at reference points; (n_pts, n_shape, 2)."""
    pts = np.asarray(pts, dtype=float)
    n = len(pts)
    x, y = pts[:, 0], pts[:, 1]
    l0, l1, l2 = 1.0 - x - y, x, y
    d0 = np.array([-1.0, -1.0])
    d1 = np.array([1.0, 0.0])
    d2 = np.array([0.0, 1.0])
    if order == 1:
        g = np.empty((n, 3, 2))
        g[:, 0] = d0
        g[:, 1] = d1
        g[:, 2] = d2
        return g
    if order == 2:
        g = np.empty((n, 6, 2))
        g[:, 0] = (4.0 * l0 - 1.0)[:, None] * d0
        g[:, 1] = (4.0 * l1 - 1.0)[:, None] * d1
        g[:, 2] = (4.0 * l2 - 1.0)[:, None] * d2
        g[:, 3] = 4.0 * (l1[:, None] * d0 + l0[:, None] * d1)
        g[:, 4] = 4.0 * (l2[:, None] * d1 + l1[:, None] * d2)
        g[:, 5] = 4.0 * (l0[:, None] * d2 + l2[:, None] * d0)
        return g
    raise ValueError("element order must be 1 or 2")


def edge_trace(order: int, t: np.ndarray) -> np.ndarray:
    """Trace shape functions along one edge, parameter t in [0, 1].

    Columns: first endpoint, second endpoint, then the midpoint node for
    order 2. (n_t, 2 or 3).
    """
    t = np.asarray(t, dtype=float)
    if order == 1:
        return np.column_stack([1.0 - t, t])
    if order == 2:
        return np.column_stack([(1.0 - t) * (1.0 - 2.0 * t),
                                t * (2.0 * t - 1.0),
                                4.0 * t * (1.0 - t)])
    raise ValueError("element order must be 1 or 2")
