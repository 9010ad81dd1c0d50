"""Hot loops with a numba path and a plain numpy path.

Set FAMED_NO_NUMBA=1 to force numpy. Both paths compute the same sums; the
numpy path chunks its outer products so memory stays bounded.
"""

from __future__ import annotations

import os

import numpy as np

_CHUNK = 1 << 21  # complex entries per outer-product block


def _want_numba() -> bool:
    if os.environ.get("FAMED_NO_NUMBA", "").strip() not in ("", "0"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USE_NUMBA = _want_numba()


# -- Faddeev integral on a horizontal line ------------------------------------

def phi_nodes(b: float, eps: float, h: float, n: int):
    """Nodes w_j = j h + i eps (|j| <= n) and weights h / (4 sinh(bw) sinh(w/b) w)."""
    w = np.arange(-n, n + 1) * h + 1j * eps
    g = h / (4.0 * np.sinh(b * w) * np.sinh(w / b) * w)
    return w, g


def _line_sum_numpy(u, w, g):
    out = np.empty(u.shape, dtype=complex)
    step = max(1, _CHUNK // max(1, w.size))
    for s in range(0, u.size, step):
        blk = u[s:s + step]
        out[s:s + step] = np.exp(-2j * np.outer(blk, w)) @ g
    return out


if USE_NUMBA:
    import numba

    @numba.njit(cache=True, fastmath=False)
    def _line_sum_numba(u, w, g):
        out = np.empty(u.shape[0], dtype=np.complex128)
        for i in range(u.shape[0]):
            acc = 0j
            ui = -2j * u[i]
            for j in range(w.shape[0]):
                acc += g[j] * np.exp(ui * w[j])
            out[i] = acc
        return out
else:  # pragma: no cover - exercised with FAMED_NO_NUMBA=1
    _line_sum_numba = None


def line_sum(u, w, g, backend: str | None = None):
    """sum_j g_j exp(-2 i u w_j) for each u (flat complex arrays)."""
    u = np.ascontiguousarray(u, dtype=complex).ravel()
    backend = backend or ("numba" if USE_NUMBA else "numpy")
    if backend == "numba":
        if _line_sum_numba is None:
            raise RuntimeError("numba backend unavailable")
        return _line_sum_numba(u, np.ascontiguousarray(w), np.ascontiguousarray(g))
    return _line_sum_numpy(u, w, g)


# -- quadrature integrand -----------------------------------------------------

def _grid_sum_numpy(x, phi_log, quad, lin, const):
    # x: (P, d) complex points; phi_log: (P,) summed log of the Phi factors
    q = np.einsum("pi,ij,pj->p", x, quad, x)
    expo = const + x @ lin + q - phi_log
    return np.exp(expo)


if USE_NUMBA:
    @numba.njit(cache=True)
    def _grid_sum_numba(x, phi_log, quad, lin, const):
        P, d = x.shape
        out = np.empty(P, dtype=np.complex128)
        for p in range(P):
            e = const - phi_log[p]
            for i in range(d):
                xi = x[p, i]
                e += lin[i] * xi
                for j in range(d):
                    e += xi * quad[i, j] * x[p, j]
            out[p] = np.exp(e)
        return out
else:  # pragma: no cover
    _grid_sum_numba = None


def gaussian_terms(x, phi_log, quad, lin, const, backend: str | None = None):
    """exp(const + lin.x + x^T quad x - phi_log) at every row of x."""
    x = np.ascontiguousarray(x, dtype=complex)
    phi_log = np.ascontiguousarray(phi_log, dtype=complex)
    quad = np.ascontiguousarray(quad, dtype=complex)
    lin = np.ascontiguousarray(lin, dtype=complex)
    backend = backend or ("numba" if USE_NUMBA else "numpy")
    if backend == "numba":
        if _grid_sum_numba is None:
            raise RuntimeError("numba backend unavailable")
        return _grid_sum_numba(x, phi_log, quad, lin, complex(const))
    return _grid_sum_numpy(x, phi_log, quad, lin, complex(const))
