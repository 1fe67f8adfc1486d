"""Chart-level pseudo-Riemannian machinery on jet-valued tensors.

All functions operate on coefficient-first tensor-jet arrays produced by
:mod:`accrgeo.jets`.  Index conventions:

* Christoffel symbols ``gamma[k, i, j]`` = Gamma^k_ij,
* Riemann tensor ``riem[l, i, j, k]`` = R^l_ijk
  = d_j Gamma^l_ik - d_k Gamma^l_ij + Gamma^l_jm Gamma^m_ik
  - Gamma^l_km Gamma^m_ij,
* Ricci ``R_ik = R^l_ilk``; the sign is fixed so that the unit 2-sphere
  has scalar curvature +2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .jets import (JetSpace, SingularMetricError, jet_space, scalar_from,
                   tconst, tgrad, tminv, tmul, tscale, ttrunc, tvalue)

__all__ = [
    "MetricChart", "FrameEval", "SingularMetricError",
    "christoffels", "riemann", "ricci_from_riemann", "scalar_curvature",
    "cov_deriv_tensor11", "cov_deriv_vector", "cov_deriv_covector",
    "cov_deriv_metric", "lie_metric_coord", "lie_metric_cov", "signature",
]


def eval_expr_table(table, coords, point, order: int) -> np.ndarray:
    """Evaluate a nested list/array of Expr (or numbers) into a
    tensor-jet array at a chart point."""
    space = jet_space(len(coords), order)
    bindings = {name: space.var(i, float(point[i]))
                for i, name in enumerate(coords)}
    table = np.asarray(table, dtype=object)
    out = np.zeros((space.ncoeff,) + table.shape)
    for idx in np.ndindex(table.shape):
        entry = table[idx]
        if isinstance(entry, ex.Expr):
            out[(slice(None),) + idx] = ex.eval_jet(entry, bindings).coeffs
        else:
            out[(0,) + idx] = float(entry)
    return out


def christoffels(space: JetSpace, g: np.ndarray, ginv: np.ndarray):
    """Levi-Civita symbols Gamma^k_ij as jets of order K-1.

    Returns (child_space, gamma)."""
    child = space.child
    dg = tgrad(space, g)                      # dg[i,j,l] = d_l g_ij
    ginv_c = ttrunc(space, ginv, child.order)
    # T_ijl = d_i g_jl + d_j g_il - d_l g_ij
    t = (np.einsum("pjli->pijl", dg) + np.einsum("pilj->pijl", dg)
         - np.einsum("pijl->pijl", dg))
    gamma = 0.5 * tmul(child, ginv_c, t, "kl,ijl->kij")
    return child, gamma


def riemann(space: JetSpace, gamma: np.ndarray):
    """Curvature R^l_ijk from Christoffel jets (order drops by one)."""
    child = space.child
    dgam = tgrad(space, gamma)                # dgam[l,i,j,m] = d_m Gamma^l_ij
    gam_c = ttrunc(space, gamma, child.order)
    quad = tmul(child, gam_c, gam_c, "ljm,mik->lijk")
    riem = (np.einsum("plikj->plijk", dgam)
            - np.einsum("plijk->plijk", dgam)
            + quad - np.einsum("plikj->plijk", quad))
    return child, riem


def ricci_from_riemann(riem: np.ndarray) -> np.ndarray:
    return np.einsum("plilk->pik", riem)


def scalar_curvature(space: JetSpace, ginv: np.ndarray,
                     ricci: np.ndarray) -> np.ndarray:
    """tau = g^ik R_ik; ``ginv`` and ``ricci`` must share ``space``."""
    return tmul(space, ginv, ricci, "ik,ik->")


def cov_deriv_tensor11(space: JetSpace, gamma: np.ndarray, phi: np.ndarray):
    """nabla_i phi^k_j; gamma must already live at the output order K-1."""
    child = space.child
    dphi = tgrad(space, phi)                  # dphi[k,j,i] = d_i phi^k_j
    phi_c = ttrunc(space, phi, child.order)
    out = (np.einsum("pkji->pikj", dphi)
           + tmul(child, gamma, phi_c, "kim,mj->ikj")
           - tmul(child, gamma, phi_c, "mij,km->ikj"))
    return child, out


def cov_deriv_vector(space: JetSpace, gamma: np.ndarray, v: np.ndarray):
    """nabla_i v^k; gamma must share the output order K-1."""
    child = space.child
    dv = tgrad(space, v)                      # dv[k,i] = d_i v^k
    v_c = ttrunc(space, v, child.order)
    out = np.einsum("pki->pik", dv) + tmul(child, gamma, v_c, "kim,m->ik")
    return child, out


def cov_deriv_covector(space: JetSpace, gamma: np.ndarray, a: np.ndarray):
    """nabla_i a_j; gamma must share the output order K-1."""
    child = space.child
    da = tgrad(space, a)                      # da[j,i] = d_i a_j
    a_c = ttrunc(space, a, child.order)
    out = np.einsum("pji->pij", da) - tmul(child, gamma, a_c, "mij,m->ij")
    return child, out


def cov_deriv_metric(space: JetSpace, gamma: np.ndarray, g: np.ndarray):
    """nabla_l g_ij (metricity residual check); output order K-1."""
    child = space.child
    dg = tgrad(space, g)                      # dg[i,j,l]
    g_c = ttrunc(space, g, child.order)
    out = (np.einsum("pijl->plij", dg)
           - tmul(child, gamma, g_c, "mli,mj->lij")
           - tmul(child, gamma, g_c, "mlj,im->lij"))
    return child, out


def lie_metric_coord(space: JetSpace, g: np.ndarray, v: np.ndarray):
    """(L_V g)_ij by the coordinate formula; output order K-1."""
    child = space.child
    dg = tgrad(space, g)                      # dg[i,j,k] = d_k g_ij
    dv = tgrad(space, v)                      # dv[k,i] = d_i v^k
    g_c = ttrunc(space, g, child.order)
    v_c = ttrunc(space, v, child.order)
    dv_r = np.einsum("pki->pik", dv)
    out = (tmul(child, v_c, np.einsum("pijk->pkij", dg), "k,kij->ij")
           + tmul(child, g_c, dv_r, "kj,ik->ij")
           + tmul(child, g_c, dv_r, "ik,jk->ij"))
    return child, out


def lie_metric_cov(child: JetSpace, g_c: np.ndarray, nabla_v: np.ndarray):
    """(L_V g)_ij = g_kj nabla_i V^k + g_ik nabla_j V^k, all at order K-1."""
    return (tmul(child, g_c, nabla_v, "kj,ik->ij")
            + tmul(child, g_c, nabla_v, "ik,jk->ij"))


def signature(g0: np.ndarray) -> tuple[int, int]:
    """(positive, negative) eigenvalue counts of a symmetric matrix."""
    w = np.linalg.eigvalsh(0.5 * (g0 + g0.T))
    return int(np.sum(w > 0)), int(np.sum(w < 0))


@dataclass
class FrameEval:
    """All pointwise evaluated metric data at one chart point.

    Arrays are tensor-jet arrays; ``space`` is the metric's jet space and
    derived quantities live in the appropriately lowered spaces.
    """

    point: np.ndarray
    space: JetSpace
    g: np.ndarray
    ginv: np.ndarray
    gamma_space: JetSpace = None
    gamma: np.ndarray = None
    riem_space: JetSpace = None
    riem: np.ndarray = None
    ricci: np.ndarray = None
    tau: float = None

    @classmethod
    def from_metric(cls, space: JetSpace, g: np.ndarray, point,
                    curvature: bool = True) -> "FrameEval":
        ginv = tminv(space, g)
        ev = cls(point=np.asarray(point, dtype=float), space=space,
                 g=g, ginv=ginv)
        if space.order >= 1:
            ev.gamma_space, ev.gamma = christoffels(space, g, ginv)
        if curvature and space.order >= 2:
            ev.riem_space, ev.riem = riemann(ev.gamma_space, ev.gamma)
            ev.ricci = ricci_from_riemann(ev.riem)
            ginv_r = ttrunc(space, ginv, ev.riem_space.order)
            ev.tau = float(tvalue(tmul(ev.riem_space, ginv_r, ev.ricci,
                                       "ik,ik->")))
        return ev


class MetricChart:
    """A coordinate chart carrying only a metric given by expressions.

    Components may be Expr trees, expression strings, or plain numbers.
    Used directly for plain-metric tests (spheres, polar charts) and as a
    building block for structured charts.
    """

    def __init__(self, coords: list[str], g):
        self.coords = list(coords)
        self.dim = len(self.coords)
        self.g = _expr_matrix(g, self.dim)

    def metric_at(self, point, order: int):
        """(space, g) metric tensor with order-K jet entries; enforces
        numerical symmetry of the components."""
        space = jet_space(self.dim, order)
        g = eval_expr_table(self.g, self.coords, point, order)
        g0 = tvalue(g)
        if np.max(np.abs(g0 - g0.T)) > 1e-12 * max(1.0, np.max(np.abs(g0))):
            raise ValueError("metric components are not symmetric")
        g = 0.5 * (g + np.einsum("pij->pji", g))
        return space, g

    def frame_at(self, point, order: int = 2,
                 curvature: bool = True) -> FrameEval:
        space, g = self.metric_at(point, order)
        return FrameEval.from_metric(space, g, point, curvature=curvature)

    def scalar_curvature_at(self, point) -> float:
        return self.frame_at(point, order=2).tau


def _expr_matrix(entries, dim: int) -> np.ndarray:
    out = np.empty((dim, dim), dtype=object)
    for i in range(dim):
        for j in range(dim):
            e = entries[i][j]
            if isinstance(e, str):
                e = ex.parse(e)
            elif not isinstance(e, ex.Expr):
                e = ex.Const(float(e))
            out[i, j] = e
    return out


def expr_vector(entries) -> np.ndarray:
    out = np.empty(len(entries), dtype=object)
    for i, e in enumerate(entries):
        if isinstance(e, str):
            e = ex.parse(e)
        elif not isinstance(e, ex.Expr):
            e = ex.Const(float(e))
        out[i] = e
    return out
