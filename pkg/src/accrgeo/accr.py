"""Almost contact B-metric structure layer.

A *structure provider* supplies, at any chart point and jet order, the
metric g, the (1,1)-tensor phi, the Reeb field xi and its dual 1-form
eta as jet-valued component arrays.  On top of that this module computes
the fundamental (0,3)-tensor F(X,Y,Z) = g((nabla_X phi)Y, Z), the Lee
forms theta, theta*, omega, axiom and class-membership residuals, and
the torse-forming analysis of vector fields.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .geometry import (FrameEval, cov_deriv_tensor11, cov_deriv_vector,
                       eval_expr_table, expr_vector, signature)
from .jets import Jet, JetSpace, jet_space, scalar_from, tmul, tvalue

# tolerance ladder: structural identities, first-derivative identities,
# class verdicts (relative), absolute floor for near-zero tensors
TOL_STRUCT = 1e-9
TOL_DERIVED = 1e-8
TOL_CLASS = 1e-6
CLASS_FLOOR = 1e-10


@dataclass
class StructureJets:
    """Raw structure fields at one point, as tensor-jet arrays."""

    space: JetSpace
    point: np.ndarray
    g: np.ndarray       # (nc, d, d)
    phi: np.ndarray     # (nc, d, d), phi[k, j] = phi^k_j
    xi: np.ndarray      # (nc, d)
    eta: np.ndarray     # (nc, d)


class StructureProvider:
    """Base class: a chart of dimension 2n+1 with structure fields."""

    coords: list[str]
    n: int

    @property
    def dim(self) -> int:
        return 2 * self.n + 1

    def structure_at(self, point, order: int) -> StructureJets:
        raise NotImplementedError

    def coordinate_bindings(self, point, order: int) -> dict[str, Jet]:
        space = jet_space(self.dim, order)
        return {name: space.var(i, float(point[i]))
                for i, name in enumerate(self.coords)}


def canonical_flat_fields(n: int):
    """Constant component arrays of the canonical flat model:
    phi maps d/dx_i -> d/dx_{n+i}, xi is the last coordinate field,
    g is the block B-metric diag(1..1, -1..-1, 1)."""
    d = 2 * n + 1
    g = np.zeros((d, d))
    phi = np.zeros((d, d))
    xi = np.zeros(d)
    eta = np.zeros(d)
    for i in range(n):
        g[i, i] = 1.0
        g[n + i, n + i] = -1.0
        phi[n + i, i] = 1.0
        phi[i, n + i] = -1.0
    g[d - 1, d - 1] = 1.0
    xi[d - 1] = 1.0
    eta[d - 1] = 1.0
    return g, phi, xi, eta


class ChartStructure(StructureProvider):
    """Structure fields given as expression tables over the chart."""

    def __init__(self, n: int, coords, g, phi, xi, eta, name: str = "chart",
                 default_box=None):
        self.n = n
        self.coords = list(coords)
        if len(self.coords) != self.dim:
            raise ValueError("coordinate count must be 2n+1")
        d = self.dim
        self.g_expr = _table(g, (d, d))
        self.phi_expr = _table(phi, (d, d))
        self.xi_expr = expr_vector(xi)
        self.eta_expr = expr_vector(eta)
        self.name = name
        self.default_box = default_box

    def structure_at(self, point, order: int) -> StructureJets:
        space = jet_space(self.dim, order)
        g = eval_expr_table(self.g_expr, self.coords, point, order)
        g = 0.5 * (g + np.einsum("pij->pji", g))
        phi = eval_expr_table(self.phi_expr, self.coords, point, order)
        xi = eval_expr_table(self.xi_expr, self.coords, point, order)
        eta = eval_expr_table(self.eta_expr, self.coords, point, order)
        return StructureJets(space, np.asarray(point, dtype=float),
                             g, phi, xi, eta)


class FrameStructure(StructureProvider):
    """Structure obtained by conjugating the canonical flat model with an
    invertible expression-valued frame matrix A(x).

    Every invertible A yields a valid structure: phi = A phihat A^-1,
    xi = A xihat, eta = etahat A^-1, g = A^-T ghat A^-1.  The identity
    frame reproduces the flat model.
    """

    def __init__(self, n: int, coords, frame, name: str = "frame"):
        self.n = n
        self.coords = list(coords)
        d = self.dim
        self.frame_expr = _table(frame, (d, d))
        self.name = name
        (self._ghat, self._phihat,
         self._xihat, self._etahat) = canonical_flat_fields(n)

    def structure_at(self, point, order: int) -> StructureJets:
        from .jets import tminv
        space = jet_space(self.dim, order)
        a = eval_expr_table(self.frame_expr, self.coords, point, order)
        ainv = tminv(space, a)
        phi = np.einsum("pab,bc->pac", a, self._phihat)
        phi = tmul(space, phi, ainv, "ab,bc->ac")
        xi = np.einsum("pab,b->pa", a, self._xihat)
        eta = np.einsum("b,pba->pa", self._etahat, ainv)
        g = tmul(space, np.einsum("pba,bc->pac", ainv, self._ghat),
                 ainv, "ab,bc->ac")
        g = 0.5 * (g + np.einsum("pij->pji", g))
        return StructureJets(space, np.asarray(point, dtype=float),
                             g, phi, xi, eta)


def _table(entries, shape) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    arr = np.asarray(entries, dtype=object)
    if arr.shape != shape:
        raise ValueError(f"expected table of shape {shape}")
    for idx in np.ndindex(shape):
        e = arr[idx]
        if isinstance(e, str):
            e = ex.parse(e)
        elif not isinstance(e, ex.Expr):
            e = ex.Const(float(e))
        out[idx] = e
    return out


# ---------------------------------------------------------------------------
# Pointwise evaluation of the full structure
# ---------------------------------------------------------------------------

@dataclass
class AccrEval:
    """Structure plus derived tensors at one point (component values)."""

    S: StructureJets
    frame: FrameEval
    nabla_phi: np.ndarray = None   # values, [i, k, j] = (nabla_i phi)^k_j
    F: np.ndarray = None           # values, F[i, j, k] = F(e_i, e_j, e_k)
    gtilde: np.ndarray = None      # values
    theta: np.ndarray = None
    theta_star: np.ndarray = None
    omega: np.ndarray = None

    @property
    def n(self) -> int:
        return (self.S.g.shape[1] - 1) // 2

    @property
    def g0(self):
        return tvalue(self.S.g)

    @property
    def ginv0(self):
        return tvalue(self.frame.ginv)

    @property
    def phi0(self):
        return tvalue(self.S.phi)

    @property
    def xi0(self):
        return tvalue(self.S.xi)

    @property
    def eta0(self):
        return tvalue(self.S.eta)


def structure_eval(provider: StructureProvider, point, order: int = 1,
                   curvature: bool = False) -> AccrEval:
    S = provider.structure_at(point, order)
    frame = FrameEval.from_metric(S.space, S.g, point,
                                  curvature=curvature and order >= 2)
    ev = AccrEval(S=S, frame=frame)
    g0 = ev.g0
    ev.gtilde = g0 @ ev.phi0 + np.outer(ev.eta0, ev.eta0)
    if order >= 1:
        _, nphi = cov_deriv_tensor11(S.space, frame.gamma, S.phi)
        ev.nabla_phi = tvalue(nphi)
        # F_ijk = g_kl (nabla_i phi)^l_j
        ev.F = np.einsum("ilj,kl->ijk", ev.nabla_phi, g0)
        gi = ev.ginv0
        ev.omega = np.einsum("i,j,ijk->k", ev.xi0, ev.xi0, ev.F)
        # the traces defining theta and theta* run over a basis of the
        # contact distribution ker eta, completed by xi; invariantly that
        # subtracts the xi-xi term (which vanishes for theta* as
        # phi xi = 0)
        ev.theta = np.einsum("ij,ijk->k", gi, ev.F) - ev.omega
        ev.theta_star = np.einsum("ij,mj,imk->k", gi, ev.phi0, ev.F)
    return ev


# ---------------------------------------------------------------------------
# Residual reports
# ---------------------------------------------------------------------------

def _maxabs(a) -> float:
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def check_axioms(ev: AccrEval) -> dict[str, float]:
    """Max-norm residuals of the defining structure identities plus the
    symmetry and signature of the associated metric."""
    d = ev.S.g.shape[1]
    n = ev.n
    g0, phi0, xi0, eta0 = ev.g0, ev.phi0, ev.xi0, ev.eta0
    res = {}
    res["phi_xi"] = _maxabs(phi0 @ xi0)
    res["phi_squared"] = _maxabs(phi0 @ phi0 + np.eye(d)
                                 - np.outer(xi0, eta0))
    res["eta_phi"] = _maxabs(eta0 @ phi0)
    res["eta_xi"] = abs(float(eta0 @ xi0) - 1.0)
    res["b_metric"] = _maxabs(g0 + phi0.T @ g0 @ phi0
                              - np.outer(eta0, eta0))
    res["gtilde_symmetric"] = _maxabs(ev.gtilde - ev.gtilde.T)
    res["g_signature_ok"] = 0.0 if signature(g0) == (n + 1, n) else 1.0
    gts = 0.5 * (ev.gtilde + ev.gtilde.T)
    res["gtilde_signature_ok"] = 0.0 if signature(gts) == (n + 1, n) else 1.0
    return res


def f_prop_residual(ev: AccrEval) -> float:
    """Residual of the general symmetry of F:
    F(X,Y,Z) = F(X,Z,Y)
             = F(X,phiY,phiZ) + eta(Y)F(X,xi,Z) + eta(Z)F(X,Y,xi)."""
    F, phi0, eta0, xi0 = ev.F, ev.phi0, ev.eta0, ev.xi0
    sym = _maxabs(F - np.einsum("ijk->ikj", F))
    fxz = np.einsum("iak,a->ik", F, xi0)      # F(e_i, xi, e_k)
    fjx = np.einsum("ija,a->ij", F, xi0)      # F(e_i, e_j, xi)
    rhs = (np.einsum("iab,aj,bk->ijk", F, phi0, phi0)
           + np.einsum("j,ik->ijk", eta0, fxz)
           + np.einsum("k,ij->ijk", eta0, fjx))
    return max(sym, _maxabs(F - rhs))


def fxi_prop_residuals(ev: AccrEval) -> dict[str, float]:
    """Symmetries of F(.,.,xi) that characterise the classes reachable
    with a vertical torse-forming field."""
    F, phi0, xi0 = ev.F, ev.phi0, ev.xi0
    fxi = np.einsum("ija,a->ij", F, xi0)
    phi2 = phi0 @ phi0
    return {
        "fxi_symmetric": _maxabs(fxi - fxi.T),
        "fxi_phi_phi": _maxabs(fxi + phi0.T @ fxi @ phi0),
        "fxi_phi2_phi2": _maxabs(fxi - phi2.T @ fxi @ phi2),
    }


def lee_identities_residual(ev: AccrEval) -> dict[str, float]:
    """General Lee-form identities: theta* o phi = -theta o phi^2 and
    omega(xi) = 0."""
    phi0, xi0 = ev.phi0, ev.xi0
    phi2 = phi0 @ phi0
    return {
        "theta_star_phi": _maxabs(ev.theta_star @ phi0 + ev.theta @ phi2),
        "omega_xi": abs(float(ev.omega @ xi0)),
    }


def tensor_norm_g(ginv0: np.ndarray, T: np.ndarray) -> float:
    """Norm induced by the (indefinite) metric on (0,3)-tensors:
    sqrt(|g^ip g^jq g^kr T_ijk T_pqr|)."""
    val = np.einsum("ip,jq,kr,ijk,pqr->", ginv0, ginv0, ginv0, T, T)
    return float(np.sqrt(abs(val)))


def tensor_norm_e(T: np.ndarray) -> float:
    return float(np.sqrt(np.sum(T * T)))


def f1_component(ev: AccrEval) -> np.ndarray:
    """Closed-form F^1 built from g, phi and the Lee form theta."""
    n = ev.n
    g0, phi0, th = ev.g0, ev.phi0, ev.theta
    phi2 = phi0 @ phi0
    gpp = phi0.T @ g0 @ phi0                  # g(phi x, phi y)
    gp = g0 @ phi0                            # g(x, phi y)
    th2 = th @ phi2                           # theta(phi^2 .)
    thp = th @ phi0                           # theta(phi .)
    F1 = (np.einsum("ij,k->ijk", gpp, th2) + np.einsum("ij,k->ijk", gp, thp)
          + np.einsum("ik,j->ijk", gpp, th2)
          + np.einsum("ik,j->ijk", gp, thp))
    return F1 / (2.0 * n)


def f5_component(ev: AccrEval) -> np.ndarray:
    """Closed-form F^5 = -(theta*(xi)/2n){g(x,phi y)eta(z)
    + g(x,phi z)eta(y)}."""
    n = ev.n
    gp = ev.g0 @ ev.phi0
    ts_xi = float(ev.theta_star @ ev.xi0)
    F5 = (np.einsum("ij,k->ijk", gp, ev.eta0)
          + np.einsum("ik,j->ijk", gp, ev.eta0))
    return -ts_xi / (2.0 * n) * F5


@dataclass
class ClassResiduals:
    """Distance of F from the closed-form class components, in both the
    g-induced and the Euclidean component norm."""

    norm_F_g: float
    norm_F_e: float
    res_F0: float
    res_F1: float
    res_F5: float
    res_F1_plus_F5: float
    fxi_prop: dict[str, float]
    is_F0: bool
    is_F1: bool
    is_F5: bool
    is_F1_plus_F5: bool
    denom: float

    def verdicts(self) -> dict[str, bool]:
        return {"is_F0": self.is_F0, "is_F1": self.is_F1,
                "is_F5": self.is_F5, "is_F1_plus_F5": self.is_F1_plus_F5}


def class_residuals(ev: AccrEval, tol: float = TOL_CLASS) -> ClassResiduals:
    F = ev.F
    F1 = f1_component(ev)
    F5 = f5_component(ev)
    ne = tensor_norm_e(F)
    denom = max(ne, CLASS_FLOOR)
    r0 = tensor_norm_e(F)
    r1 = tensor_norm_e(F - F1)
    r5 = tensor_norm_e(F - F5)
    r15 = tensor_norm_e(F - F1 - F5)
    return ClassResiduals(
        norm_F_g=tensor_norm_g(ev.ginv0, F),
        norm_F_e=ne,
        res_F0=r0, res_F1=r1, res_F5=r5, res_F1_plus_F5=r15,
        fxi_prop=fxi_prop_residuals(ev),
        is_F0=r0 <= tol * denom + CLASS_FLOOR,
        is_F1=r1 <= tol * denom + CLASS_FLOOR,
        is_F5=r5 <= tol * denom + CLASS_FLOOR,
        is_F1_plus_F5=r15 <= tol * denom + CLASS_FLOOR,
        denom=denom,
    )


# ---------------------------------------------------------------------------
# Torse-forming analysis
# ---------------------------------------------------------------------------

@dataclass
class TorseFormingReport:
    """Pointwise identification of nabla theta = f*id + theta (x) gamma."""

    point: np.ndarray
    f: float
    gamma_form: np.ndarray
    fit_residual: float            # relative residual of the identification
    k: float                       # eta(theta_field)
    length_sq: float               # g(theta_field, theta_field)
    verticality: float             # |theta_field - k xi| (euclidean)
    is_torse_forming: bool
    is_vertical: bool
    dk_residual: float             # dk = f eta + k gamma, when vertical
    nabla_xi_residual: float       # nabla_x xi = -(f/k) phi^2 x
    f_xyxi_residual: float         # F(x,y,xi) = -(f/k) g(x, phi y)
    lee_theta_xi: float
    lee_theta_star_xi_residual: float   # theta*(xi) - 2n f/k
    lee_omega: float
    eta_consistency: float         # eta(theta_field) - g(theta_field, xi)


def torse_forming_analyze(provider: StructureProvider, theta_field, point,
                          order: int = 1,
                          tol: float = 1e-7) -> TorseFormingReport:
    """Identify the conformal scalar f and generating form gamma of a
    candidate torse-forming field by least squares on
    nabla theta = f*id + theta (x) gamma.

    ``theta_field`` is a sequence of component expressions (or numbers)
    over the chart coordinates.
    """
    ev = structure_eval(provider, point, order=max(order, 1))
    S = ev.S
    space = S.space
    d = S.g.shape[1]
    n = ev.n
    vf = eval_expr_table(expr_vector(theta_field), provider.coords,
                         point, space.order)
    v0 = tvalue(vf)
    if np.max(np.abs(v0)) < 1e-14:
        raise ValueError("torse-forming analysis needs a nonzero field")
    child, nv = cov_deriv_vector(space, ev.frame.gamma, vf)
    A = tvalue(nv)                            # A[i, k] = (nabla_i v)^k
    # A^k_i = f delta^k_i + v^k gamma_i  ->  lstsq in (f, gamma)
    rows = np.zeros((d * d, d + 1))
    rhs = np.zeros(d * d)
    r = 0
    for i in range(d):
        for k in range(d):
            rows[r, 0] = 1.0 if i == k else 0.0
            rows[r, 1 + i] = v0[k]
            rhs[r] = A[i, k]
            r += 1
    sol, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    f = float(sol[0])
    gamma_form = sol[1:]
    fit = rows @ sol - rhs
    scale = max(_maxabs(A), 1.0)
    fit_residual = _maxabs(fit) / scale

    eta0, xi0, g0, phi0 = ev.eta0, ev.xi0, ev.g0, ev.phi0
    k_val = float(eta0 @ v0)
    verticality = _maxabs(v0 - k_val * xi0)
    is_vertical = verticality <= tol * max(_maxabs(v0), 1.0)
    is_tf = fit_residual <= tol

    # dk = f eta + k gamma: k as a jet via eta_i v^i
    k_jet = scalar_from(space, tmul(space, S.eta, vf, "i,i->"))
    dk = k_jet.gradient() if space.order >= 1 else np.zeros(d)
    dk_residual = _maxabs(dk - f * eta0 - k_val * gamma_form)

    nxi_res = f_res = ts_res = np.nan
    th_xi = om = np.nan
    if is_vertical and abs(k_val) > 1e-12:
        fk = f / k_val
        _, nxi = cov_deriv_vector(space, ev.frame.gamma, S.xi)
        nxi0 = tvalue(nxi)                    # [i, k] = (nabla_i xi)^k
        phi2 = phi0 @ phi0
        nxi_res = _maxabs(nxi0 + fk * phi2.T)  # (nabla_i xi)^k = -fk (phi^2)^k_i
        fxi = np.einsum("ija,a->ij", ev.F, xi0)
        f_res = _maxabs(fxi + fk * (g0 @ phi0))
        th_xi = abs(float(ev.theta @ xi0))
        ts_res = abs(float(ev.theta_star @ xi0) - 2.0 * n * fk)
        om = _maxabs(ev.omega)

    return TorseFormingReport(
        point=np.asarray(point, dtype=float),
        f=f, gamma_form=gamma_form, fit_residual=fit_residual,
        k=k_val, length_sq=float(v0 @ g0 @ v0), verticality=verticality,
        is_torse_forming=is_tf, is_vertical=is_vertical,
        dk_residual=dk_residual, nabla_xi_residual=nxi_res,
        f_xyxi_residual=f_res, lee_theta_xi=th_xi,
        lee_theta_star_xi_residual=ts_res, lee_omega=om,
        eta_consistency=abs(k_val - float(v0 @ g0 @ xi0)),
    )
