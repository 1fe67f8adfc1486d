"""Built-in example structures and sampling helpers.

Registry names:

* ``flat-f0``        -- flat chart with the canonical constant structure;
                        F vanishes identically.
* ``hypersurface-f5`` -- warped-product chart on R^(2n+1) whose fiber
                        metric is scaled by p(t) = exp(2 arctan(sinh t));
                        the structure is purely of the
                        eta-times-metric-of-phi shape (the "F5" class)
                        with theta*(xi) = 2n / cosh t, and xi is a
                        vertical torse-forming field with conformal
                        scalar f = 1 / cosh t.
* ``random``         -- structure obtained by conjugating the flat model
                        with a randomly generated near-identity frame
                        matrix of expression entries; exercises charts
                        with no special class membership.

The module also builds an isometrically embedded model: the time-like
sphere of complexified radius in C^(n+1) (viewed as R^(2n+2) with its
canonical complex structure and the real part of the complex bilinear
dot product as metric).  It is used to validate the intrinsic machinery
against ambient data: constraint equations, the unit normal, tangency of
the Reeb field and the Gauss relation between ambient second derivatives
and intrinsic Christoffel symbols.
"""

from __future__ import annotations

import numpy as np

from . import expr as ex
from .accr import (ChartStructure, FrameStructure, StructureJets,
                   StructureProvider, canonical_flat_fields, structure_eval,
                   _maxabs)
from .jets import (jet_space, jcos, jcosh, jsin, jsinh, scalar_from, tgrad,
                   tminv, tmul, tscale, ttrunc, tvalue)

DEFAULT_BOX = (0.5, 1.5)


def coord_names(n: int) -> list[str]:
    return [f"x{i + 1}" for i in range(2 * n)] + ["t"]


def build_flat_f0(n: int = 1) -> ChartStructure:
    g, phi, xi, eta = canonical_flat_fields(n)
    S = ChartStructure(n, coord_names(n), g=g, phi=phi, xi=xi, eta=eta,
                       name="flat-f0")
    S.fk = lambda point: 0.0
    return S


def build_hypersurface(n: int = 1) -> ChartStructure:
    """Chart model of the time-like-sphere hypersurface:

        g = p(t) Re( Q(w)^{s_n} sum_j dw_j^2 ) + dt^2,
        w_j = x^j + i x^{n+j},  Q = prod_k w_k^2,
        p(t) = exp(2 arctan(sinh t)),  s_1 = 0,  s_n = 1 for n >= 2,

    with the canonical constant phi (multiplication by i on each complex
    pair) and xi = d/dt.  The horizontal block is the real part of a
    holomorphic metric, so phi is parallel along horizontal directions
    and the whole deformation tensor F comes from the t-warp: the
    structure is exactly of the pure theta* class with theta = omega = 0,
    theta*(xi) = 2n p'/(2p) = 2n / cosh t, and xi is vertical
    torse-forming with conformal scalar f = p'/(2p) = 1 / cosh t.

    The exponent s_n fixes the holomorphic factor so that the standard
    deformation with u = (1/2) sum_j ln|w_j|^2 + ell(t),
    v = sum_j arctan(x^j / x^{n+j}) (whose joint factor
    e^{2u + 2iv} equals e^{2 ell} conj(Q) up to sign) produces a
    transformed horizontal metric of constant scalar curvature when
    e^{2 ell} p = const:

    * n = 1: the deformed block is Re(conj(w^2) dw^2), which is flat
      (Rindler form in the coordinates |w|^2/2, 2 arg w).
    * n = 2: the deformed block is |Q|^2 Re(sum dw_j^2), conformally
      flat with factor e^{2f}, f = sum 2 ln|w_j|; the neutral flat
      Laplacian satisfies box f = -|grad f|^2, and in real dimension 4
      the conformal curvature combination 2 box f + (m-2)|grad f|^2
      vanishes identically, so the scalar curvature is exactly zero.

    For n >= 3 the same s_n = 1 factor keeps all structural properties
    (axioms, pure theta* class, torse-forming data); constancy of the
    deformed scalar curvature is specific to n <= 2.
    Requires all w_j != 0; valid on the standard positive sample box.
    """
    d = 2 * n + 1
    p = ex.parse("exp(2 * arctan(sinh(t)))")
    s = 0 if n == 1 else 1
    # Q^s = R^s e^{2 i s Abar}, Abar = sum arctan(x^{n+j}/x^j)
    abar = ex.Const(0.0)
    big_r = ex.Const(1.0)
    for j in range(n):
        xj, xnj = ex.Var(f"x{j + 1}"), ex.Var(f"x{n + j + 1}")
        abar = abar + ex.func("arctan", xnj / xj)
        big_r = big_r * (xj ** 2 + xnj ** 2)
    if s == 0:
        a, b = p, ex.Const(0.0)
    else:
        a = p * big_r * ex.func("cos", 2.0 * abar)
        b = p * big_r * ex.func("sin", 2.0 * abar)
    g = [[ex.Const(0.0)] * d for _ in range(d)]
    for j in range(n):
        # Re((a + i b)(dx^j + i dx^{n+j})^2)
        g[j][j] = a
        g[n + j][n + j] = -a
        g[j][n + j] = -b
        g[n + j][j] = -b
    g[d - 1][d - 1] = ex.Const(1.0)
    _, phi, xi, eta = canonical_flat_fields(n)
    S = ChartStructure(n, coord_names(n), g=g, phi=phi, xi=xi, eta=eta,
                       name="hypersurface-f5")
    S.fk = lambda point: 1.0 / np.cosh(float(point[-1]))
    return S


def random_structure(n: int = 1, seed: int = 0) -> FrameStructure:
    """Near-identity random expression frame conjugating the flat model.

    Off-diagonal entries are eps * (c1 sin(x_a) + c2 x_b) with
    eps <= 0.2/d, which keeps ||A - I|| < 1 on any chart point, so A is
    invertible everywhere and no rejection step is needed.
    """
    rng = np.random.default_rng(seed)
    d = 2 * n + 1
    names = coord_names(n)
    eps = 0.2 / d
    frame = [[None] * d for _ in range(d)]
    for i in range(d):
        for j in range(d):
            c1, c2 = rng.uniform(-1.0, 1.0, size=2)
            a, b = rng.integers(0, d, size=2)
            entry = eps * (c1 * ex.func("sin", ex.Var(names[a]))
                           + c2 * ex.Var(names[b]))
            if i == j:
                entry = 1.0 + entry
            frame[i][j] = entry
    return FrameStructure(n, names, frame, name=f"random-{seed}")


REGISTRY = {
    "flat-f0": build_flat_f0,
    "hypersurface-f5": build_hypersurface,
    "random": random_structure,
}


def get_example(name: str, n: int = 1, seed: int = 0) -> StructureProvider:
    if name not in REGISTRY:
        raise KeyError(f"unknown example {name!r}; "
                       f"choose from {sorted(REGISTRY)}")
    if name == "random":
        return random_structure(n=n, seed=seed)
    return REGISTRY[name](n=n)


def sample_points(dim: int, count: int, seed: int = 0,
                  box=DEFAULT_BOX) -> np.ndarray:
    """Deterministic uniform sample of chart points inside ``box``
    (either one (lo, hi) pair for all coordinates or one per
    coordinate)."""
    rng = np.random.default_rng(seed)
    box_arr = np.asarray(box, dtype=float)
    if box_arr.ndim == 1:
        lo = np.full(dim, box_arr[0])
        hi = np.full(dim, box_arr[1])
    else:
        if box_arr.shape != (dim, 2):
            raise ValueError("box must be (lo, hi) or one pair per "
                             "coordinate")
        lo, hi = box_arr[:, 0], box_arr[:, 1]
    return lo + (hi - lo) * rng.random((count, dim))


# ---------------------------------------------------------------------------
# The transformation triple of the worked soliton construction
# ---------------------------------------------------------------------------

def soliton_uvw(n: int = 1, ell: str = "-arctan(sinh(t))", h: str = "t^2"):
    """The (u, v, w) triple that turns the warped model into a Yamabe
    soliton:

        u = (1/2) sum_i ln(x_i^2 + x_{n+i}^2) + ell(t),
        v = sum_i arctan(x_i / x_{n+i}),
        w = h(t).

    With the default ell = -arctan(sinh t) the vertical rate du(xi)
    equals -1/cosh t, exactly cancelling the torse-forming scalar of the
    warped model, while dv(xi) = 0 and dw is purely vertical.  Any
    vertical h keeps the soliton property; h = t^2 is a representative
    non-constant choice.
    """
    from .transform import TransformTriple
    u = ex.parse(ell)
    v = ex.Const(0.0)
    for i in range(n):
        xi_, xni = ex.Var(f"x{i + 1}"), ex.Var(f"x{n + i + 1}")
        u = u + 0.5 * ex.func("ln", xi_ ** 2 + xni ** 2)
        v = v + ex.func("arctan", xi_ / xni)
    return TransformTriple(u, v, ex.parse(h))


def holomorphic_pair_uvw(n: int = 1):
    """A (u, v, 0) triple whose horizontal pair satisfies the
    Cauchy-Riemann relations u_,i = v_,{n+i}, u_,{n+i} = -v_,i for
    every i, so alpha and beta vanish against horizontal arguments on
    the flat model:  u = x1^2 - x_{n+1}^2, v = 2 x1 x_{n+1}."""
    from .transform import TransformTriple
    x1, xn1 = ex.Var("x1"), ex.Var(f"x{n + 1}")
    return TransformTriple(x1 ** 2 - xn1 ** 2, 2.0 * x1 * xn1, ex.Const(0.0))


# ---------------------------------------------------------------------------
# Embedded model: time-like sphere in C^(n+1)
# ---------------------------------------------------------------------------

class EmbeddedSphere(StructureProvider):
    """Hypersurface sum_j (z^j)^2 = cosh^2(t) in C^(n+1), parametrized by
    n complex angles zeta_k = a_k + i b_k and the radial coordinate t:

        Z = cosh(t) * zhat(zeta),   zhat = spherical unit vector,
        zhat^1 = cos zeta_1, zhat^2 = sin zeta_1 cos zeta_2, ...,
        zhat^(n+1) = sin zeta_1 ... sin zeta_n.

    The ambient space R^(2n+2) carries the canonical complex structure J
    (multiplication by i) and the neutral metric G(X, Y) = Re(z_X . z_Y)
    with the complex bilinear dot product.  The induced data are

        g_jk  = Re(d_j Z . d_k Z),
        phi^k_j = g^{km} G(J d_j Z, d_m Z) = -g^{km} Im(d_j Z . d_m Z),
        xi = (1/sinh t) d/dt,   eta_j = g_{jt} / sinh t.

    Valid away from sinh t = 0 and the polar degeneracies of the angles.
    """

    def __init__(self, n: int = 1):
        self.n = n
        self.coords = ([f"a{i + 1}" for i in range(n)]
                       + [f"b{i + 1}" for i in range(n)] + ["t"])
        self.name = "embedded-sphere"
        self.ambient_dim = 2 * n + 2

    def embedding_jets(self, point, order: int):
        """Tensor-jet array Z[m, c] of the ambient position, with m the
        complex ambient index and c in {0: Re, 1: Im}."""
        d = self.dim
        space = jet_space(d, order)
        pt = np.asarray(point, dtype=float)
        a = [space.var(i, pt[i]) for i in range(self.n)]
        b = [space.var(self.n + i, pt[self.n + i]) for i in range(self.n)]
        t = space.var(d - 1, pt[d - 1])
        # complex trig of zeta = a + i b
        cos_re = [jcos(a[i]) * jcosh(b[i]) for i in range(self.n)]
        cos_im = [-(jsin(a[i]) * jsinh(b[i])) for i in range(self.n)]
        sin_re = [jsin(a[i]) * jcosh(b[i]) for i in range(self.n)]
        sin_im = [jcos(a[i]) * jsinh(b[i]) for i in range(self.n)]
        zr = [space.constant(1.0)]
        zi = [space.constant(0.0)]
        comps = []
        for i in range(self.n):
            pr, pi = zr[-1], zi[-1]
            comps.append((pr * cos_re[i] - pi * cos_im[i],
                          pr * cos_im[i] + pi * cos_re[i]))
            zr.append(pr * sin_re[i] - pi * sin_im[i])
            zi.append(pr * sin_im[i] + pi * sin_re[i])
        comps.append((zr[-1], zi[-1]))
        ct = jcosh(t)
        Z = np.zeros((space.ncoeff, self.n + 1, 2))
        for m, (re, im) in enumerate(comps):
            Z[:, m, 0] = (ct * re).coeffs
            Z[:, m, 1] = (ct * im).coeffs
        return space, Z

    def structure_at(self, point, order: int) -> StructureJets:
        parent, Z = self.embedding_jets(point, order + 1)
        space = parent.child
        d = self.dim
        dZ = tgrad(parent, Z)                 # dZ[m, c, j] = d_j Z^m_c
        dZr, dZi = dZ[:, :, 0, :], dZ[:, :, 1, :]
        # complex Gram C_jk = d_j Z . d_k Z
        cre = (tmul(space, dZr, dZr, "mj,mk->jk")
               - tmul(space, dZi, dZi, "mj,mk->jk"))
        cim = (tmul(space, dZr, dZi, "mj,mk->jk")
               + tmul(space, dZi, dZr, "mj,mk->jk"))
        g = 0.5 * (cre + np.einsum("pjk->pkj", cre))
        ginv = tminv(space, g)
        phi = tmul(space, ginv, -0.5 * (cim + np.einsum("pjk->pkj", cim)),
                   "km,jm->kj")
        pt = np.asarray(point, dtype=float)
        sh = jsinh(space.var(d - 1, pt[d - 1]))
        xi = np.zeros((space.ncoeff, d))
        xi[:, d - 1] = (space.constant(1.0) / sh).coeffs
        eta = tscale(space, space.constant(1.0) / sh, g[:, :, d - 1])
        return StructureJets(space, pt, g, phi, xi, eta)

    def fk(self, point) -> float:
        return 1.0 / np.cosh(float(point[-1]))


def embedding_invariants(model: EmbeddedSphere, point) -> dict[str, float]:
    """Residuals tying the intrinsic chart data to the ambient picture.

    * ``constraint``     : sum (z^j)^2 - cosh^2 t (real and imaginary).
    * ``jacobian_rank``  : 0 if the embedding differential has full rank.
    * ``normal_unit``    : G(N, N) + 1 for N = (1/cosh t) J Z.
    * ``normal_orth``    : G(N, d_j Z) for all j.
    * ``xi_position``    : ambient xi - Z / cosh t (so xi = -J N).
    * ``j_decomposition``: J dZ(X) - dZ(phi X) - eta(X) N over a basis.
    * ``gauss``          : tangential part of d_i d_j Z - Gamma^k_ij d_k Z
                           (the remainder must be purely normal).
    """
    d = model.dim
    parent, Z = model.embedding_jets(point, 2)
    space = parent.child
    dZ = tgrad(parent, Z)
    dZ0 = tvalue(dZ)                          # [m, c, j]
    Z0 = tvalue(Z)                            # [m, c]
    t = float(point[d - 1])
    ch, shv = np.cosh(t), np.sinh(t)

    zz = np.sum((Z0[:, 0] + 1j * Z0[:, 1]) ** 2)
    res = {"constraint": max(abs(zz.real - ch * ch), abs(zz.imag))}

    jac = dZ0.reshape(2 * (model.n + 1), d)
    sv = np.linalg.svd(jac, compute_uv=False)
    res["jacobian_rank"] = 0.0 if sv[d - 1] > 1e-8 * sv[0] else 1.0

    def G(x, y):
        z = np.sum((x[:, 0] + 1j * x[:, 1]) * (y[:, 0] + 1j * y[:, 1]))
        return z.real

    def J(x):
        return np.stack([-x[:, 1], x[:, 0]], axis=1)

    N = J(Z0) / ch
    res["normal_unit"] = abs(G(N, N) + 1.0)
    res["normal_orth"] = max(abs(G(N, dZ0[:, :, j])) for j in range(d))

    ev = structure_eval(model, point, order=1)
    xi0, eta0, phi0 = ev.xi0, ev.eta0, ev.phi0
    xi_amb = np.einsum("mcj,j->mc", dZ0, xi0)
    res["xi_position"] = _maxabs(xi_amb - Z0 / ch)

    jd = 0.0
    for j in range(d):
        lhs = J(dZ0[:, :, j])
        rhs = np.einsum("mck,k->mc", dZ0, phi0[:, j]) + eta0[j] * N
        jd = max(jd, _maxabs(lhs - rhs))
    res["j_decomposition"] = jd

    # Gauss: ambient Hessian minus Christoffel part must be normal
    ddZ = tvalue(tgrad(space, dZ))            # [m, c, j, i] = d_i d_j Z
    gamma0 = tvalue(ev.frame.gamma)           # [k, i, j]
    rem = ddZ - np.einsum("mck,kij->mcji", dZ0, gamma0)
    gs = 0.0
    for i in range(d):
        for j in range(d):
            v = rem[:, :, j, i]
            c = -G(v, N)                      # G(N, N) = -1
            gs = max(gs, _maxabs(v - c * N))
    res["gauss"] = gs
    return res
