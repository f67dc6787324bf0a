"""Two-site R-operator and the spectral-free universal R.

The R-operator exchanges the parameter pairs of two coupled first-order
matrix factors.  It is assembled here in four equivalent ways that the
checks play against each other:

  * as the reduced word of elementary transposition operators S1, S2, S3
    acting on the ordered parameter tuple (u2, u1, v2, v1);
  * as the direct four-factor product of D-functions;
  * as an integral operator with two independently quadratured
    convolution kernels;
  * reduced, via a large-shift limit, to the spectral-free universal R
    whose 1/gamma multipliers live on the spectral backend.

Every check returns a RelationReport; pass/fail is decided by the
relation-class tolerances carried by the numerics configuration.
"""
from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass

import numpy as np

from .lax import (SpectralTuple, build_L, build_ell, build_ellbar,
                  scalar_matrix, spin_to_u)
from .modouble import make_spin_ops
from .operators import (FDOperator, PDMomentum, PDMulX, PExpLin, PGammaInvP,
                        PGammaInvX, PPermute, PShift)
from .params import swap_omegas
from .report import (exchange_residual, finish_report, gaussian_panel,
                     grid_panel, mat_residual_tree, op_residual_grid,
                     op_residual_tree, point_set, residual_tree)
from .specfun import ConvergenceError, _panel_nodes, get_evaluator
from .states import DMul, GridData, KernelConv, eval_many, to_grid

# grid profiles: exchange checks against matrix factors pair sampled
# states on the wide grid, where the factor entries, which grow like
# exp(pi |x| / |w|), have room to decay before the boundary; plain
# three-coordinate Yang-Baxter checks run on the small ones
OP_GRID = (10.0, 512)
R_GRID_COARSE = (3.0, 32)
R_GRID_FINE = (3.0, 64)
DEFAULT_GRID = (4.0, 256)


def _cv(i: int, j: int, ncoords: int) -> tuple:
    cs = [0.0] * ncoords
    cs[i], cs[j] = 1.0, -1.0
    return tuple(cs)


def _swap_perm(i: int, j: int, ncoords: int) -> tuple:
    perm = list(range(ncoords))
    perm[i], perm[j] = perm[j], perm[i]
    return tuple(perm)


# -- elementary transpositions ------------------------------------------------

def s_action(k: int, tup: SpectralTuple) -> SpectralTuple:
    """Transposition s_k of neighbouring entries of (u2, u1, v2, v1)."""
    if k == 1:
        return SpectralTuple(tup.u1, tup.u2, tup.v2, tup.v1)
    if k == 2:
        return SpectralTuple(tup.u2, tup.v2, tup.u1, tup.v1)
    if k == 3:
        return SpectralTuple(tup.u2, tup.u1, tup.v1, tup.v2)
    raise ValueError(f"transposition index must be 1, 2 or 3, got {k}")


def build_S(k: int, tup: SpectralTuple, i: int = 0, j: int = 1,
            ncoords: int = 2) -> FDOperator:
    """S_1 = D_{u2-u1}(p_i), S_2 = D_{u1-v2}(x_ij), S_3 = D_{v2-v1}(p_j)."""
    if k == 1:
        return FDOperator.of(PDMomentum(i, tup.u2 - tup.u1))
    if k == 2:
        return FDOperator.of(PDMulX(tup.u1 - tup.v2, _cv(i, j, ncoords)))
    if k == 3:
        return FDOperator.of(PDMomentum(j, tup.v2 - tup.v1))
    raise ValueError(f"transposition index must be 1, 2 or 3, got {k}")


def word_operator(word, tup: SpectralTuple, i: int = 0, j: int = 1,
                  ncoords: int = 2) -> FDOperator:
    """Operator for a word in the transpositions, leftmost letter acting last.

    The letter sequence (k1, k2, ..., kn) maps to
    S_{k1}(s_{k2} ... s_{kn} tup) S_{k2}(s_{k3} ... s_{kn} tup) ... S_{kn}(tup).
    """
    factors = []
    t = tup
    for k in reversed(tuple(word)):
        factors.append(build_S(k, t, i, j, ncoords))
        t = s_action(k, t)
    op = FDOperator.identity()
    for f in factors:
        op = f * op
    return op


# -- the R-operator -----------------------------------------------------------

def build_R(tup: SpectralTuple, i: int = 0, j: int = 1,
            ncoords: int = 2) -> FDOperator:
    """D_{u2-v1}(x_ij) D_{u1-v1}(p_j) D_{u2-v2}(p_i) D_{u1-v2}(x_ij)."""
    cs = _cv(i, j, ncoords)
    return FDOperator.of(
        PDMulX(tup.u2 - tup.v1, cs),
        PDMomentum(j, tup.u1 - tup.v1),
        PDMomentum(i, tup.u2 - tup.v2),
        PDMulX(tup.u1 - tup.v2, cs))


def build_R_word(tup: SpectralTuple, i: int = 0, j: int = 1,
                 ncoords: int = 2) -> FDOperator:
    """The same operator as the reduced word s2 s1 s3 s2."""
    return word_operator((2, 1, 3, 2), tup, i, j, ncoords)


def build_R_pair(w, s_i, s_j, i: int = 0, j: int = 1,
                 ncoords: int = 2) -> FDOperator:
    """R in spin variables: D_{w-sg}(x_ij) D_{w+dl}(p_j) D_{w-dl}(p_i)
    D_{w+sg}(x_ij) with sg = (s_i+s_j)/2 and dl = (s_i-s_j)/2."""
    sg, dl = 0.5 * (s_i + s_j), 0.5 * (s_i - s_j)
    cs = _cv(i, j, ncoords)
    return FDOperator.of(
        PDMulX(w - sg, cs),
        PDMomentum(j, w + dl),
        PDMomentum(i, w - dl),
        PDMulX(w + sg, cs))


def build_R_permuted(w, s_i, s_j, i: int = 0, j: int = 1,
                     ncoords: int = 2) -> FDOperator:
    """P_ij R_ij(w), the form entering the Yang-Baxter checks."""
    return (FDOperator.of(PPermute(_swap_perm(i, j, ncoords))) *
            build_R_pair(w, s_i, s_j, i, j, ncoords))


@dataclass(frozen=True)
class RBuild:
    """An assembled R-operator together with its construction record."""
    tup: SpectralTuple
    spins: tuple  # (u, v, s1, s2)
    form: str
    factors: tuple

    @property
    def operator(self) -> FDOperator:
        op = FDOperator.identity()
        for f in self.factors:
            op = op * f
        return op


def make_R_build(u, v, s1, s2, params, tilde: bool = False,
                 form: str = "product") -> RBuild:
    tup = SpectralTuple.from_physical(u, v, s1, s2, params, tilde)
    if form == "product":
        cs = _cv(0, 1, 2)
        factors = (FDOperator.of(PDMulX(tup.u2 - tup.v1, cs)),
                   FDOperator.of(PDMomentum(1, tup.u1 - tup.v1)),
                   FDOperator.of(PDMomentum(0, tup.u2 - tup.v2)),
                   FDOperator.of(PDMulX(tup.u1 - tup.v2, cs)))
    elif form == "word":
        factors = []
        t = tup
        for k in reversed((2, 1, 3, 2)):
            factors.append(build_S(k, t))
            t = s_action(k, t)
        factors = tuple(reversed(factors))
    else:
        raise ValueError(f"form must be 'product' or 'word', got {form!r}")
    return RBuild(tup=tup, spins=(u, v, s1, s2), form=form, factors=factors)


# -- integral form ------------------------------------------------------------

def _integral_kernel(ev, c: complex):
    """Contour nodes and fused weights for one convolution factor of the
    integral form.

    Same analytic prescription as the operator backend's momentum kernel
    but with an independently chosen contour layout, so agreement between
    the two R forms cross-checks the quadrature, not just the algebra.
    """
    p = ev.params
    c = complex(c)
    ak = -p.omega_dp - c
    rate = 2.0 * math.pi * (p.omega_dp.imag + c.imag)
    if rate < 0.3:
        raise ConvergenceError(
            f"integral kernel for c={c} has tail rate {rate:.3f}")
    eta = 0.22
    if abs(c.imag) >= eta - 0.02:
        raise ConvergenceError(
            f"integral kernel for c={c}: pole too close to the contour")
    W = 6.5
    ac = abs(c)
    if ac < 0.004:
        raise ConvergenceError(
            f"integral kernel for c={c}: the w = +/-c pole pair pinches "
            f"the contour below quadrature resolution")
    cw = min(ac + 1.2, W - 1.0)
    fine = np.linspace(0.0, cw, max(2, int(math.ceil(cw / 0.12)) + 1))
    if ac < 0.3:
        # pinch panels: the contour passes within ~|c| of both poles
        pw = min(0.45, max(4.5 * ac, 0.09))
        hp = min(max(ac / 2.2, 0.002), 0.12)
        pinch = np.linspace(0.0, pw, max(2, int(math.ceil(pw / hp)) + 1))
        fine = np.concatenate([pinch, fine[fine > pw]])
    coarse = np.linspace(cw, W, max(2, int(math.ceil((W - cw) / 0.45)) + 1))
    un_c, wn_c = _panel_nodes(np.concatenate([-fine[::-1], fine[1:]]), 10)
    un_l, wn_l = _panel_nodes(-coarse[::-1], 12)
    un_r, wn_r = _panel_nodes(coarse, 12)
    u = np.concatenate([un_l, un_c, un_r])
    wu = np.concatenate([wn_l, wn_c, wn_r])
    s = 1.0 if c.real >= 0 else -1.0
    sig = max(abs(c) / 2.0, 0.25)
    y = u + 1j * eta * s * np.tanh(u / sig)
    dy = wu * (1.0 + 1j * eta * s / (sig * np.cosh(u / sig) ** 2))
    kw = ev.eval_A(ak) * np.exp(ev.log_D(ak, y)) * dy
    return y, kw


def apply_R_integral(u, s1, s2, state, ev=None):
    """R applied to a two-coordinate state in the integral form:
    an x_12 multiplier, two one-coordinate kernel convolutions, then the
    closing x_12 multiplier.  Raises ConvergenceError when a kernel does
    not decay (spectral or spin parameters too far off the real axis).
    """
    ev = ev if ev is not None else get_evaluator()
    sg, dl = 0.5 * (s1 + s2), 0.5 * (s1 - s2)
    cs = (1.0, -1.0)
    c1, c2 = complex(u) - dl, complex(u) + dl
    node = DMul(state, complex(u) + sg, cs, 0.0)
    if c1 != 0:
        y, kw = _integral_kernel(ev, c1)
        node = KernelConv(node, 0, y, kw, tag=f"Rint[{c1}](p0)")
    if c2 != 0:
        y, kw = _integral_kernel(ev, c2)
        node = KernelConv(node, 1, y, kw, tag=f"Rint[{c2}](p1)")
    return DMul(node, complex(u) - sg, cs, 0.0)


# -- universal R --------------------------------------------------------------

def _require_real(**named):
    for name, val in named.items():
        if abs(complex(val).imag) > 1e-12:
            raise ConvergenceError(
                f"universal R needs real {name}, got {val}: a complex value "
                "turns its unimodular multipliers into growing ones")


def build_universal_R(s1, s2, i: int = 0, j: int = 1,
                      ncoords: int = 2) -> FDOperator:
    """Spectral-free universal R: P_ij followed by the four multiplier
    factors.  Grid backend only (the 1/gamma factors have no tree form)."""
    return universal_R_at(0.0, s1, s2, i, j, ncoords)


def universal_R_at(u, s1, s2, i: int = 0, j: int = 1,
                   ncoords: int = 2) -> FDOperator:
    """The universal R at spectral point u, as the closed four-factor form
    with overall phase exp(4 pi i u^2).

    The spectral parameter enters every factor slot with a minus sign;
    that orientation is forced by the one-sided momentum similarity
    defining the spectral orbit and confirmed against the large-shift
    reduction of the two-site operator, which converges to this form and
    diverges from the slot convention with +u.
    """
    _require_real(u=u, s1=s1, s2=s2)
    u = complex(u).real
    sg = 0.5 * (s1 + s2)
    di = 0.5 * (s1 - s2)  # p_i slot offset
    dj = 0.5 * (s2 - s1)  # p_j slot offset
    cs = _cv(i, j, ncoords)
    ncs = tuple(-c for c in cs)
    two_pi_i = 2j * math.pi
    prims = (
        PPermute(_swap_perm(i, j, ncoords)),
        # exp(-2 pi i (sg-u) x_ij) / gamma(-x_ij + sg - u)
        PExpLin(i, -two_pi_i * (sg - u)), PExpLin(j, two_pi_i * (sg - u)),
        PGammaInvX(ncs, sg - u),
        # exp(2 pi i (dj-u) p_j) / gamma(p_j + dj - u)
        PShift(j, dj - u), PGammaInvP(j, 1, dj - u),
        # exp(-2 pi i (di-u) p_i) / gamma(-p_i + di - u)
        PShift(i, -(di - u)), PGammaInvP(i, -1, di - u),
        # exp(-2 pi i (sg+u) x_ij) / gamma(x_ij - sg - u)
        PExpLin(i, -two_pi_i * (sg + u)), PExpLin(j, two_pi_i * (sg + u)),
        PGammaInvX(cs, -sg - u),
    )
    return FDOperator.of(*prims, coeff=cmath.exp(4j * math.pi * u * u))


def yangbaxterize(u, s1, s2, i: int = 0, j: int = 1,
                  ncoords: int = 2) -> FDOperator:
    """Spectral orbit of the universal R by one-sided momentum similarity:
    exp(-2 pi i u p_i) R exp(2 pi i u p_i)."""
    _require_real(u=u)
    u = complex(u).real
    r0 = build_universal_R(s1, s2, i, j, ncoords)
    return (FDOperator.of(PShift(i, -u)) * r0 * FDOperator.of(PShift(i, u)))


def reduction_series(u, s1, s2, vs=(1.0, 2.0, 4.0), ev=None,
                     grid=(8.0, 256), count: int = 2):
    """Residuals of the large-shift reduction
    exp(4 pi i (u+v)^2) exp(2 pi i v p_1) P_12 R(u+v) exp(-2 pi i v p_1)
    against the universal R at u, for increasing v."""
    ev = ev if ev is not None else get_evaluator()
    L, N = grid
    gstates = grid_panel(L, N, 2, ev, count=count)
    rhs = universal_R_at(u, s1, s2)
    out = []
    for v in vs:
        w = u + v
        lhs = (FDOperator.of(PShift(0, v)) *
               build_R_permuted(w, s1, s2) *
               FDOperator.of(PShift(0, -v))) * cmath.exp(4j * math.pi * w * w)
        res = op_residual_grid(lhs, rhs, gstates, ev, window=2.0)
        out.append((float(v), float(res)))
    return out


# -- checks -------------------------------------------------------------------

def _ev_tols(params=None, numerics=None):
    ev = get_evaluator(params, numerics)
    return ev, ev.numerics.relation_tols


def check_R_word(u=0.27, v=-0.14, s1=0.4, s2=0.7, params=None, numerics=None):
    """Reduced word s2 s1 s3 s2 and the four-factor product must agree
    syntactically once commuting factors are put in canonical order."""
    ev, tols = _ev_tols(params, numerics)
    t0 = time.perf_counter()
    tup = SpectralTuple.from_physical(u, v, s1, s2, ev.params)
    same = build_R(tup).canonical() == build_R_word(tup).canonical()
    return finish_report(
        "r-word",
        "S2(s1 s3 s2 t) S1(s3 s2 t) S3(s2 t) S2(t) = "
        "D_{u2-v1}(x12) D_{u1-v1}(p2) D_{u2-v2}(p1) D_{u1-v2}(x12)",
        {"u": u, "v": v, "s1": s1, "s2": s2}, {"backend": "symbolic"},
        0.0 if same else 1.0, tols["exact"], t0)


def check_R_trivial(s=0.4, params=None, numerics=None):
    """At u = v and s1 = s2 the R-operator collapses to the identity."""
    ev, tols = _ev_tols(params, numerics)
    t0 = time.perf_counter()
    op = build_R_pair(0.0, s, s)
    states = gaussian_panel(2, 2)
    pts = point_set(2, 5, 1.2)
    pairs = []
    for st in states:
        va = eval_many(op.apply(st, ev), pts, ev)
        vb = eval_many([(1.0, st)], pts, ev)
        pairs.append([(va, vb)])
    res = residual_tree(pairs)
    return finish_report(
        "r-trivial", "R(u, u, s, s) = 1",
        {"s": s}, {"backend": "tree", "points": len(pts)},
        res, tols["scalar"], t0)


def check_R_forms(params=None, numerics=None,
                  us=(-0.3, 0.1, 0.4),
                  spin_pairs=((0.4, 0.7), (0.2, -0.3), (-0.5, 0.25))):
    """Product form against the integral form on a 3 x 3 parameter lattice."""
    ev, tols = _ev_tols(params, numerics)
    t0 = time.perf_counter()
    pts = point_set(2, 4, 1.1)
    states = gaussian_panel(2, 3)
    pairs = []
    worst = 0.0
    for a, u in enumerate(us):
        for b, (s1, s2) in enumerate(spin_pairs):
            op = build_R_pair(u, s1, s2)
            st = states[(a + b) % len(states)]
            va = eval_many(op.apply(st, ev), pts, ev)
            vb = eval_many([(1.0, apply_R_integral(u, s1, s2, st, ev))],
                           pts, ev)
            pairs.append([(va, vb)])
    worst = residual_tree(pairs)
    return finish_report(
        "r-forms",
        "D_{u-sg}(x12) D_{u+dl}(p2) D_{u-dl}(p1) D_{u+sg}(x12) = "
        "A-weighted double-kernel integral operator",
        {"us": us, "spin_pairs": spin_pairs},
        {"backend": "tree", "points": len(pts)},
        worst, tols["operator1"], t0)


def check_star_triangle_op(a=0.31, b=-0.24, params=None, numerics=None):
    """Operator star-triangle in one coordinate:
    D_a(p) D_{a+b}(x) D_b(p) = D_b(x) D_{a+b}(p) D_a(x)."""
    ev, tols = _ev_tols(params, numerics)
    t0 = time.perf_counter()
    lhs = FDOperator.of(PDMomentum(0, a), PDMulX(a + b, (1.0,)),
                        PDMomentum(0, b))
    rhs = FDOperator.of(PDMulX(b, (1.0,)), PDMomentum(0, a + b),
                        PDMulX(a, (1.0,)))
    states = gaussian_panel(1, 3)
    pts = point_set(1, 9, 1.4)
    res = op_residual_tree(lhs, rhs, states, pts, ev)
    return finish_report(
        "star-triangle-op",
        "D_a(p) D_{a+b}(x) D_b(p) = D_b(x) D_{a+b}(p) D_a(x)",
        {"a": a, "b": b}, {"backend": "tree", "points": len(pts)},
        res, tols["operator2"], t0)


def check_WSW(which: int = 1, a=0.31, b=-0.24, params=None, numerics=None):
    """Two-coordinate star-triangle with x replaced by x_12 and p by p_1
    (which = 1) or p_2 (which = 2)."""
    ev, tols = _ev_tols(params, numerics)
    t0 = time.perf_counter()
    k = 0 if which == 1 else 1
    cs = (1.0, -1.0)
    lhs = FDOperator.of(PDMomentum(k, a), PDMulX(a + b, cs), PDMomentum(k, b))
    rhs = FDOperator.of(PDMulX(b, cs), PDMomentum(k, a + b), PDMulX(a, cs))
    states = gaussian_panel(2, 2)
    pts = point_set(2, 5, 1.2)
    res = op_residual_tree(lhs, rhs, states, pts, ev)
    return finish_report(
        f"wsw-{which}",
        f"D_a(p_{which}) D_{{a+b}}(x_12) D_b(p_{which}) = "
        f"D_b(x_12) D_{{a+b}}(p_{which}) D_a(x_12)",
        {"a": a, "b": b}, {"backend": "tree", "points": len(pts)},
        res, tols["operator2"], t0)


def check_coxeter(which: int = 1, u=0.27, v=-0.14, s1=0.4, s2=0.7,
                  params=None, numerics=None):
    """Braid relation of neighbouring transpositions, as operators:
    which = 1 plays s1 s2 s1 = s2 s1 s2, which = 3 plays s3 s2 s3 = s2 s3 s2."""
    ev, tols = _ev_tols(params, numerics)
    t0 = time.perf_counter()
    k = 1 if which == 1 else 3
    tup = SpectralTuple.from_physical(u, v, s1, s2, ev.params)
    lhs = word_operator((k, 2, k), tup)
    rhs = word_operator((2, k, 2), tup)
    states = gaussian_panel(2, 2)
    pts = point_set(2, 5, 1.2)
    res = op_residual_tree(lhs, rhs, states, pts, ev)
    return finish_report(
        f"coxeter-{k}2{k}",
        f"S{k}(s2 s{k} t) S2(s{k} t) S{k}(t) = S2(s{k} s2 t) S{k}(s2 t) S2(t)",
        {"u": u, "v": v, "s1": s1, "s2": s2},
        {"backend": "tree", "points": len(pts)},
        res, tols["operator2"], t0)


def star_triangle_scalar(a, b, z1, z2, z3, ev, halfwidth=11.0):
    """Both sides of the scalar star-triangle identity at a + b + c = -2w''.

    Returns (lhs, rhs).  The integrand decays like exp(-2 pi |Im a_k| |z|),
    so all three parameters need strictly negative imaginary part.
    """
    p = ev.params
    c = -2.0 * p.omega_dp - a - b
    for name, val in (("a", a), ("b", b), ("c", c)):
        if complex(val).imag >= -0.05:
            raise ConvergenceError(
                f"star-triangle parameter {name}={val} gives a "
                "non-decaying integrand")
    edges = np.arange(-halfwidth, halfwidth + 0.25, 0.25)
    z, wz = _panel_nodes(edges, 16)
    vals = np.exp(ev.log_D(a, z - z1) + ev.log_D(b, z - z2) +
                  ev.log_D(c, z - z3))
    lhs = ev.eval_A(a) * ev.eval_A(b) * ev.eval_A(c) * np.sum(vals * wz)
    w = p.omega_dp
    rhs = cmath.exp(ev.log_D(-w - a, z2 - z3) + ev.log_D(-w - b, z3 - z1) +
                    ev.log_D(-w - c, z1 - z2))
    return lhs, rhs


def check_star_triangle_integral(params=None, numerics=None, triples=None):
    """Scalar star-triangle by direct quadrature at three parameter triples;
    the constraint a + b + c = -2w'' is enforced by construction of c."""
    ev, tols = _ev_tols(params, numerics)
    t0 = time.perf_counter()
    if triples is None:
        triples = ((0.2 - 0.7j, -0.1 - 0.6j, (0.3, -0.2, 0.1)),
                   (-0.7j, -0.7j, (0.0, 0.5, -0.4)),
                   (0.3 - 0.5j, -0.15 - 0.8j, (-0.3, 0.1, 0.35)))
    worst = 0.0
    for a, b, (z1, z2, z3) in triples:
        lhs, rhs = star_triangle_scalar(a, b, z1, z2, z3, ev)
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs)))
    return finish_report(
        "star-triangle",
        "A(a) A(b) A(c) int dz D_a(z-z1) D_b(z-z2) D_c(z-z3) = "
        "D_{-w''-a}(z2-z3) D_{-w''-b}(z3-z1) D_{-w''-c}(z1-z2)",
        {"triples": [(a, b) for a, b, _ in triples]},
        {"backend": "quadrature"},
        worst, tols["fourier"], t0)


def check_omega_swap(u=0.23, s1=0.4, s2=0.7, params=None, numerics=None):
    """R is built from D-functions only, so swapping the two frequencies
    must leave its action unchanged."""
    ev, tols = _ev_tols(params, numerics)
    t0 = time.perf_counter()
    ev2 = get_evaluator(swap_omegas(ev.params), ev.numerics)
    op = build_R_pair(u, s1, s2)
    states = gaussian_panel(2, 2)
    pts = point_set(2, 4, 1.1)
    pairs = []
    for st in states:
        va = eval_many(op.apply(st, ev), pts, ev)
        vb = eval_many(op.apply(st, ev2), pts, ev2)
        pairs.append([(va, vb)])
    res = residual_tree(pairs)
    return finish_report(
        "r-omega-swap", "R(u; w, w') = R(u; w', w)",
        {"u": u, "s1": s1, "s2": s2}, {"backend": "tree", "points": len(pts)},
        res, tols["backend"], t0)


def check_SLL(which: int = 2, u=0.3, v=-0.2, s1=0.4, s2=0.7,
              params=None, numerics=None):
    """Defining relations of the elementary transposition operators:
    S1 and S3 swap the parameter pair inside one matrix factor, S2 trades
    the inner pair across the two factors."""
    ev, tols = _ev_tols(params, numerics)
    t0 = time.perf_counter()
    p = ev.params
    tup = SpectralTuple.from_physical(u, v, s1, s2, p)
    S = build_S(which, tup)
    if which == 1:
        lhs = build_L(tup.u1, tup.u2, p, 0).scalar_mul(S)
        rhs = build_L(tup.u2, tup.u1, p, 0) @ scalar_matrix(S)
        anchor = "D_{u2-u1}(p_1) L_1(u1,u2) = L_1(u2,u1) D_{u2-u1}(p_1)"
        states = gaussian_panel(1, 2)
        pts = point_set(1, 9, 1.4)
    elif which == 3:
        lhs = build_L(tup.v1, tup.v2, p, 1).scalar_mul(S)
        rhs = build_L(tup.v2, tup.v1, p, 1) @ scalar_matrix(S)
        anchor = "D_{v2-v1}(p_2) L_2(v1,v2) = L_2(v2,v1) D_{v2-v1}(p_2)"
        states = gaussian_panel(2, 2)
        pts = point_set(2, 5, 1.2)
    elif which == 2:
        L12 = build_L(tup.u1, tup.u2, p, 0) @ build_L(tup.v1, tup.v2, p, 1)
        swapped = (build_L(tup.v2, tup.u2, p, 0) @
                   build_L(tup.v1, tup.u1, p, 1))
        lhs = L12.scalar_mul(S)
        rhs = swapped @ scalar_matrix(S)
        anchor = ("D_{u1-v2}(x_12) L_1(u1,u2) L_2(v1,v2) = "
                  "L_1(v2,u2) L_2(v1,u1) D_{u1-v2}(x_12)")
        states = gaussian_panel(2, 2)
        pts = point_set(2, 5, 1.2)
    else:
        raise ValueError(f"which must be 1, 2 or 3, got {which}")
    res = mat_residual_tree(lhs, rhs, states, pts, ev)
    return finish_report(
        f"s-intertwine-{which}", anchor,
        {"u": u, "v": v, "s1": s1, "s2": s2},
        {"backend": "tree", "points": len(pts)},
        res, tols["operator2"], t0)


def check_RLL(u=0.3, v=-0.2, s1=0.4, s2=0.7, tilde: bool = False,
              params=None, numerics=None, grid=OP_GRID, count: int = 2):
    """R exchanges the parameter pairs between two matrix factors:
    R L_1(u1,u2) L_2(v1,v2) = L_1(v1,v2) L_2(u1,u2) R, in either frame."""
    ev, tols = _ev_tols(params, numerics)
    t0 = time.perf_counter()
    p = ev.params
    tup = SpectralTuple.from_physical(u, v, s1, s2, p, tilde)
    R = build_R(tup)
    L1 = build_L(tup.u1, tup.u2, p, 0, tilde)
    L2 = build_L(tup.v1, tup.v2, p, 1, tilde)
    L1s = build_L(tup.v1, tup.v2, p, 0, tilde)
    L2s = build_L(tup.u1, tup.u2, p, 1, tilde)
    L, N = grid
    res = exchange_residual(R, L1 @ L2, L1s @ L2s, ev, grid, count)
    return finish_report(
        "rll-tilde" if tilde else "rll",
        "R(t) L_1(u1,u2) L_2(v1,v2) = L_1(v1,v2) L_2(u1,u2) R(t)"
        + (" [partner frame]" if tilde else ""),
        {"u": u, "v": v, "s1": s1, "s2": s2, "tilde": tilde},
        {"L": L, "N": N, "states": count},
        res, tols["rll"], t0)


def check_rlL(u=0.3, v=-0.2, s1=0.4, s2=0.7, params=None, numerics=None,
              grid=OP_GRID, count: int = 2):
    """Universal R intertwines the lower-triangular degeneration with the
    full matrix factor: R(u-v) l_1(u) L_2(v) = L_2(v) l_1(u) R(u-v)."""
    ev, tols = _ev_tols(params, numerics)
    t0 = time.perf_counter()
    p = ev.params
    sp1 = make_spin_ops(s1, p, coord=0)
    ell1 = build_ell(u, sp1, p)
    u1, u2 = spin_to_u(v, s2, p)
    L2 = build_L(u1, u2, p, 1)
    R = yangbaxterize(u - v, s1, s2)
    L, N = grid
    res = exchange_residual(R, ell1 @ L2, L2 @ ell1, ev, grid, count)
    return finish_report(
        "rl-lower",
        "R(u-v) l_1(u) L_2(v) = L_2(v) l_1(u) R(u-v)",
        {"u": u, "v": v, "s1": s1, "s2": s2},
        {"L": L, "N": N, "states": count},
        res, tols["rll"], t0)


def check_rLl(u=0.3, v=-0.2, s1=0.4, s2=0.7, params=None, numerics=None,
              grid=OP_GRID, count: int = 2):
    """Mirror of the lower-triangular case, with the upper-triangular
    degeneration in the second space:
    R(u-v) L_1(u) lbar_2(v) = lbar_2(v) L_1(u) R(u-v)."""
    ev, tols = _ev_tols(params, numerics)
    t0 = time.perf_counter()
    p = ev.params
    u1, u2 = spin_to_u(u, s1, p)
    L1 = build_L(u1, u2, p, 0)
    sp2 = make_spin_ops(s2, p, coord=1)
    lbar2 = build_ellbar(v, sp2, p)
    R = yangbaxterize(u - v, s1, s2)
    L, N = grid
    res = exchange_residual(R, L1 @ lbar2, lbar2 @ L1, ev, grid, count)
    return finish_report(
        "rl-upper",
        "R(u-v) L_1(u) lbar_2(v) = lbar_2(v) L_1(u) R(u-v)",
        {"u": u, "v": v, "s1": s1, "s2": s2},
        {"L": L, "N": N, "states": count},
        res, tols["rll"], t0)


def check_yang_baxter(u=0.21, v=-0.13, spins=(0.4, 0.7, -0.3),
                      params=None, numerics=None, grid=R_GRID_COARSE,
                      count: int = 2):
    """Spectral Yang-Baxter on three coordinates for bbR = P R:
    bbR_23(v) bbR_13(u) bbR_12(u-v) = bbR_12(u-v) bbR_13(u) bbR_23(v)."""
    ev, tols = _ev_tols(params, numerics)
    t0 = time.perf_counter()
    s1, s2, s3 = spins
    r23 = build_R_permuted(v, s2, s3, 1, 2, 3)
    r13 = build_R_permuted(u, s1, s3, 0, 2, 3)
    r12 = build_R_permuted(u - v, s1, s2, 0, 1, 3)
    lhs = r23 * r13 * r12
    rhs = r12 * r13 * r23
    L, N = grid
    gstates = grid_panel(L, N, 3, ev, count=count)
    res = op_residual_grid(lhs, rhs, gstates, ev)
    tol = tols["yb_coarse"] if N <= 32 else tols["yb_fine"]
    return finish_report(
        "yang-baxter",
        "bbR_23(v) bbR_13(u) bbR_12(u-v) = bbR_12(u-v) bbR_13(u) bbR_23(v)",
        {"u": u, "v": v, "spins": spins}, {"L": L, "N": N, "states": count},
        res, tol, t0)


def product_pairing_residual(factors_a, factors_b, ev, grid, ncoords=3,
                             count: int = 2) -> float:
    """Residual of a product identity evaluated on matrix elements.

    Both sides are lists of operator factors, leftmost acting last.  Each
    matrix element <psi, F phi> is computed by transposing the leading
    factors onto the probe so that neither the source nor the probe carries
    a chain longer than half the product.  Every 1/gamma multiplier spreads
    the spectrum of whatever it acts on toward the band edge, and a third
    application on a 64-point axis would clip there; the split keeps each
    chain short, and the closing integral against a smooth state damps the
    band-edge content that a sup-norm comparison would amplify.
    """
    L, N = grid
    dv = (2.0 * L / N) ** ncoords
    states = gaussian_panel(ncoords, count + 1)

    def element(factors, phi_g, psi_g):
        k = (len(factors) + 1) // 2
        for op in factors[:k]:
            psi_g = op.transpose().apply_grid(psi_g, ev)
        for op in reversed(factors[k:]):
            phi_g = op.apply_grid(phi_g, ev)
        return np.sum(psi_g.values * phi_g.values) * dv

    worst = 0.0
    for m in range(count):
        phi = to_grid(states[m], L, N, ncoords, ev)
        psi = to_grid(states[m + 1], L, N, ncoords, ev)
        va = element(factors_a, phi, psi)
        vb = element(factors_b, phi, psi)
        worst = max(worst, abs(va - vb) / max(abs(va), abs(vb)))
    return worst


def check_YB0(spins=(0.4, 0.7, -0.3), params=None, numerics=None,
              grid=R_GRID_FINE, count: int = 2):
    """Spectral-free Yang-Baxter for the universal R."""
    ev, tols = _ev_tols(params, numerics)
    t0 = time.perf_counter()
    s1, s2, s3 = spins
    r23 = build_universal_R(s2, s3, 1, 2, 3)
    r13 = build_universal_R(s1, s3, 0, 2, 3)
    r12 = build_universal_R(s1, s2, 0, 1, 3)
    res = product_pairing_residual(
        [r23, r13, r12], [r12, r13, r23], ev, grid, count=count)
    return finish_report(
        "yb0", "R_23 R_13 R_12 = R_12 R_13 R_23",
        {"spins": spins}, {"L": grid[0], "N": grid[1], "states": count},
        res, tols["yb_fine"], t0)


def check_universal_translation(s1=0.4, s2=0.7, shift=0.35,
                                params=None, numerics=None,
                                grid=DEFAULT_GRID, count: int = 2):
    """The universal R commutes with simultaneous translation of both
    coordinates (finite-shift form of [R, p_1 + p_2] = 0)."""
    ev, tols = _ev_tols(params, numerics)
    t0 = time.perf_counter()
    r0 = build_universal_R(s1, s2)
    T = FDOperator.of(PShift(0, shift), PShift(1, shift))
    L, N = grid
    gstates = grid_panel(L, N, 2, ev, count=count)
    res = op_residual_grid(T * r0, r0 * T, gstates, ev)
    return finish_report(
        "r-translation",
        "exp(2 pi i a (p_1+p_2)) R = R exp(2 pi i a (p_1+p_2))",
        {"s1": s1, "s2": s2, "a": shift}, {"L": L, "N": N, "states": count},
        res, tols["scalar"], t0)


def check_spectral_orbit(u=0.3, s1=0.4, s2=0.7, params=None, numerics=None,
                         grid=DEFAULT_GRID, count: int = 2):
    """One-sided momentum similarity of the universal R reproduces its
    closed spectral form:
    exp(-2 pi i u p_1) R exp(2 pi i u p_1) = exp(4 pi i u^2) R(u)."""
    ev, tols = _ev_tols(params, numerics)
    t0 = time.perf_counter()
    lhs = yangbaxterize(u, s1, s2)
    rhs = universal_R_at(u, s1, s2)
    L, N = grid
    gstates = grid_panel(L, N, 2, ev, count=count)
    res = op_residual_grid(lhs, rhs, gstates, ev)
    return finish_report(
        "r-spectral-orbit",
        "exp(-2 pi i u p_1) R exp(2 pi i u p_1) = R(u)",
        {"u": u, "s1": s1, "s2": s2}, {"L": L, "N": N, "states": count},
        res, tols["operator1"], t0)


def check_reduction(u=0.3, s1=0.4, s2=0.7, vs=(1.0, 2.0, 4.0),
                    params=None, numerics=None, grid=(8.0, 256),
                    count: int = 2):
    """Large-shift reduction of P R to the universal R: the residual must
    shrink as the shift grows and end below the fine tolerance."""
    ev, tols = _ev_tols(params, numerics)
    t0 = time.perf_counter()
    series = reduction_series(u, s1, s2, vs, ev, grid, count)
    residuals = [r for _, r in series]
    monotone = all(residuals[k + 1] <= residuals[k] * 1.5 + 5e-14
                   for k in range(len(residuals) - 1))
    L, N = grid
    rep = finish_report(
        "reduction-r",
        "exp(4 pi i (u+v)^2) exp(2 pi i v p_1) P R(u+v) exp(-2 pi i v p_1) "
        "-> R(u) as v -> +inf",
        {"u": u, "s1": s1, "s2": s2, "vs": vs},
        {"L": L, "N": N, "states": count},
        residuals[-1], tols["yb_fine"], t0,
        note="sweep " + ", ".join(f"v={v:g}: {r:.3e}" for v, r in series))
    if not monotone:
        rep.passed = False
        rep.note += " [not decreasing]"
    return rep


def check_Rrr(u=0.21, v=-0.13, spins=(0.4, 0.7, -0.3),
              params=None, numerics=None, grid=R_GRID_FINE,
              count: int = 2):
    """Mixed Yang-Baxter: the full two-site operator in one channel against
    universal R factors in the other two:
    bbR_23(v) R_13(u) R_12(u-v) = R_12(u-v) R_13(u) bbR_23(v)."""
    ev, tols = _ev_tols(params, numerics)
    t0 = time.perf_counter()
    s1, s2, s3 = spins
    bb23 = build_R_permuted(v, s2, s3, 1, 2, 3)
    r13 = yangbaxterize(u, s1, s3, 0, 2, 3)
    r12 = yangbaxterize(u - v, s1, s2, 0, 1, 3)
    res = product_pairing_residual(
        [bb23, r13, r12], [r12, r13, bb23], ev, grid, count=count)
    tol = tols["yb_coarse"] if grid[1] <= 32 else tols["yb_fine"]
    return finish_report(
        "yang-baxter-mixed",
        "bbR_23(v) R_13(u) R_12(u-v) = R_12(u-v) R_13(u) bbR_23(v)",
        {"u": u, "v": v, "spins": spins},
        {"L": grid[0], "N": grid[1], "states": count},
        res, tol, t0)
