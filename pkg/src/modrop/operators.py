"""Finite-difference operator calculus with two interchangeable backends.

An operator is a formal sum of weighted primitive chains.  The primitives
are the moves the whole construction is built from:

* ``PShift(k, a)``      exp(2*pi*i*a*p_k), i.e. x_k -> x_k + a,
* ``PExpLin(k, c)``     multiplication by exp(c*x_k),
* ``PDMulX(a, cs, d)``  multiplication by D_a(sum cs[k]*x_k + d),
* ``PDMomentum(k, c)``  D_c(p_k), realized as a kernel convolution on the
                        tree backend and a spectral multiplier on grids,
* ``PFresnel(k, t)``    exp(t * d^2/dx_k^2) with imaginary t,
* ``PPermute(perm)``    coordinate relabeling,
* ``PGammaInvX(cs, d)`` multiplication by 1/gamma(sum cs[k]*x_k + d),
* ``PGammaInvP(k, s, d)`` the multiplier 1/gamma(s*p_k + d), grids only.

``FDOperator.apply`` wraps a state tree (exact, quadrature-backed);
``FDOperator.apply_grid`` pushes a sampled grid through FFT multipliers.
Keeping both routes alive is deliberate: every identity checked on one
backend can be cross-examined on the other.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .specfun import ConvergenceError, GammaEvaluator, get_evaluator, \
    _panel_nodes
from .states import DMul, EvalError, ExpLin, Fresnel, GridData, KernelConv, \
    Node, Permute, Scale, Shift, eval_many

_TWO_PI_I = 2j * math.pi


@dataclass(frozen=True)
class PShift:
    coord: int
    amount: complex


@dataclass(frozen=True)
class PExpLin:
    coord: int
    coeff: complex


@dataclass(frozen=True)
class PDMulX:
    a: complex
    coeffs: tuple
    const: complex = 0.0


@dataclass(frozen=True)
class PDMomentum:
    coord: int
    c: complex


@dataclass(frozen=True)
class PFresnel:
    coord: int
    t: complex


@dataclass(frozen=True)
class PPermute:
    perm: tuple


@dataclass(frozen=True)
class PGammaInvX:
    coeffs: tuple
    const: complex = 0.0


@dataclass(frozen=True)
class PGammaInvP:
    coord: int
    sign: int
    const: complex = 0.0


def fresnel_prim(coord: int, sign: int) -> PFresnel:
    """exp(-sign * i * pi * p_coord^2) as a primitive."""
    return PFresnel(coord, sign * 1j / (4.0 * math.pi))


# -- momentum kernel --------------------------------------------------------

def momentum_kernel(ev: GammaEvaluator, c: complex):
    """Contour nodes and fused weights for D_c(p) as a convolution.

    D_c(p) phi(x) = A(-omega''-c) * integral dw D_{-omega''-c}(w) phi(x-w),
    where the w-contour is the real axis bent by +/- i*eta near the two
    kernel poles at w = c and w = -c: above the first, below the second.
    That choice of sides is what continues the bounded-argument transform
    to real c.
    """
    cache = getattr(ev, "_momentum_cache", None)
    if cache is None:
        cache = {}
        ev._momentum_cache = cache
    c = complex(c)
    key = repr(c)
    if key in cache:
        return cache[key]

    p = ev.params
    ncfg = ev.numerics
    ak = -p.omega_dp - c
    rate = 2.0 * math.pi * (p.omega_dp.imag + c.imag)
    if rate < 0.3:
        raise ConvergenceError(
            f"momentum kernel for c={c} has tail rate {rate:.3f}; "
            f"Im(c) is too far below the axis")
    eta = ncfg.conv_bump
    if abs(c.imag) >= eta - 0.02:
        raise ConvergenceError(
            f"momentum kernel for c={c}: pole at height {c.imag:.3f} "
            f"cannot be separated by a bump of {eta}")

    # panels refined around the pole pair, coarser in the tails
    W = ncfg.conv_halfwidth
    ac = abs(c)
    if ac < 0.004:
        raise ConvergenceError(
            f"momentum kernel for c={c}: the w = +/-c pole pair pinches "
            f"the contour below quadrature resolution")
    cw = min(ac + 1.0, W - 1.0)
    fine = np.linspace(0.0, cw, max(2, int(math.ceil(cw / 0.15)) + 1))
    if ac < 0.35:
        # the contour threads the gap between the poles, of width ~2|c|;
        # panels near the origin must resolve that scale
        pw = min(0.4, max(4.0 * ac, 0.08))
        hp = min(max(ac / 2.0, 0.002), 0.15)
        pinch = np.linspace(0.0, pw, max(2, int(math.ceil(pw / hp)) + 1))
        fine = np.concatenate([pinch, fine[fine > pw]])
    coarse = np.linspace(cw, W,
                         max(2, int(math.ceil((W - cw) /
                                              ncfg.conv_panel_width)) + 1))
    un_c, wn_c = _panel_nodes(np.concatenate([-fine[::-1], fine[1:]]), 12)
    un_l, wn_l = _panel_nodes(-coarse[::-1], ncfg.conv_panel_points)
    un_r, wn_r = _panel_nodes(coarse, ncfg.conv_panel_points)
    u = np.concatenate([un_l, un_c, un_r])
    wu = np.concatenate([wn_l, wn_c, wn_r])

    s = 1.0 if c.real >= 0 else -1.0
    sig = max(abs(c) / 2.0, 0.2)
    bump = eta * s * np.tanh(u / sig)
    y = u + 1j * bump
    dy = wu * (1.0 + 1j * eta * s / (sig * np.cosh(u / sig) ** 2))
    kv = np.exp(ev.log_D(ak, y))
    kw = ev.eval_A(ak) * kv * dy
    cache[key] = (y, kw)
    return y, kw


def _wrap(prim, tree: Node, ev: GammaEvaluator) -> Node:
    if isinstance(prim, PShift):
        return Shift(tree, prim.coord, prim.amount)
    if isinstance(prim, PExpLin):
        return ExpLin(tree, prim.coord, prim.coeff)
    if isinstance(prim, PDMulX):
        return DMul(tree, prim.a, prim.coeffs, prim.const)
    if isinstance(prim, PDMomentum):
        if prim.c == 0:
            # D_0 = 1; the kernel contour would pinch the coincident
            # pole pair at w = 0
            return tree
        nodes, kw = momentum_kernel(ev, prim.c)
        return KernelConv(tree, prim.coord, nodes, kw,
                          tag=f"D_{prim.c}(p{prim.coord})")
    if isinstance(prim, PFresnel):
        return Fresnel(tree, prim.coord, prim.t)
    if isinstance(prim, PPermute):
        return Permute(tree, prim.perm)
    if isinstance(prim, (PGammaInvX, PGammaInvP)):
        raise EvalError(
            f"{type(prim).__name__} is a grid-only multiplier; "
            "use the spectral backend")
    raise TypeError(f"unknown primitive {prim!r}")


# -- the operator algebra ---------------------------------------------------

class FDOperator:
    """Formal sum of coefficient-weighted primitive chains.

    In a chain, the rightmost primitive acts first, matching how operator
    products are written.
    """
    __slots__ = ("terms",)

    def __init__(self, terms):
        self.terms = tuple((complex(c), tuple(ps)) for c, ps in terms)

    @staticmethod
    def identity() -> "FDOperator":
        return FDOperator([(1.0, ())])

    @staticmethod
    def zero() -> "FDOperator":
        return FDOperator([])

    @staticmethod
    def of(*prims, coeff=1.0) -> "FDOperator":
        return FDOperator([(coeff, tuple(prims))])

    def __mul__(self, other):
        if isinstance(other, FDOperator):
            return FDOperator([(c1 * c2, p1 + p2)
                               for c1, p1 in self.terms
                               for c2, p2 in other.terms])
        return FDOperator([(c * other, p) for c, p in self.terms])

    def __rmul__(self, other) -> "FDOperator":
        return FDOperator([(other * c, p) for c, p in self.terms])

    def __add__(self, other: "FDOperator") -> "FDOperator":
        return FDOperator(self.terms + other.terms)

    def __sub__(self, other: "FDOperator") -> "FDOperator":
        return self + (-other)

    def __neg__(self) -> "FDOperator":
        return FDOperator([(-c, p) for c, p in self.terms])

    def simplify(self) -> "FDOperator":
        acc: dict = {}
        order: list = []
        for c, p in self.terms:
            if p not in acc:
                acc[p] = 0.0
                order.append(p)
            acc[p] += c
        return FDOperator([(acc[p], p) for p in order if acc[p] != 0])

    def transpose(self) -> "FDOperator":
        """Transpose w.r.t. the bilinear pairing; chains reverse."""
        return FDOperator(
            [(c, tuple(transpose_prim(p) for p in reversed(ps)))
             for c, ps in self.terms])

    def apply(self, tree: Node, ev: Optional[GammaEvaluator] = None):
        """Return [(coeff, tree)] terms representing self acting on tree."""
        ev = ev if ev is not None else get_evaluator()
        out = []
        for c, prims in self.terms:
            t = tree
            for prim in reversed(prims):
                t = _wrap(prim, t, ev)
            out.append((c, t))
        return out

    def apply_terms(self, terms, ev: Optional[GammaEvaluator] = None):
        ev = ev if ev is not None else get_evaluator()
        out = []
        for c0, tree in terms:
            for c, t in self.apply(tree, ev):
                out.append((c0 * c, t))
        return out

    def eval(self, tree: Node, points, ev: Optional[GammaEvaluator] = None,
             memo: bool = True) -> np.ndarray:
        return eval_many(self.apply(tree, ev), points, ev, memo)

    def apply_grid(self, g: GridData, ev: Optional[GammaEvaluator] = None) \
            -> GridData:
        ev = ev if ev is not None else get_evaluator()
        acc = np.zeros_like(g.values)
        for c, prims in self.terms:
            cur = g.values
            for prim in reversed(prims):
                cur = _grid_prim(prim, cur, g.L, ev)
            acc = acc + c * cur
        return GridData(g.L, acc)

    # canonical form: sort commuting neighbors so syntactically different
    # but equal products compare equal
    def canonical(self) -> tuple:
        out = []
        for c, prims in self.simplify().terms:
            ps = list(prims)
            changed = True
            while changed:
                changed = False
                for i in range(len(ps) - 1):
                    a, b = ps[i], ps[i + 1]
                    if _sort_key(b) < _sort_key(a) and _commute(a, b):
                        ps[i], ps[i + 1] = b, a
                        changed = True
            out.append((repr(complex(c)), tuple(ps)))
        return tuple(sorted(out))

    def __repr__(self):
        return f"FDOperator({len(self.terms)} terms)"


def _coords_of(prim) -> frozenset:
    if isinstance(prim, (PShift, PExpLin, PDMomentum, PFresnel, PGammaInvP)):
        return frozenset((prim.coord,))
    if isinstance(prim, (PDMulX, PGammaInvX)):
        return frozenset(k for k, c in enumerate(prim.coeffs) if c != 0)
    return frozenset((-1,))


def _is_xmul(prim) -> bool:
    return isinstance(prim, (PExpLin, PDMulX, PGammaInvX))


def _is_pfun(prim) -> bool:
    return isinstance(prim, (PShift, PDMomentum, PFresnel, PGammaInvP))


def _commute(a, b) -> bool:
    if isinstance(a, PPermute) or isinstance(b, PPermute):
        return False
    if not (_coords_of(a) & _coords_of(b)):
        return True
    if _is_xmul(a) and _is_xmul(b):
        return True
    if _is_pfun(a) and _is_pfun(b):
        return True
    return False


def _sort_key(prim):
    return (type(prim).__name__, sorted(_coords_of(prim)), repr(prim))


def transpose_prim(prim):
    """Transpose of a primitive under the bilinear pairing int f g dx.

    Shifts reverse, the sign of a momentum argument flips (which leaves
    D_c(p_k) unchanged because D_c is even), coordinate multipliers are
    symmetric, and a relabeling transposes to its inverse.
    """
    if isinstance(prim, PShift):
        return PShift(prim.coord, -prim.amount)
    if isinstance(prim, PGammaInvP):
        return PGammaInvP(prim.coord, -prim.sign, prim.const)
    if isinstance(prim, PPermute):
        inv = [0] * len(prim.perm)
        for i, p in enumerate(prim.perm):
            inv[p] = i
        return PPermute(tuple(inv))
    return prim


class OperatorMatrix:
    """Matrix with FDOperator entries; composition is ordinary matmul."""

    def __init__(self, rows):
        self.rows = [list(r) for r in rows]
        self.shape = (len(self.rows), len(self.rows[0]))

    @staticmethod
    def identity(n: int = 2) -> "OperatorMatrix":
        return OperatorMatrix(
            [[FDOperator.identity() if i == j else FDOperator.zero()
              for j in range(n)] for i in range(n)])

    @staticmethod
    def diag(*ops) -> "OperatorMatrix":
        n = len(ops)
        return OperatorMatrix(
            [[ops[i] if i == j else FDOperator.zero() for j in range(n)]
             for i in range(n)])

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        n, k = self.shape
        k2, m = other.shape
        if k != k2:
            raise ValueError("shape mismatch")
        out = []
        for i in range(n):
            row = []
            for j in range(m):
                acc = FDOperator.zero()
                for t in range(k):
                    acc = acc + self.rows[i][t] * other.rows[t][j]
                row.append(acc)
            out.append(row)
        return OperatorMatrix(out)

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(
            [[a + b for a, b in zip(ra, rb)]
             for ra, rb in zip(self.rows, other.rows)])

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(
            [[a - b for a, b in zip(ra, rb)]
             for ra, rb in zip(self.rows, other.rows)])

    def __rmul__(self, scalar) -> "OperatorMatrix":
        return OperatorMatrix([[scalar * e for e in r] for r in self.rows])

    def scalar_mul(self, op: FDOperator) -> "OperatorMatrix":
        """Multiply every entry by a scalar operator (acting after)."""
        return OperatorMatrix([[op * e for e in r] for r in self.rows])

    def map(self, f) -> "OperatorMatrix":
        return OperatorMatrix([[f(e) for e in r] for r in self.rows])

    def simplify(self) -> "OperatorMatrix":
        return self.map(lambda e: e.simplify())

    def transpose(self) -> "OperatorMatrix":
        """Matrix transpose with entrywise operator transpose."""
        n, m = self.shape
        return OperatorMatrix(
            [[self.rows[i][j].transpose() for i in range(n)]
             for j in range(m)])


# -- grid backend ------------------------------------------------------------

def _grid_axis(N: int, L: float) -> np.ndarray:
    return -L + 2.0 * L * np.arange(N) / N


def _grid_prim(prim, vals: np.ndarray, L: float,
               ev: GammaEvaluator) -> np.ndarray:
    N = vals.shape[0]
    nd = vals.ndim
    ax = _grid_axis(N, L)

    if isinstance(prim, PShift):
        return _spectral_shift(vals, prim.coord, prim.amount, L,
                               ev.numerics.spectral_cut)

    if isinstance(prim, PExpLin):
        f = np.exp(prim.coeff * ax)
        return vals * _along(f, prim.coord, nd)

    if isinstance(prim, PFresnel):
        nu = np.fft.fftfreq(N, d=2.0 * L / N)
        mult = np.exp(-4.0 * math.pi ** 2 * prim.t * nu ** 2)
        F = np.fft.fft(vals, axis=prim.coord)
        return np.fft.ifft(F * _along(mult, prim.coord, nd), axis=prim.coord)

    if isinstance(prim, PDMomentum):
        nu = np.fft.fftfreq(N, d=2.0 * L / N)
        mult = _cached_multiplier(
            ev, ("dmom", repr(complex(prim.c))), N, L,
            lambda: np.exp(ev.log_D(prim.c, nu)))
        F = np.fft.fft(vals, axis=prim.coord)
        return np.fft.ifft(F * _along(mult, prim.coord, nd), axis=prim.coord)

    if isinstance(prim, PDMulX):
        f = lambda z: np.exp(ev.log_D(prim.a, z))
        return vals * _xcomb_mult(f, prim.coeffs, prim.const, ax, nd)

    if isinstance(prim, PGammaInvX):
        f = lambda z: np.exp(-ev.log_gamma(z))
        return vals * _xcomb_mult(f, prim.coeffs, prim.const, ax, nd)

    if isinstance(prim, PGammaInvP):
        nu = np.fft.fftfreq(N, d=2.0 * L / N)
        mult = _cached_multiplier(
            ev, ("ginv", prim.sign, repr(complex(prim.const))), N, L,
            lambda: np.exp(-ev.log_gamma(prim.sign * nu + prim.const)))
        F = np.fft.fft(vals, axis=prim.coord)
        return np.fft.ifft(F * _along(mult, prim.coord, nd), axis=prim.coord)

    if isinstance(prim, PPermute):
        if nd == 1:
            return vals
        return np.transpose(vals, axes=prim.perm)

    raise TypeError(f"unknown primitive {prim!r}")


def _along(vec: np.ndarray, axis: int, nd: int) -> np.ndarray:
    shp = [1] * nd
    shp[axis] = len(vec)
    return vec.reshape(shp)


def _spectral_shift(vals: np.ndarray, axis: int, a: complex, L: float,
                    cut: float) -> np.ndarray:
    N = vals.shape[axis]
    nu = np.fft.fftfreq(N, d=2.0 * L / N)
    ph = np.exp(_TWO_PI_I * a * nu)
    if a.imag != 0.0:
        # a complex shift amplifies high modes exponentially; everything
        # above the cut is noise for the states this backend handles
        ph = np.where(np.abs(nu) <= cut, ph, 0.0)
    F = np.fft.fft(vals, axis=axis)
    return np.fft.ifft(F * _along(ph, axis, vals.ndim), axis=axis)


def _cached_multiplier(ev: GammaEvaluator, tag, N: int, L: float,
                       make) -> np.ndarray:
    cache = getattr(ev, "_mult_cache", None)
    if cache is None:
        cache = {}
        ev._mult_cache = cache
    key = (tag, N, L)
    if key not in cache:
        cache[key] = make()
    return cache[key]


def _xcomb_mult(f, cs, const, ax: np.ndarray, nd: int) -> np.ndarray:
    """f evaluated on sum cs[k]*x_k + const, broadcast over nd grid axes."""
    N = len(ax)
    act = [k for k in range(min(len(cs), nd)) if cs[k] != 0]
    if not act:
        return f(np.array([const]))
    if len(act) == 1:
        k = act[0]
        return _along(f(cs[k] * ax + const), k, nd)
    if len(act) == 2:
        i, j = act
        if cs[j] == -cs[i]:
            # x_i - x_j takes only 2N-1 values on the grid; evaluate once
            # per distinct difference and scatter by index
            h = ax[1] - ax[0]
            k = np.arange(-(N - 1), N)
            dv = f(cs[i] * k * h + const)
            idx = np.arange(N)[:, None] - np.arange(N)[None, :] + (N - 1)
            m2 = dv[idx]
        else:
            E = cs[i] * ax[:, None] + cs[j] * ax[None, :] + const
            uq, inv = np.unique(E.ravel(), return_inverse=True)
            m2 = f(uq)[inv].reshape(N, N)
        shp = [1] * nd
        shp[i] = N
        shp[j] = N
        return m2.reshape(shp)
    E = const
    for k in act:
        E = E + cs[k] * _along(ax, k, nd)
    uq, inv = np.unique(np.asarray(E).ravel(), return_inverse=True)
    return f(uq)[inv].reshape(np.asarray(E).shape)


def grid_from_function(f, L: float, N: int, ncoords: int = 1) -> GridData:
    ax = _grid_axis(N, L)
    if ncoords == 1:
        return GridData(float(L), np.asarray(f(ax), dtype=complex))
    X1, X2 = np.meshgrid(ax, ax, indexing="ij")
    return GridData(float(L), np.asarray(f(X1, X2), dtype=complex))
