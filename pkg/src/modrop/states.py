"""State trees: symbolic wavefunctions and their numerical evaluation.

A state is a tree whose leaves are Gaussian profiles and whose interior
nodes record the primitive moves an operator can make:

* ``Shift``      argument translation (complex allowed),
* ``ExpLin``     multiplication by exp(c * x_k),
* ``Scale``      multiplication by a constant,
* ``DMul``       multiplication by D_a(<linear form in the coordinates>),
* ``KernelConv`` convolution against a precomputed kernel along a fixed
                 contour (this is how functions of momentum act),
* ``Fresnel``    the Gaussian integral operator exp(t * d^2/dx_k^2),
* ``Permute``    coordinate relabeling.

Evaluation walks the tree once per batch of sample points.  Every
convolution contributes one tensor axis; coordinates are carried in
factored form (a sum of one-axis vectors plus a constant) so that leaf
materialization and the gamma calls stay structured.  A DMul buried under
convolutions is evaluated through ``log_gamma_outer``, one matrix product
per gamma factor, instead of a dense pointwise pass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .specfun import GammaEvaluator, get_evaluator

_TWO_PI_I = 2j * math.pi


class EvalError(ValueError):
    """Tree cannot be evaluated as requested."""


class Node:
    """Base class; nodes are immutable after construction."""
    __slots__ = ()


@dataclass(frozen=True)
class Gaussian(Node):
    """exp(sum_k alpha_k x_k^2 + beta_k x_k + logc)."""
    alphas: tuple
    betas: tuple
    logc: complex = 0.0

    @property
    def ncoords(self) -> int:
        return len(self.alphas)


@dataclass(frozen=True)
class Shift(Node):
    child: Node
    coord: int
    amount: complex


@dataclass(frozen=True)
class ExpLin(Node):
    child: Node
    coord: int
    coeff: complex


@dataclass(frozen=True)
class Scale(Node):
    child: Node
    logfac: complex


@dataclass(frozen=True)
class DMul(Node):
    """Multiply by D_a(sum_k coeffs[k] x_k + const)."""
    child: Node
    a: complex
    coeffs: tuple
    const: complex = 0.0


@dataclass(frozen=True)
class Fresnel(Node):
    """exp(t * d^2/dx_coord^2); exact on the Gaussian family."""
    child: Node
    coord: int
    t: complex


@dataclass(frozen=True)
class Permute(Node):
    """(P phi)(x_0, ..) = phi(x_perm[0], ..)."""
    child: Node
    perm: tuple


class KernelConv(Node):
    """(K phi)(x) = sum_j weights[j] kvals[j] phi(.., x_coord - nodes[j], ..).

    ``nodes``/``weights`` discretize a fixed contour in the convolution
    variable; ``kvals`` are the kernel values on it.  All three are frozen
    at construction so repeated evaluations reuse identical data.
    """
    __slots__ = ("child", "coord", "nodes", "kweights", "neg_nodes", "tag")

    def __init__(self, child: Node, coord: int, nodes: np.ndarray,
                 kweights: np.ndarray, tag: str = ""):
        self.child = child
        self.coord = coord
        self.nodes = np.asarray(nodes, dtype=complex)
        self.kweights = np.asarray(kweights, dtype=complex)
        self.neg_nodes = -self.nodes
        self.tag = tag


def make_gaussian(alphas, betas, logc=0.0) -> Gaussian:
    alphas = tuple(complex(a) for a in np.atleast_1d(alphas))
    betas = tuple(complex(b) for b in np.atleast_1d(betas))
    if len(alphas) != len(betas):
        raise ValueError("alpha/beta length mismatch")
    return Gaussian(alphas, betas, complex(logc))


# -- coordinate expressions ------------------------------------------------

class _Expr:
    """const + sum of (axis id -> one-axis vector)."""
    __slots__ = ("terms", "const")

    def __init__(self, terms: dict, const: complex):
        self.terms = terms
        self.const = const

    def shifted(self, a: complex) -> "_Expr":
        return _Expr(self.terms, self.const + a)

    def with_axis(self, axid: int, vec: np.ndarray) -> "_Expr":
        t = dict(self.terms)
        t[axid] = vec
        return _Expr(t, self.const)

    def fingerprint(self):
        return (repr(self.const),
                tuple(sorted((k, id(v)) for k, v in self.terms.items())))


def _materialize(expr: _Expr, axes) -> np.ndarray:
    shape = tuple(s for _, s in axes)
    order = [a for a, _ in axes]
    out = np.full(shape, expr.const, dtype=complex)
    for axid, vec in expr.terms.items():
        pos = order.index(axid)
        shp = [1] * len(shape)
        shp[pos] = len(vec)
        out = out + vec.reshape(shp)
    return out


class _Ctx:
    def __init__(self, ev: GammaEvaluator, memo: bool):
        self.ev = ev
        self.memo: Optional[dict] = {} if memo else None
        self.next_axis = 1
        self.depth: dict = {}
        self.max_depth = ev.numerics.max_conv_depth


def _linear_combo(coords, coeffs, const) -> _Expr:
    terms: dict = {}
    tot = complex(const)
    for c, e in zip(coeffs, coords):
        if c == 0:
            continue
        tot += c * e.const
        for axid, vec in e.terms.items():
            prev = terms.get(axid)
            terms[axid] = c * vec if prev is None else prev + c * vec
    return _Expr(terms, tot)


def _log_D_on(ev: GammaEvaluator, a: complex, expr: _Expr, axes) -> np.ndarray:
    dense = _materialize(expr, axes)
    total = dense.size
    multi = [k for k in expr.terms if k != 0]
    if len(axes) >= 2 and total > 20000 and multi:
        # split off the largest convolution axis and do the two gamma
        # factors as matrix products over the shared contour
        sizes = {a_id: s for a_id, s in axes}
        q_ax = max(multi, key=lambda k: sizes[k])
        q_pos = [a_id for a_id, _ in axes].index(q_ax)
        rest_axes = [(a_id, s) for a_id, s in axes if a_id != q_ax]
        p_expr = _Expr({k: v for k, v in expr.terms.items() if k != q_ax},
                       expr.const)
        P = _materialize(p_expr, rest_axes).ravel()
        Q = expr.terms[q_ax]
        lg = (ev.log_gamma_outer(P + a, Q)
              - ev.log_gamma_outer(P - a, Q))
        lg = lg.reshape([s for _, s in rest_axes] + [len(Q)])
        lg = np.moveaxis(lg, -1, q_pos)
    else:
        lg = ev.log_gamma(dense + a) - ev.log_gamma(dense - a)
    return -_TWO_PI_I * a * dense + lg


def _eval(node: Node, coords, axes, ctx: _Ctx) -> np.ndarray:
    if ctx.memo is not None:
        key = (id(node), tuple(e.fingerprint() for e in coords),
               tuple(a for a, _ in axes))
        hit = ctx.memo.get(key)
        if hit is not None:
            return hit
    val = _eval_inner(node, coords, axes, ctx)
    if ctx.memo is not None:
        ctx.memo[key] = val
    return val


def _eval_inner(node: Node, coords, axes, ctx: _Ctx) -> np.ndarray:
    if isinstance(node, Gaussian):
        if node.ncoords != len(coords):
            raise EvalError(f"leaf has {node.ncoords} coordinates, "
                            f"evaluation supplies {len(coords)}")
        shape = tuple(s for _, s in axes)
        acc = np.full(shape, node.logc, dtype=complex)
        for al, be, e in zip(node.alphas, node.betas, coords):
            E = _materialize(e, axes)
            acc = acc + al * E * E + be * E
        return np.exp(acc)

    if isinstance(node, Shift):
        cs = list(coords)
        cs[node.coord] = cs[node.coord].shifted(node.amount)
        return _eval(node.child, tuple(cs), axes, ctx)

    if isinstance(node, ExpLin):
        V = _eval(node.child, coords, axes, ctx)
        E = _materialize(coords[node.coord], axes)
        return V * np.exp(node.coeff * E)

    if isinstance(node, Scale):
        return _eval(node.child, coords, axes, ctx) * np.exp(node.logfac)

    if isinstance(node, Permute):
        cs = tuple(coords[p] for p in node.perm)
        return _eval(node.child, cs, axes, ctx)

    if isinstance(node, DMul):
        V = _eval(node.child, coords, axes, ctx)
        expr = _linear_combo(coords, node.coeffs, node.const)
        return V * np.exp(_log_D_on(ctx.ev, node.a, expr, axes))

    if isinstance(node, KernelConv):
        d = ctx.depth.get(node.coord, 0) + 1
        if d > ctx.max_depth:
            raise EvalError(
                f"convolution depth {d} on coordinate {node.coord} exceeds "
                f"the limit {ctx.max_depth}")
        ctx.depth[node.coord] = d
        axid = ctx.next_axis
        ctx.next_axis += 1
        cs = list(coords)
        cs[node.coord] = cs[node.coord].with_axis(axid, node.neg_nodes)
        V = _eval(node.child, tuple(cs), axes + [(axid, len(node.nodes))],
                  ctx)
        ctx.depth[node.coord] = d - 1
        return V @ node.kweights

    if isinstance(node, Fresnel):
        return _eval(_push_fresnel(node.t, node.coord, node.child),
                     coords, axes, ctx)

    raise EvalError(f"unknown node type {type(node).__name__}")


def _push_fresnel(t: complex, coord: int, node: Node) -> Node:
    """Eliminate exp(t d^2) by commuting it down to the Gaussian leaves."""
    if isinstance(node, Gaussian):
        al = node.alphas[coord]
        be = node.betas[coord]
        g = 1.0 / (1.0 - 4.0 * t * al)
        if g == 0 or not np.isfinite(g):
            raise EvalError("fresnel hits a degenerate Gaussian width")
        alphas = node.alphas[:coord] + (g * al,) + node.alphas[coord + 1:]
        betas = node.betas[:coord] + (g * be,) + node.betas[coord + 1:]
        logc = node.logc + t * g * be * be + 0.5 * np.log(g)
        return Gaussian(alphas, betas, logc)
    if isinstance(node, Shift):
        return Shift(_push_fresnel(t, coord, node.child), node.coord,
                     node.amount)
    if isinstance(node, Scale):
        return Scale(_push_fresnel(t, coord, node.child), node.logfac)
    if isinstance(node, ExpLin):
        if node.coord != coord:
            return ExpLin(_push_fresnel(t, coord, node.child), node.coord,
                          node.coeff)
        # exp(t d^2) exp(c x) = exp(t c^2) exp(c x) exp(2 t c d) exp(t d^2)
        c = node.coeff
        inner = Shift(_push_fresnel(t, coord, node.child), coord, 2.0 * t * c)
        return Scale(ExpLin(inner, coord, c), t * c * c)
    if isinstance(node, Fresnel):
        if node.coord == coord:
            return _push_fresnel(t + node.t, coord, node.child)
        return _push_fresnel(node.t, node.coord,
                             _push_fresnel(t, coord, node.child))
    if isinstance(node, Permute):
        return Permute(_push_fresnel(t, node.perm.index(coord), node.child),
                       node.perm)
    if isinstance(node, DMul):
        if node.coeffs[coord] == 0:
            return DMul(_push_fresnel(t, coord, node.child), node.a,
                        node.coeffs, node.const)
        raise EvalError("fresnel does not commute with a D factor on the "
                        "same coordinate")
    if isinstance(node, KernelConv):
        if node.coord != coord:
            return KernelConv(_push_fresnel(t, coord, node.child),
                              node.coord, node.nodes, node.kweights,
                              node.tag)
        raise EvalError("fresnel does not commute with a convolution on "
                        "the same coordinate")
    raise EvalError(f"fresnel cannot pass {type(node).__name__}")


def eval_state(node: Node, points, evaluator: Optional[GammaEvaluator] = None,
               memo: bool = True) -> np.ndarray:
    """Evaluate a state tree on a batch of points.

    ``points``: array (S, n) for an n-coordinate state, or (S,) when n = 1.
    Returns the complex values, shape (S,).
    """
    return eval_many([(1.0, node)], points, evaluator, memo)


def eval_many(terms, points, evaluator: Optional[GammaEvaluator] = None,
              memo: bool = True) -> np.ndarray:
    """Evaluate sum(coeff * tree) for a list of (coeff, tree) terms.

    All terms share one evaluation context, so identical subtrees reached
    with identical coordinate expressions are computed once.
    """
    ev = evaluator if evaluator is not None else get_evaluator()
    X = np.asarray(points, dtype=complex)
    if X.ndim == 1:
        X = X[:, None]
    S, n = X.shape
    ctx = _Ctx(ev, memo)
    coords = tuple(_Expr({0: X[:, i]}, 0.0) for i in range(n))
    out = np.zeros(S, dtype=complex)
    for coeff, tree in terms:
        if coeff == 0:
            continue
        out = out + coeff * _eval(tree, coords, [(0, S)], ctx)
    return out


# -- grids -----------------------------------------------------------------

@dataclass
class GridData:
    """Uniform periodic grid sample of a state on 1 to 3 coordinates.

    Points are x_k = -L + 2*L*k/N, k = 0..N-1, row-major in coordinate
    order.
    """
    L: float
    values: np.ndarray

    @property
    def ncoords(self) -> int:
        return self.values.ndim

    @property
    def N(self) -> int:
        return self.values.shape[0]

    def axis(self) -> np.ndarray:
        N = self.N
        return -self.L + 2.0 * self.L * np.arange(N) / N

    def freqs(self) -> np.ndarray:
        return np.fft.fftfreq(self.N, d=2.0 * self.L / self.N)

    def copy(self) -> "GridData":
        return GridData(self.L, self.values.copy())

    # binary format: all little-endian float64; header [n, L, N] then the
    # values row-major as (re, im) pairs
    def save_bin(self, path: str):
        head = np.array([self.ncoords, self.L, self.N], dtype="<f8")
        flat = np.ascontiguousarray(self.values, dtype=complex).ravel()
        pairs = np.empty(2 * flat.size, dtype="<f8")
        pairs[0::2] = flat.real
        pairs[1::2] = flat.imag
        with open(path, "wb") as fh:
            fh.write(head.tobytes())
            fh.write(pairs.tobytes())

    @staticmethod
    def load_bin(path: str) -> "GridData":
        raw = np.fromfile(path, dtype="<f8")
        if raw.size < 3:
            raise ValueError(f"{path}: truncated grid file")
        n, L, N = int(raw[0]), float(raw[1]), int(raw[2])
        if n not in (1, 2):
            raise ValueError(f"{path}: unsupported coordinate count {n}")
        body = raw[3:]
        want = 2 * N ** n
        if body.size != want:
            raise ValueError(f"{path}: expected {want} floats, "
                             f"found {body.size}")
        vals = body[0::2] + 1j * body[1::2]
        return GridData(L, vals.reshape((N,) * n))

    def save_csv(self, path: str):
        ax = self.axis()
        with open(path, "w") as fh:
            if self.ncoords == 1:
                fh.write("x,re,im\n")
                for x, v in zip(ax, self.values):
                    fh.write(f"{x!r},{v.real!r},{v.imag!r}\n")
            else:
                fh.write("x1,x2,re,im\n")
                for i, x1 in enumerate(ax):
                    for x2, v in zip(ax, self.values[i]):
                        fh.write(f"{x1!r},{x2!r},{v.real!r},{v.imag!r}\n")

    @staticmethod
    def load_csv(path: str) -> "GridData":
        rows = np.loadtxt(path, delimiter=",", skiprows=1, dtype=float,
                          ndmin=2)
        ncol = rows.shape[1]
        if ncol == 3:
            N = rows.shape[0]
            L = -rows[0, 0]
            return GridData(L, rows[:, 1] + 1j * rows[:, 2])
        if ncol == 4:
            N = int(round(math.sqrt(rows.shape[0])))
            if N * N != rows.shape[0]:
                raise ValueError(f"{path}: not a square grid")
            L = -rows[0, 0]
            vals = rows[:, 2] + 1j * rows[:, 3]
            return GridData(L, vals.reshape(N, N))
        raise ValueError(f"{path}: unsupported column count {ncol}")


def to_grid(node: Node, L: float, N: int, ncoords: int = 1,
            evaluator: Optional[GammaEvaluator] = None,
            memo: bool = True) -> GridData:
    ax = -L + 2.0 * L * np.arange(N) / N
    if ncoords == 1:
        vals = eval_state(node, ax, evaluator, memo)
        return GridData(float(L), vals)
    if ncoords in (2, 3):
        axes = np.meshgrid(*([ax] * ncoords), indexing="ij")
        pts = np.stack([a.ravel() for a in axes], axis=1)
        out = np.empty(pts.shape[0], dtype=complex)
        step = 8192
        for i in range(0, pts.shape[0], step):
            out[i:i + step] = eval_state(node, pts[i:i + step], evaluator,
                                         memo)
        return GridData(float(L), out.reshape((N,) * ncoords))
    raise ValueError("grids support one to three coordinates")


def interior_mask(g: GridData, window: Optional[float] = None) -> np.ndarray:
    w = 0.5 * g.L if window is None else window
    ax = np.abs(g.axis()) <= w
    nd = g.ncoords
    if nd == 1:
        return ax
    out = ax
    for k in range(1, nd):
        out = out[..., None] & ax
    return out


def state_distance(a: GridData, b: GridData,
                   window: Optional[float] = None) -> float:
    """Relative sup-distance on the interior window.

    The window keeps the comparison away from grid edges, where periodic
    wraparound and exponential prefactors are allowed to disagree.
    """
    if a.values.shape != b.values.shape or a.L != b.L:
        raise ValueError("grid shape mismatch")
    m = interior_mask(a, window)
    diff = float(np.max(np.abs(a.values[m] - b.values[m])))
    ref = float(np.max(np.abs(b.values[m])))
    return diff / max(ref, 1e-300)
