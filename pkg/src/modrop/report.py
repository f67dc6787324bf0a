"""Relation reports and the shared desk-scale fixtures.

Every identity check in the package produces a RelationReport: the
relation's id, the identity it certifies in plain notation, the
parameter and grid records, the relative residual, and the verdict.
The fixtures below (Gaussian panel, point sets, residual metrics) are
shared by the checks and the test suite so that numbers quoted in
reports and in tests are the same numbers.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from .states import GridData, eval_many, interior_mask, make_gaussian, to_grid


def format_complex(z) -> str:
    """Render a complex number as "re+imi" (no spaces), reals as "re"."""
    z = complex(z)
    if z.imag == 0.0:
        return repr(z.real)
    sign = "+" if z.imag >= 0 else "-"
    return f"{z.real!r}{sign}{abs(z.imag)!r}i"


def parse_complex(text: str) -> complex:
    """Parse "a+bi" / "a-bi" / "a" / "bi" literals (no spaces)."""
    s = text.strip()
    if not s:
        raise ValueError("empty complex literal")
    if s.endswith(("i", "I", "j", "J")):
        s = s[:-1] + "j"
        try:
            return complex(s)
        except ValueError as exc:
            raise ValueError(f"bad complex literal {text!r}") from exc
    try:
        return complex(float(s))
    except ValueError as exc:
        raise ValueError(f"bad complex literal {text!r}") from exc


def _jsonable(v):
    if isinstance(v, complex):
        return format_complex(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (tuple, list)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


@dataclass
class RelationReport:
    """Outcome of one verified identity; pass iff residual <= tolerance."""
    relation_id: str
    anchor: str
    params: dict
    grid: dict
    residual: float
    tolerance: float
    passed: bool
    wall_time_ms: float
    note: str = ""

    def as_dict(self) -> dict:
        d = asdict(self)
        d["params"] = _jsonable(self.params)
        d["grid"] = _jsonable(self.grid)
        return d

    def line(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        return (f"{verdict:4s}  {self.relation_id:28s} "
                f"residual {self.residual:.3e}  tol {self.tolerance:.1e}  "
                f"{self.wall_time_ms:8.1f} ms")


def finish_report(relation_id: str, anchor: str, params: dict, grid: dict,
                  residual: float, tolerance: float, t0: float,
                  note: str = "") -> RelationReport:
    residual = float(residual)
    return RelationReport(
        relation_id=relation_id, anchor=anchor, params=params, grid=grid,
        residual=residual, tolerance=float(tolerance),
        passed=bool(residual <= tolerance),
        wall_time_ms=1000.0 * (time.perf_counter() - t0), note=note)


# -- shared fixtures ---------------------------------------------------------

# one fixed panel of Gaussian profiles exp(alpha x^2 + beta x); each
# coordinate of a multi-coordinate state cycles through the panel with an
# offset so no two coordinates carry the same profile
PANEL = ((-math.pi, 0.0), (-2.0, 0.3 + 0.1j), (-1.5, -0.4))


def gaussian_panel(ncoords: int = 1, count: int = 3):
    out = []
    for base in range(count):
        al, be = [], []
        for k in range(ncoords):
            a, b = PANEL[(base + k) % len(PANEL)]
            al.append(a)
            be.append(b)
        out.append(make_gaussian(al, be))
    return out


def point_set(ncoords: int = 1, n: int = 7, half: float = 1.3) -> np.ndarray:
    ax = np.linspace(-half, half, n)
    if ncoords == 1:
        return ax
    grids = np.meshgrid(*([ax] * ncoords), indexing="ij")
    return np.stack(grids, axis=-1).reshape(-1, ncoords)


def grid_panel(L: float, N: int, ncoords: int, ev, count: int = 3):
    return [to_grid(st, L, N, ncoords, ev)
            for st in gaussian_panel(ncoords, count)]


# -- residual metrics --------------------------------------------------------
# All identity residuals are relative: per test state, the per-entry sup
# (trees) or interior L^2 (grids) of LHS-RHS is normalized by the largest
# entry scale of either side.  Per-entry normalization would blow up on
# entries that legitimately converge to zero.

def residual_tree(pairs_by_state) -> float:
    worst = 0.0
    for pairs in pairs_by_state:
        sc = max(max(np.abs(a).max(), np.abs(b).max()) for a, b in pairs)
        sc = max(sc, 1e-300)
        diff = max(np.abs(a - b).max() for a, b in pairs)
        worst = max(worst, diff / sc)
    return worst


def mat_residual_tree(A, B, states, pts, ev) -> float:
    by_state = []
    n, m = A.shape
    for st in states:
        pairs = []
        for i in range(n):
            for j in range(m):
                va = eval_many(A.rows[i][j].apply(st, ev), pts, ev)
                vb = eval_many(B.rows[i][j].apply(st, ev), pts, ev)
                pairs.append((va, vb))
        by_state.append(pairs)
    return residual_tree(by_state)


def op_residual_tree(a_op, b_op, states, pts, ev) -> float:
    by_state = []
    for st in states:
        va = eval_many(a_op.apply(st, ev), pts, ev)
        vb = eval_many(b_op.apply(st, ev), pts, ev)
        by_state.append([(va, vb)])
    return residual_tree(by_state)


def residual_grid(pairs_by_state, mask) -> float:
    """Interior relative L^2, normalized by the largest entry norm."""
    worst = 0.0
    for pairs in pairs_by_state:
        num = 0.0
        den = 1e-300
        for a, b in pairs:
            da, db = a[mask], b[mask]
            num = max(num, float(np.linalg.norm(da - db)))
            den = max(den, float(np.linalg.norm(da)),
                      float(np.linalg.norm(db)))
        worst = max(worst, num / den)
    return worst


def mat_residual_grid(A, B, gstates, ev, window=None) -> float:
    by_state = []
    mask = None
    n, m = A.shape
    for g in gstates:
        if mask is None:
            mask = interior_mask(g, window)
        pairs = []
        for i in range(n):
            for j in range(m):
                va = A.rows[i][j].apply_grid(g, ev).values
                vb = B.rows[i][j].apply_grid(g, ev).values
                pairs.append((va, vb))
        by_state.append(pairs)
    return residual_grid(by_state, mask)


def op_residual_grid(a_op, b_op, gstates, ev, window=None) -> float:
    by_state = []
    mask = None
    for g in gstates:
        if mask is None:
            mask = interior_mask(g, window)
        va = a_op.apply_grid(g, ev).values
        vb = b_op.apply_grid(g, ev).values
        by_state.append([(va, vb)])
    return residual_grid(by_state, mask)


def annihilation_residual(op, states, pts, ev) -> float:
    """Residual of `op state = 0`, scaled by the largest single term.

    A plain relative residual is meaningless against an exact zero; the
    honest scale is the size of the cancellation, so each term of the
    operator is evaluated separately and the sup of the sum is divided by
    the sup over the individual terms.
    """
    worst = 0.0
    for st in states:
        parts = [c * eval_many([(1.0, tree)], pts, ev)
                 for c, tree in op.apply(st, ev)]
        if not parts:
            continue
        total = np.sum(parts, axis=0)
        scale = max(float(np.abs(p).max()) for p in parts)
        worst = max(worst, float(np.abs(total).max()) / max(scale, 1e-300))
    return worst


def _sample_applied(op, state, L, N, ev):
    """Sample an operator applied to a state tree on an N x N grid.

    The tree route evaluates each term in closed form, so the samples keep
    full relative accuracy even where the state has decayed far below the
    scale of its peak.  That property is what the exchange checks lean on:
    a grid transport of the same chain would leave a flat noise floor that
    the exponential entry multipliers then blow up at the edges.
    """
    acc = None
    for c, tree in op.apply(state, ev):
        vals = to_grid(tree, L, N, 2, ev).values
        acc = c * vals if acc is None else acc + c * vals
    if acc is None:
        acc = np.zeros((N, N), dtype=complex)
    return acc


def exchange_residual(R, A, B, ev, grid, count: int = 2):
    """Residual of the exchange identity R A = B R on matrix elements.

    A and B are matrices whose entries mix coordinate shifts and
    exponential multipliers; their grid transport amplifies the spectral
    noise floor beyond any useful tolerance, and their tree transport would
    place convolutions inside imaginary shifts, stepping across poles of
    the multipliers in between.  Pairing against a probe state avoids both:
    A is applied symbolically to the source state, B is transposed onto the
    probe state, and only the scalar factor R, built entirely from bounded
    position and momentum multipliers, runs on the grid.  Per source/probe
    pair the residual is the largest entrywise mismatch of

        <psi, R (A[i][j] phi)>  vs  <B^T[j][i] psi, R phi>

    relative to the largest element magnitude.
    """
    L, N = grid
    dv = (2.0 * L / N) ** 2
    states = gaussian_panel(2, count + 1)
    Bt = B.transpose()
    n, m = A.shape
    worst = 0.0
    for k in range(count):
        phi, psi = states[k], states[k + 1]
        psig = to_grid(psi, L, N, 2, ev).values
        rphi = R.apply_grid(to_grid(phi, L, N, 2, ev), ev).values
        num = den = 0.0
        for i in range(n):
            for j in range(m):
                ga = GridData(L, _sample_applied(A.rows[i][j], phi, L, N, ev))
                va = np.sum(psig * R.apply_grid(ga, ev).values) * dv
                gb = _sample_applied(Bt.rows[j][i], psi, L, N, ev)
                vb = np.sum(gb * rphi) * dv
                num = max(num, abs(va - vb))
                den = max(den, abs(va), abs(vb))
        worst = max(worst, num / den)
    return worst
