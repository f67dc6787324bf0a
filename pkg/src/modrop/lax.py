"""Lax matrices: full, factorized, reduced, and triangular degenerations.

The 2x2 matrix L(u1, u2) acts on functions of a single coordinate.  Its
entries combine the generator set at spin s = u1 - u2 with spectral
phases, and the same matrix factors into x-multiplier matrices around a
diagonal shift matrix,

    L(u1, u2) = M_{u2}(x) H(p) N_{u1}(x),

which is the form the reductions below degenerate from.  Every builder
takes a tilde flag selecting the partner frame (omega <-> omega').
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass

from .modouble import SpinOps, make_spin_ops
from .operators import (FDOperator, OperatorMatrix, PExpLin, PShift)
from .params import ModularParams


def _frame(params: ModularParams, tilde: bool):
    """Local frequency, its partner (= unit shift step), and q."""
    if tilde:
        return params.omega_prime, params.omega
    return params.omega, params.omega_prime


def spin_to_u(u, s, params: ModularParams, tilde: bool = False):
    """Parameter pair (u1, u2) for spectral parameter u and spin s."""
    w_loc, w_oth = _frame(params, tilde)
    d = 0.5 * (w_loc - w_oth)
    u, s = complex(u), complex(s)
    return u + 0.5 * s + d, u - 0.5 * s + d


def u_to_spin(u1, u2, params: ModularParams, tilde: bool = False):
    """Inverse of spin_to_u: (u, s) with s = u1 - u2."""
    w_loc, w_oth = _frame(params, tilde)
    d = 0.5 * (w_loc - w_oth)
    u1, u2 = complex(u1), complex(u2)
    return 0.5 * (u1 + u2) - d, u1 - u2


@dataclass(frozen=True)
class SpectralTuple:
    """The ordered parameter set (u2, u1, v2, v1) of a two-site product."""
    u2: complex
    u1: complex
    v2: complex
    v1: complex

    @staticmethod
    def from_physical(u, v, s1, s2, params: ModularParams,
                      tilde: bool = False) -> "SpectralTuple":
        u1, u2 = spin_to_u(u, s1, params, tilde)
        v1, v2 = spin_to_u(v, s2, params, tilde)
        return SpectralTuple(u2, u1, v2, v1)

    def to_physical(self, params: ModularParams, tilde: bool = False):
        """(u, v, s1, s2); exact round-trip with from_physical."""
        u, s1 = u_to_spin(self.u1, self.u2, params, tilde)
        v, s2 = u_to_spin(self.v1, self.v2, params, tilde)
        return u, v, s1, s2

    def as_seq(self):
        return (self.u2, self.u1, self.v2, self.v1)


def _xmul(coord: int, w_loc: complex, sign: int) -> FDOperator:
    """Multiplication by exp(sign * i pi x / w_loc)."""
    return FDOperator.of(PExpLin(coord, sign * 1j * cmath.pi / w_loc))


def build_H(params: ModularParams, coord: int = 0,
            tilde: bool = False) -> OperatorMatrix:
    """diag(exp(-(i pi/2w)(p - w'')), exp((i pi/2w)(p - w''))).

    exp(-(i pi/2w) p) is the shift by the partner frequency, so the
    matrix is a constant times a diagonal of shifts.
    """
    w_loc, w_oth = _frame(params, tilde)
    h = cmath.exp(1j * cmath.pi / (2.0 * w_loc) * params.omega_dp)
    up = FDOperator.of(PShift(coord, w_oth), coeff=h)
    dn = FDOperator.of(PShift(coord, -w_oth), coeff=1.0 / h)
    return OperatorMatrix.diag(up, dn)


def build_M(u, params: ModularParams, coord: int = 0,
            tilde: bool = False) -> OperatorMatrix:
    w_loc, _ = _frame(params, tilde)
    U = cmath.exp(0.5j * cmath.pi / w_loc * complex(u))
    X = _xmul(coord, w_loc, +1)
    one = FDOperator.identity()
    return OperatorMatrix([
        [U * one, (-1.0 / U) * one],
        [(-1.0 / U) * X, U * X],
    ])


def build_N(u, params: ModularParams, coord: int = 0,
            tilde: bool = False) -> OperatorMatrix:
    """N_u = (U^{-2} - U^2) M_u^{-1}, written out explicitly."""
    w_loc, _ = _frame(params, tilde)
    U = cmath.exp(0.5j * cmath.pi / w_loc * complex(u))
    Xm = _xmul(coord, w_loc, -1)
    one = FDOperator.identity()
    return OperatorMatrix([
        [-U * one, (1.0 / U) * Xm],
        [(-1.0 / U) * one, U * Xm],
    ])


def build_L(u1, u2, params: ModularParams, coord: int = 0,
            tilde: bool = False) -> OperatorMatrix:
    """Assemble L(u1, u2) directly from the generator set.

    [[ a K - a^{-1} K^{-1},  f ],
     [ e,  a K^{-1} - a^{-1} K ]]  with a = exp(i pi u / w_loc),
    u and s recovered from (u1, u2).
    """
    w_loc, _ = _frame(params, tilde)
    u, s = u_to_spin(u1, u2, params, tilde)
    ops = make_spin_ops(s, params, coord, tilde)
    a = cmath.exp(1j * cmath.pi / w_loc * u)
    return OperatorMatrix([
        [a * ops.K - (1.0 / a) * ops.Kinv, ops.f],
        [ops.e, a * ops.Kinv - (1.0 / a) * ops.K],
    ])


def build_L_factored(u1, u2, params: ModularParams, coord: int = 0,
                     tilde: bool = False) -> OperatorMatrix:
    """M_{u2}(x) H(p) N_{u1}(x); must agree with build_L entrywise."""
    M = build_M(u2, params, coord, tilde)
    H = build_H(params, coord, tilde)
    N = build_N(u1, params, coord, tilde)
    return (M @ H @ N).simplify()


def build_Lplus(u, params: ModularParams, coord: int = 0,
                tilde: bool = False) -> OperatorMatrix:
    """Limit of exp(-(i pi/2w) u2) L(u1, u2) as u2 -> +infinity."""
    w_loc, _ = _frame(params, tilde)
    one = FDOperator.identity()
    left = OperatorMatrix.diag(one, _xmul(coord, w_loc, +1))
    H = build_H(params, coord, tilde)
    N = build_N(u, params, coord, tilde)
    return (left @ H @ N).simplify()


def build_Lminus(u, params: ModularParams, coord: int = 0,
                 tilde: bool = False) -> OperatorMatrix:
    """Limit of exp(-(i pi/2w) u1) L(u1, u2) as u1 -> +infinity."""
    w_loc, _ = _frame(params, tilde)
    one = FDOperator.identity()
    M = build_M(u, params, coord, tilde)
    H = build_H(params, coord, tilde)
    right = OperatorMatrix.diag(-1.0 * one, _xmul(coord, w_loc, -1))
    return (M @ H @ right).simplify()


def build_ell(u, sp: SpinOps, params: ModularParams) -> OperatorMatrix:
    """Lower-triangular degeneration [[a K, 0], [e, a K^{-1}]]."""
    w_loc, _ = _frame(params, sp.tilde)
    a = cmath.exp(1j * cmath.pi / w_loc * complex(u))
    return OperatorMatrix([
        [a * sp.K, FDOperator.zero()],
        [sp.e, a * sp.Kinv],
    ])


def build_ellbar(u, sp: SpinOps, params: ModularParams) -> OperatorMatrix:
    """Upper-triangular degeneration [[a^{-1} K^{-1}, -f], [0, a^{-1} K]]."""
    w_loc, _ = _frame(params, sp.tilde)
    a = cmath.exp(1j * cmath.pi / w_loc * complex(u))
    return OperatorMatrix([
        [(1.0 / a) * sp.Kinv, -sp.f],
        [FDOperator.zero(), (1.0 / a) * sp.K],
    ])


def scalar_matrix(op: FDOperator, n: int = 2) -> OperatorMatrix:
    """op times the identity matrix; right-multiplication helper."""
    return OperatorMatrix.diag(*([op] * n))
