"""Generator representation of the paired quantum algebra.

One positive scale b produces two commuting (up to signs) copies of the
same algebra, exchanged by omega <-> omega'.  The representation acts on
functions of one coordinate by finite-difference operators:

    K_s = exp(-(i pi / 2 omega) p)
    e_s = exp(i pi x / omega) [ c * T(w') - c^{-1} * T(-w') ]
    f_s = exp(-i pi x / omega) [ c * T(-w') - c^{-1} * T(w') ]

with T(a) the shift x -> x + a, c = exp((i pi / 2 omega)(s + omega'')),
and e = (q - q^{-1}) E, f = (q - q^{-1}) F.  The second copy swaps the
roles of omega and omega'.  The spin s only enters through c; K is
spin-independent.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .params import ModularParams
from .operators import FDOperator, PDMomentum, PExpLin, PShift


@dataclass(frozen=True)
class SpinOps:
    """The generator set of one copy at fixed spin, as operators."""
    s: complex
    coord: int
    tilde: bool
    q: complex
    K: FDOperator
    Kinv: FDOperator
    e: FDOperator
    f: FDOperator
    E: FDOperator
    F: FDOperator
    casimir_value: complex


def make_spin_ops(s, params: ModularParams, coord: int = 0,
                  tilde: bool = False) -> SpinOps:
    s = complex(s)
    if tilde:
        w_loc = params.omega_prime
        shift = params.omega          # -1/(4 omega') = omega
        q = params.q_tilde
    else:
        w_loc = params.omega
        shift = params.omega_prime    # -1/(4 omega) = omega'
        q = params.q

    half = 1j * math.pi / (2.0 * w_loc)
    c = cmath.exp(half * (s + params.omega_dp))
    ex = PExpLin(coord, 1j * math.pi / w_loc)
    fx = PExpLin(coord, -1j * math.pi / w_loc)

    K = FDOperator.of(PShift(coord, shift))
    Kinv = FDOperator.of(PShift(coord, -shift))
    e = FDOperator([(c, (ex, PShift(coord, shift))),
                    (-1.0 / c, (ex, PShift(coord, -shift)))])
    f = FDOperator([(c, (fx, PShift(coord, -shift))),
                    (-1.0 / c, (fx, PShift(coord, shift)))])
    denom = q - 1.0 / q
    E = e * (1.0 / denom)
    F = f * (1.0 / denom)
    cas = 4.0 * cmath.cos(math.pi * s / (2.0 * w_loc)) ** 2
    return SpinOps(s, coord, tilde, q, K, Kinv, e, f, E, F, cas)


def casimir_op(ops: SpinOps) -> FDOperator:
    """-(q - q^{-1})^2 F E - q K^2 - q^{-1} K^{-2} + 2.

    The sign of the FE term is forced: f e = c^2 q^{-1} + c^{-2} q
    - q K^2 - q^{-1} K^{-2}, so only this combination is central.  On the
    spin-s representation it acts as the number 4 cos^2(pi s / 2 omega)
    (omega' in the tilde copy).
    """
    q = ops.q
    return (-(ops.f * ops.e)
            - q * (ops.K * ops.K)
            - (1.0 / q) * (ops.Kinv * ops.Kinv)
            + 2.0 * FDOperator.identity())


def intertwiner_W(s, coord: int = 0) -> FDOperator:
    """W = D_{-s}(p): carries the spin-s representation to spin -s."""
    return FDOperator.of(PDMomentum(coord, -complex(s)))


def intertwiner_W_inv(s, coord: int = 0) -> FDOperator:
    return FDOperator.of(PDMomentum(coord, complex(s)))


def commutator(a: FDOperator, b: FDOperator) -> FDOperator:
    return a * b - b * a


def anticommutator(a: FDOperator, b: FDOperator) -> FDOperator:
    return a * b + b * a


def algebra_relations(s, params: ModularParams, coord: int = 0):
    """All defining relations at spin s as (name, lhs-rhs) operator pairs.

    Every returned operator must annihilate arbitrary states.
    """
    g = make_spin_ops(s, params, coord, tilde=False)
    t = make_spin_ops(s, params, coord, tilde=True)
    out = []
    for tag, a in (("", g), ("tilde_", t)):
        q = a.q
        out.append((tag + "EF_commutator",
                    commutator(a.E, a.F)
                    - (1.0 / (q - 1.0 / q)) * (a.K * a.K - a.Kinv * a.Kinv)))
        out.append((tag + "KE", a.K * a.E - q * (a.E * a.K)))
        out.append((tag + "KF", a.K * a.F - (1.0 / q) * (a.F * a.K)))
    out.append(("cross_EE", commutator(g.E, t.E)))
    out.append(("cross_EF", commutator(g.E, t.F)))
    out.append(("cross_FE", commutator(g.F, t.E)))
    out.append(("cross_FF", commutator(g.F, t.F)))
    out.append(("cross_KtE", anticommutator(g.K, t.E)))
    out.append(("cross_KtF", anticommutator(g.K, t.F)))
    out.append(("cross_tKE", anticommutator(t.K, g.E)))
    out.append(("cross_tKF", anticommutator(t.K, g.F)))
    out.append(("cross_KK", commutator(g.K, t.K)))
    return out
