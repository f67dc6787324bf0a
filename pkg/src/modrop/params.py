"""Modular parametrization and shared numeric configuration.

Everything downstream is driven by a single positive scale b through
omega = i*b/2 and omega' = i/(2b), so omega*omega' = -1/4 exactly.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field, replace


@dataclass(frozen=True)
class ModularParams:
    """The two quasi-periods and every constant derived from them."""

    b: float
    omega: complex
    omega_prime: complex
    omega_dp: complex        # omega'' = omega + omega'
    beta: complex            # (pi/12) * (omega/omega' + omega'/omega)
    q: complex               # exp(i*pi*omega'/omega)
    q_tilde: complex         # exp(i*pi*omega/omega')
    tau: complex             # omega'/omega


@dataclass(frozen=True)
class NumericsConfig:
    """Quadrature, grid and tolerance knobs shared by all evaluators.

    contour_lift and truncation default to scale-aware values chosen in
    make_numerics; relation_tols maps a relation class to its tolerance.
    """

    quad_tol: float = 1e-12
    contour_lift: float = 0.36
    truncation: float = 50.0
    grid_halfwidth: float = 4.0
    grid_points: int = 256
    relation_tols: dict = field(default_factory=lambda: dict(DEFAULT_TOLS))
    # panel layout of the lifted contour: (panel width, nodes per panel)
    panel_width: float = 0.3
    panel_points: int = 32
    # momentum-kernel contour: half width, panel layout and the bump that
    # steers the path around the pinching pole pair
    conv_halfwidth: float = 6.0
    conv_panel_width: float = 0.5
    conv_panel_points: int = 10
    conv_bump: float = 0.25
    # spectral backend: frequencies above this are zeroed before a complex
    # shift is applied (noise amplification guard)
    spectral_cut: float = 3.0
    max_conv_depth: int = 3


DEFAULT_TOLS = {
    "scalar": 1e-8,
    "fourier": 1e-6,
    "generator": 1e-10,
    "operator1": 1e-6,
    "operator2": 1e-5,
    "rll": 1e-4,
    "yb_coarse": 1e-2,
    "yb_fine": 1e-3,
    "backend": 1e-6,
    "factorization": 1e-10,
    "exact": 0.0,
}


def make_params(b: float) -> ModularParams:
    """Build the parameter bundle for scale b > 0."""
    if not isinstance(b, (int, float)) or isinstance(b, bool):
        raise TypeError(f"b must be a real number, got {type(b).__name__}")
    b = float(b)
    if not math.isfinite(b) or b <= 0.0:
        raise ValueError(f"b must be positive and finite, got {b}")
    if b == 1.0:
        # coincident pole rows of the contour integrand; evaluation stays
        # defined but quadrature conditioning degrades
        warnings.warn("b = 1 makes the two pole rows coincide; expect "
                      "reduced quadrature accuracy", stacklevel=2)
    omega = 0.5j * b
    omega_prime = 0.5j / b
    tau = omega_prime / omega
    beta = (math.pi / 12.0) * (1.0 / tau + tau)
    return ModularParams(
        b=b,
        omega=omega,
        omega_prime=omega_prime,
        omega_dp=omega + omega_prime,
        beta=beta,
        q=cmath.exp(1j * math.pi * tau),
        q_tilde=cmath.exp(1j * math.pi / tau),
        tau=tau,
    )


def swap_omegas(p: ModularParams) -> ModularParams:
    """Exchange the two quasi-periods; omega'' and beta are fixed points."""
    return ModularParams(
        b=1.0 / p.b,
        omega=p.omega_prime,
        omega_prime=p.omega,
        omega_dp=p.omega_dp,
        beta=p.beta,
        q=p.q_tilde,
        q_tilde=p.q,
        tau=1.0 / p.tau,
    )


def make_numerics(b: float = 0.8, **overrides) -> NumericsConfig:
    """NumericsConfig with the contour lift scaled to the pole spacing."""
    lift = overrides.pop("contour_lift", None)
    if lift is None:
        lift = 0.45 * min(b, 1.0 / b)
    cfg = NumericsConfig(contour_lift=lift, **overrides)
    # the nearest nonzero pole row of the contour integrand sits at
    # 2*pi*min(b, 1/b) on the imaginary axis
    if not 0.0 < cfg.contour_lift < 2.0 * math.pi * min(b, 1.0 / b):
        raise ValueError(f"contour_lift {cfg.contour_lift} outside the "
                         f"pole-free band for b = {b}")
    if cfg.grid_points & (cfg.grid_points - 1):
        raise ValueError(f"grid_points must be a power of two, got "
                         f"{cfg.grid_points}")
    return cfg


def with_tol(cfg: NumericsConfig, **tols) -> NumericsConfig:
    merged = dict(cfg.relation_tols)
    merged.update(tols)
    return replace(cfg, relation_tols=merged)
