"""Vectorized verification core.

Everything expensive in the package funnels through here: perceived-effect
computation, best-reply tests, tremble ladders, best-response dynamics, and
pure-profile enumeration all operate on flat ``(batch..., 2, n_cells)``
strategy arrays so that batches of profiles (dynamics inits, enumeration
chunks, ladder rungs) ride one set of matrix products.

Index conventions
-----------------
Covariate cells are raveled C-order over ``x_cards``; each type's condition
and data cells are raveled C-order over that type's covariates in covariate
order.  ``CompiledType`` holds the cell-index maps and one-hot aggregation
matrices tying the three spaces together.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .causal import tie_tolerance
from .model import Scenario, StrategyProfile, TrembleSchedule

DEFAULT_LADDER_START = 0.1
DEFAULT_LADDER_RATIO = 0.5
DEFAULT_LADDER_FLOOR = 1e-6
DEFAULT_TAIL_MIN = 6

# Dynamics evaluates best replies under a tiny internal flip so that effects
# stay identified; large floors would contaminate interior mixing points.
BR_FLOOR = 1e-10
CONVERGENCE_TOL = 1e-10

# "Played with probability > eps" is tested with this much slack: schedules
# routinely place mass of exactly eps on a non-best reply, and 1-(1-eps)
# reproduces eps only up to roundoff.
PLAY_SLACK = 1e-12


def ladder_rungs(
    start: float = DEFAULT_LADDER_START,
    ratio: float = DEFAULT_LADDER_RATIO,
    floor: float | None = None,
) -> np.ndarray:
    """Strictly decreasing geometric noise levels down to the floor."""
    if floor is None:
        env = os.environ.get("BCI_LADDER_FLOOR")
        floor = float(env) if env else DEFAULT_LADDER_FLOOR
    if not 0 < floor <= start < 1 or not 0 < ratio < 1:
        raise ValueError("need 0 < floor <= start < 1 and ratio in (0,1)")
    out = []
    eps = start
    while eps >= floor:
        out.append(eps)
        eps *= ratio
    return np.array(out)


@dataclass
class CompiledType:
    nc: int
    nd: int
    c_cards: tuple[int, ...]
    x_to_c: np.ndarray  # (nx,) covariate cell -> condition cell
    agg_d: np.ndarray  # (nx, nd) one-hot: covariate cell -> data cell
    agg_c: np.ndarray  # (nd, nc) one-hot: data cell -> condition cell
    w_d: np.ndarray  # (nd,) adjustment weights p(x_D) / p(x_C), 0 off-support
    reachable: np.ndarray  # (nc,) bool
    tcm: np.ndarray  # (2, nc) taste-cell mass p(t, x_C)
    active: np.ndarray  # (2, nc) bool: tcm > 0


@dataclass
class CompiledScenario:
    scenario: Scenario
    nx: int
    ptx: np.ndarray  # (2, nx)
    kernel: np.ndarray  # (2, nx)
    lam: np.ndarray
    types: list[CompiledType]
    score_base: np.ndarray  # (2,) = beta - c, beta + c
    effect_weight: float  # 1 - beta


def _ravel_cells(cards: tuple[int, ...], coords: np.ndarray) -> np.ndarray:
    """Ravel rows of per-variable coordinates into flat cell indices."""
    if not cards:
        return np.zeros(coords.shape[0], dtype=np.int64)
    return np.ravel_multi_index(tuple(coords.T), cards).astype(np.int64)


def compile_scenario(scenario: Scenario) -> CompiledScenario:
    cards = tuple(scenario.x_cards)
    nx = int(np.prod(cards)) if cards else 1
    ptx = scenario.ptx.reshape(2, nx)
    kernel = scenario.kernel.reshape(2, nx)
    px = ptx.sum(axis=0)

    grid = np.indices(cards).reshape(len(cards), nx).T if cards else np.zeros((1, 0), int)
    compiled = []
    for i in range(scenario.n_types):
        c_axes = scenario.c_axes(i)
        d_axes = scenario.d_axes(i)
        c_cards = tuple(cards[k] for k in c_axes)
        d_cards = tuple(cards[k] for k in d_axes)
        nc = int(np.prod(c_cards)) if c_cards else 1
        nd = int(np.prod(d_cards)) if d_cards else 1
        x_to_c = _ravel_cells(c_cards, grid[:, list(c_axes)])
        x_to_d = _ravel_cells(d_cards, grid[:, list(d_axes)])
        # data cell -> condition cell (C ⊆ D, both in covariate order)
        d_grid = np.indices(d_cards).reshape(len(d_cards), nd).T if d_cards else np.zeros((1, 0), int)
        c_in_d = [d_axes.index(k) for k in c_axes]
        d_to_c = _ravel_cells(c_cards, d_grid[:, c_in_d])

        agg_d = np.zeros((nx, nd))
        agg_d[np.arange(nx), x_to_d] = 1.0
        agg_c = np.zeros((nd, nc))
        agg_c[np.arange(nd), d_to_c] = 1.0

        pd = px @ agg_d
        pc = pd @ agg_c
        pc_of_d = pc[d_to_c]
        w_d = np.divide(pd, pc_of_d, out=np.zeros_like(pd), where=pc_of_d > 0)
        tcm = ptx @ agg_d @ agg_c
        compiled.append(
            CompiledType(
                nc=nc,
                nd=nd,
                c_cards=c_cards,
                x_to_c=x_to_c,
                agg_d=agg_d,
                agg_c=agg_c,
                w_d=w_d,
                reachable=pc > 0,
                tcm=tcm,
                active=tcm > 0,
            )
        )
    beta, c = scenario.beta, scenario.c
    return CompiledScenario(
        scenario=scenario,
        nx=nx,
        ptx=ptx,
        kernel=kernel,
        lam=np.array(scenario.lam),
        types=compiled,
        score_base=np.array([beta - c, beta + c]),
        effect_weight=1.0 - beta,
    )


# -- profile layout ---------------------------------------------------------


def flatten_profile(cs: CompiledScenario, profile: StrategyProfile) -> list[np.ndarray]:
    """Per-type strategy arrays reshaped to (2, nc)."""
    profile.conforms(cs.scenario)
    return [
        np.asarray(sig, dtype=np.float64).reshape(2, ct.nc)
        for sig, ct in zip(profile.sigmas, cs.types)
    ]


def unflatten_profile(cs: CompiledScenario, flats: list[np.ndarray]) -> StrategyProfile:
    sigmas = []
    for flat, ct in zip(flats, cs.types):
        sigmas.append(np.asarray(flat, dtype=np.float64).reshape((2,) + ct.c_cards))
    return StrategyProfile(tuple(sigmas))


# -- trembles ---------------------------------------------------------------

_TARGET_NONE = -1
_TARGET_ZERO = 0
_TARGET_ONE = 1
_TARGET_FLIP = 2
_TARGET_UNIFORM = 3

_CODE_OF_DIRECTION = {0: _TARGET_ZERO, 1: _TARGET_ONE, "flip": _TARGET_FLIP, "uniform": _TARGET_UNIFORM}


@dataclass
class CompiledSchedule:
    """Tremble rules as arrays: one (exponent, target-code) pair per slice."""

    exponents: list[np.ndarray]  # per type: (..., 2) broadcastable to batch
    codes: list[np.ndarray]  # per type: (2,) ints

    @classmethod
    def from_schedule(cls, cs: CompiledScenario, schedule: TrembleSchedule) -> "CompiledSchedule":
        exps, codes = [], []
        for i in range(len(cs.types)):
            e = np.ones(2)
            k = np.full(2, _TARGET_NONE)
            for taste in (0, 1):
                spec = schedule.spec_for(i, taste)
                if spec is not None:
                    e[taste] = spec.exponent
                    k[taste] = _CODE_OF_DIRECTION[spec.direction]
            exps.append(e)
            codes.append(k)
        return cls(exps, codes)

    @property
    def is_empty(self) -> bool:
        return all((k == _TARGET_NONE).all() for k in self.codes)


def taste_weighted_schedule(cs: CompiledScenario, flats: list[np.ndarray]) -> CompiledSchedule:
    """Flip trembles that fade faster where the slice already matches taste.

    Slices whose majority action over active cells equals the taste get
    exponent 2 (second-order noise); others get exponent 1.  This mirrors the
    natural construction for taste-driven corner profiles, where the
    taste-matching side must tremble an order slower to keep the perceived
    effect alive.
    """
    exps, codes = [], []
    for flat, ct in zip(flats, cs.types):
        weights = np.where(ct.active, ct.tcm, 0.0)
        total = weights.sum(axis=-1, keepdims=True)
        share = np.divide(
            (flat * weights).sum(axis=-1, keepdims=True),
            total,
            out=np.full(flat.shape[:-1] + (1,), 0.5),
            where=total > 0,
        )[..., 0]
        majority = share >= 0.5  # (..., 2) per-taste majority action
        taste_axis = np.arange(2).reshape((1,) * (majority.ndim - 1) + (2,))
        exps.append(np.where(majority == (taste_axis == 1), 2.0, 1.0))
        codes.append(np.full(2, _TARGET_FLIP))
    return CompiledSchedule(exps, codes)


def apply_compiled_trembles(
    flats: list[np.ndarray], sched: CompiledSchedule, eps: np.ndarray
) -> list[np.ndarray]:
    """Trembled copies of per-type arrays at noise levels ``eps``.

    ``eps`` may be scalar or (R,); with (R,) the output gains a leading rung
    axis: (R, batch..., 2, nc).
    """
    eps = np.asarray(eps, dtype=np.float64)
    rung_shape = eps.shape  # () or (R,)
    out = []
    for flat, e, code in zip(flats, sched.exponents, sched.codes):
        has = code != _TARGET_NONE
        expanded_code = np.broadcast_to(code.reshape((2, 1)), flat.shape)
        tgt = np.where(expanded_code == _TARGET_ONE, 1.0, 0.0)
        tgt = np.where(expanded_code == _TARGET_UNIFORM, 0.5, tgt)
        tgt = np.where(expanded_code == _TARGET_FLIP, np.where(flat >= 0.5, 0.0, 1.0), tgt)
        e_full = np.broadcast_to(np.asarray(e)[..., None], flat.shape)
        eps_full = eps.reshape(rung_shape + (1,) * flat.ndim)
        m = np.minimum(eps_full**e_full, 1.0)
        m = np.where(np.broadcast_to(has.reshape((2, 1)), flat.shape), m, 0.0)
        out.append((1.0 - m) * flat + m * tgt)
    return out


def flip_floor(flats: list[np.ndarray], floor: float = BR_FLOOR) -> list[np.ndarray]:
    """Full-support copies: mix a hair of the opposite pure action everywhere."""
    return [
        (1.0 - floor) * flat + floor * np.where(flat >= 0.5, 0.0, 1.0) for flat in flats
    ]


# -- perceived effects and best replies ------------------------------------


def aggregate_flat(cs: CompiledScenario, flats: list[np.ndarray]) -> np.ndarray:
    """Population p(a=1 | t, x) over covariate cells, batch-aware."""
    out = 0.0
    for lam_i, flat, ct in zip(cs.lam, flats, cs.types):
        out = out + lam_i * flat[..., ct.x_to_c]
    return out


def type_effects(cs: CompiledScenario, ct: CompiledType, agg: np.ndarray):
    """Perceived effect and definedness per condition cell for one type.

    ``agg`` is p(a=1 | t, x) shaped (batch..., 2, nx).  Returns
    (delta, defined) shaped (batch..., nc); delta is 0 where undefined.
    """
    mass_a1 = (cs.ptx * agg).sum(axis=-2)  # (batch..., nx): p(a=1, x)
    mass_a0 = (cs.ptx * (1.0 - agg)).sum(axis=-2)
    ymass_a1 = (cs.ptx * cs.kernel * agg).sum(axis=-2)
    ymass_a0 = (cs.ptx * cs.kernel * (1.0 - agg)).sum(axis=-2)

    def belief(mass_x, ymass_x):
        mass_d = mass_x @ ct.agg_d
        ymass_d = ymass_x @ ct.agg_d
        cond = np.divide(ymass_d, mass_d, out=np.zeros_like(mass_d), where=mass_d > 0)
        missing = (ct.w_d > 0) & (mass_d <= 0)
        value = (ct.w_d * cond) @ ct.agg_c
        ok = (missing.astype(np.float64) @ ct.agg_c) == 0
        return value, ok

    b1, ok1 = belief(mass_a1, ymass_a1)
    b0, ok0 = belief(mass_a0, ymass_a0)
    defined = ok1 & ok0 & ct.reachable
    delta = np.where(defined, b1 - b0, 0.0)
    return delta, defined


def profile_effects(cs: CompiledScenario, flats: list[np.ndarray]):
    """Per-type (delta, defined) lists for a batch of profiles."""
    agg = aggregate_flat(cs, flats)
    return [type_effects(cs, ct, agg) for ct in cs.types]


def check_rungs(
    cs: CompiledScenario,
    trembled: list[np.ndarray],
    eps: np.ndarray,
    tie_tol: float,
):
    """Definition test for trembled profiles at matching noise thresholds.

    ``trembled`` arrays are (R, batch..., 2, nc); ``eps`` is (R,).  Returns
    (ok, undef, max_violation) shaped (R, batch...): ok means every action
    played above the threshold is a best reply on every active, defined cell
    and no active cell is undefined.
    """
    effects = profile_effects(cs, trembled)
    eps_col = eps.reshape(eps.shape + (1,) * (trembled[0].ndim - 1))
    ok = True
    undef = False
    viol = 0.0
    for (delta, defined), flat, ct in zip(effects, trembled, cs.types):
        scores = cs.score_base.reshape((2, 1)) + cs.effect_weight * delta[..., None, :]
        bad1 = (flat > eps_col + PLAY_SLACK) & (scores < -tie_tol)
        bad0 = ((1.0 - flat) > eps_col + PLAY_SLACK) & (scores > tie_tol)
        cell_und = ct.active & ~defined[..., None, :]
        bad = (bad1 | bad0) & ct.active & defined[..., None, :]
        mag = np.where(bad, np.abs(scores), 0.0)
        ok = ok & ~bad.any(axis=(-2, -1)) & ~cell_und.any(axis=(-2, -1))
        undef = undef | cell_und.any(axis=(-2, -1))
        viol = np.maximum(viol, mag.max(axis=(-2, -1)))
    return ok, undef, viol


def tail_lengths(passes: np.ndarray) -> np.ndarray:
    """Length of the passing suffix along the leading (rung) axis."""
    return np.cumprod(passes[::-1], axis=0).sum(axis=0)
