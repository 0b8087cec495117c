"""Hologram optimisation engines.

Three per-pixel search families operate on a shared :class:`RunState`:

* ``ds_step``  - blind direct search: random pixel, random trial level,
  keep the change only if the total error drops.
* ``sa_step``  - simulated annealing: as direct search but occasionally
  accepting worse moves with probability exp(-dE/T).
* ``hps_step`` - predictive search: for the chosen pixel, compute the
  continuous error-minimising value in closed form (one of four predictor
  variants below), quantise it to the SLM, and apply it under a guard that
  rejects any move the quantisation or approximation made worse.

Every step costs O(nx*ny): the replay field is maintained incrementally
via the rank-one update dR = dH * e^{-2pi i(ux/nx + vy/ny)} / sqrt(nx*ny)
instead of a full transform, and is periodically resynchronised to bound
floating-point drift.

Predictor variants (modulation x sensitivity):

``pm_ps``
    Phase pixel, complex-difference metric.  Zero the pixel to get the
    residual W = T - R_zeroed; the error is an exact sinusoid in the new
    pixel phase, minimised at the angle of sum(W * e^{+2pi i(ux/nx+vy/ny)}).
``pm_pi``
    Phase pixel, magnitude metric.  Exact error is quartic; a two-term
    Taylor expansion of sqrt(1+z) reduces it to a sinusoid whose weights
    F depend on |R_zeroed| and |T|.  The stationary angle is shifted by pi
    where needed so the second derivative is positive (a true minimum).
``am_ps``
    Amplitude pixel, complex-difference metric.  No zeroing needed: the
    error is an exact parabola in the magnitude change dr with vertex at
    sum(sqrt(E) cos beta)/sqrt(nx*ny).
``am_pi``
    Amplitude pixel, magnitude metric.  Heuristic weighted form
    sum((1-|T|) |R| cos beta)/sqrt(nx*ny), valid where the pixel's
    contribution is small against |R|^2; the acceptance guard absorbs the
    rare misses.

In the Fresnel regime the aperture kept in ``RunState.H`` already includes
the quadratic pre-phase e^{1j*chi}, and the predictor phasor sums carry the
extra factor e^{-1j*chi(x,y)}.  The sign is fixed by the convention that
the forward transform multiplies by e^{+1j*chi}; it was validated against
dense-scan oracles and is frozen by the test suite.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .field import DomainSpec, dft_unitary, fresnel_prephase, idft_unitary
from .slm import SlmSpec, level_values, make_rng, quantize_amplitude, quantize_phase
from .targets import TargetField

VARIANTS = ("pm_ps", "pm_pi", "am_ps", "am_pi")
ALGORITHMS = ("ds", "sa", "hps")


@dataclass
class RunState:
    """Mutable optimisation state plus derived lookup caches.

    ``H`` is the complex aperture *including* the Fresnel pre-phase, so the
    cached replay is always ``R = dft_unitary(H)``.  ``total_se`` is the
    unnormalised squared error for the target's sensitivity.
    """

    spec: SlmSpec
    domain: DomainSpec
    target: TargetField
    levels: np.ndarray
    H: np.ndarray
    R: np.ndarray
    total_se: float
    iterations: int
    accepted: int
    rng: np.random.Generator
    # caches, derived once at construction
    prephase: np.ndarray | None = None
    values: np.ndarray = dataclass_field(default=None, repr=False)
    target_mag: np.ndarray = dataclass_field(default=None, repr=False)
    sqrt_n: float = 0.0
    _zx: np.ndarray = dataclass_field(default=None, repr=False)
    _zy: np.ndarray = dataclass_field(default=None, repr=False)
    _ix: np.ndarray = dataclass_field(default=None, repr=False)
    _iy: np.ndarray = dataclass_field(default=None, repr=False)

    @property
    def variant(self) -> str:
        mod = "pm" if self.spec.is_phase else "am"
        sens = "ps" if self.target.phase_sensitive else "pi"
        return f"{mod}_{sens}"


def _index_table(n: int) -> np.ndarray:
    # row j holds (j * arange(n)) mod n, the root-of-unity exponents for pixel j
    return (np.outer(np.arange(n), np.arange(n))) % n


def _state_se(state: RunState, R: np.ndarray) -> float:
    if state.target.phase_sensitive:
        d = state.target.field - R
        return float(np.sum(d.real ** 2 + d.imag ** 2))
    d = state.target_mag - np.abs(R)
    return float(np.sum(d * d))


def new_run_state(spec: SlmSpec, domain: DomainSpec, target: TargetField,
                  rng_or_seed, init: str = "backprojection") -> RunState:
    """Build a ready-to-step state with the cached replay and error.

    ``init="backprojection"`` (default) inverse-transforms the target and
    projects it onto the SLM constraints; phase-insensitive targets get
    uniform random phases first.  ``init="random"`` draws uniform random
    levels.  Both consume the generator deterministically.
    """
    if target.field.shape != (spec.nx, spec.ny):
        raise ValueError(
            f"target shape {target.field.shape} != SLM grid ({spec.nx}, {spec.ny})"
        )
    rng = make_rng(rng_or_seed) if isinstance(rng_or_seed, (int, np.integer)) else rng_or_seed

    prephase = None
    if domain.is_fresnel:
        prephase = np.exp(1j * fresnel_prephase(domain, spec.nx, spec.ny))

    if init == "random":
        levels = rng.integers(spec.levels, size=(spec.nx, spec.ny))
    elif init == "backprojection":
        T = target.field
        if not target.phase_sensitive:
            T = T * np.exp(2j * np.pi * rng.random(T.shape))
        A = idft_unitary(T)
        if prephase is not None:
            A = A * np.conj(prephase)  # strip the pre-phase to get SLM values
        if spec.is_phase:
            levels = quantize_phase(spec, np.angle(A))
        else:
            levels = quantize_amplitude(spec, np.abs(A))
    else:
        raise ValueError(f"unknown init {init!r}")

    values = level_values(spec)
    H = values[levels]
    if prephase is not None:
        H = H * prephase
    R = dft_unitary(H)

    state = RunState(
        spec=spec, domain=domain, target=target,
        levels=levels.astype(np.int64), H=H, R=R,
        total_se=0.0, iterations=0, accepted=0, rng=rng,
        prephase=prephase,
        values=values,
        target_mag=np.abs(target.field),
        sqrt_n=math.sqrt(spec.size),
        _zx=np.exp(-2j * np.pi * np.arange(spec.nx) / spec.nx),
        _zy=np.exp(-2j * np.pi * np.arange(spec.ny) / spec.ny),
        _ix=_index_table(spec.nx),
        _iy=_index_table(spec.ny),
    )
    state.total_se = _state_se(state, R)
    return state


def _mode_rows(state: RunState, x: int, y: int):
    # e^{-2pi i u x / nx} over u, and e^{-2pi i v y / ny} over v
    return state._zx[state._ix[x]], state._zy[state._iy[y]]


def _propose(state: RunState, x: int, y: int, cur: int, k: int):
    """Candidate replay and error for setting pixel (x,y) from level cur to k."""
    dval = state.values[k] - state.values[cur]
    dh = dval * state.prephase[x, y] if state.prephase is not None else dval
    ex, ey = _mode_rows(state, x, y)
    Rn = state.R + (dh / state.sqrt_n) * (ex[:, None] * ey[None, :])
    return _state_se(state, Rn), Rn


def _apply(state: RunState, x: int, y: int, k: int, Rn: np.ndarray, en: float):
    state.levels[x, y] = k
    v = state.values[k]
    state.H[x, y] = v * state.prephase[x, y] if state.prephase is not None else v
    state.R = Rn
    state.total_se = en
    state.accepted += 1


def ds_step(state: RunState) -> bool:
    """One direct-search step; returns True if the trial was accepted.

    Draw order: pixel x, pixel y, trial level.  A trial equal to the
    current level has dE = 0 and is rejected without further work.
    """
    rng = state.rng
    x = int(rng.integers(state.spec.nx))
    y = int(rng.integers(state.spec.ny))
    k = int(rng.integers(state.spec.levels))
    state.iterations += 1
    cur = int(state.levels[x, y])
    if k == cur:
        return False
    en, Rn = _propose(state, x, y, cur, k)
    if en < state.total_se:
        _apply(state, x, y, k, Rn, en)
        return True
    return False


def sa_step(state: RunState, temperature: float) -> bool:
    """One simulated-annealing step at the given temperature.

    Accepts when dE < 0, otherwise when uniform(0,1) < exp(-dE/T).  The
    uniform variate is drawn only in the second case, so the decision
    sequence is a deterministic function of (seed, temperature schedule).
    """
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    rng = state.rng
    x = int(rng.integers(state.spec.nx))
    y = int(rng.integers(state.spec.ny))
    k = int(rng.integers(state.spec.levels))
    state.iterations += 1
    cur = int(state.levels[x, y])
    en, Rn = _propose(state, x, y, cur, k)
    de = en - state.total_se
    if de >= 0 and not rng.random() < math.exp(-de / temperature):
        return False
    _apply(state, x, y, k, Rn, en)
    return True


# ---------------------------------------------------------------------------
# Closed-form per-pixel predictors

def _require(state: RunState, variant: str, op: str):
    if state.variant != variant:
        raise ValueError(
            f"{op} applies to {variant} (phase/amplitude x sensitivity) "
            f"but state is {state.variant}"
        )


def _zeroed_replay(state: RunState, x: int, y: int, ex, ey) -> np.ndarray:
    dh = -state.H[x, y]
    return state.R + (dh / state.sqrt_n) * (ex[:, None] * ey[None, :])


def _phasor_sum(state: RunState, W: np.ndarray, x: int, y: int, ex, ey) -> complex:
    # sum over (u,v) of W * e^{+2pi i(ux/nx + vy/ny)}, times e^{-1j chi(x,y)}
    s = np.dot(np.dot(ex.conj(), W), ey.conj())
    if state.prephase is not None:
        s *= np.conj(state.prephase[x, y])
    return complex(s)


def optimal_phase_ps(state: RunState, x: int, y: int) -> float:
    """Error-minimising phase for pixel (x,y), phase-sensitive target.

    Exact: with the pixel zeroed, the total error is an exact sinusoid in
    the new phase, and the optimum aligns the pixel's replay contribution
    with the residual T - R_zeroed.
    """
    _require(state, "pm_ps", "optimal_phase_ps")
    ex, ey = _mode_rows(state, x, y)
    Rz = _zeroed_replay(state, x, y, ex, ey)
    W = state.target.field - Rz
    s = _phasor_sum(state, W, x, y, ex, ey)
    if s == 0:
        return 0.0
    return float(np.angle(s))


def optimal_phase_pi(state: RunState, x: int, y: int) -> float:
    """Near-optimal phase for pixel (x,y), phase-insensitive target.

    Two-term Taylor truncation of the exact quartic objective.  The weights
    F = (2/sqrt(N)) * |Rz| * (1 - |T| / sqrt(|Rz|^2 + 1/N)) are folded in
    as F*e^{1j*angle(Rz)} = G*Rz with G real, which stays finite at
    |Rz| = 0.  The branch with positive second derivative (the minimum) is
    the angle of the *negated* phasor sum.
    """
    _require(state, "pm_pi", "optimal_phase_pi")
    ex, ey = _mode_rows(state, x, y)
    Rz = _zeroed_replay(state, x, y, ex, ey)
    mag2 = Rz.real ** 2 + Rz.imag ** 2
    root = np.sqrt(mag2 + 1.0 / state.spec.size)
    G = (2.0 / state.sqrt_n) * (1.0 - state.target_mag / root)
    s = _phasor_sum(state, G * Rz, x, y, ex, ey)
    if s == 0:
        return 0.0
    return float(np.angle(-s))


def optimal_dr_ps(state: RunState, x: int, y: int) -> float:
    """Error-minimising magnitude change for pixel (x,y), phase-sensitive.

    Exact: the total error is a parabola in dr with vertex at
    sum(sqrt(E) cos beta) / sqrt(N); no pixel zeroing is needed because an
    amplitude pixel's contribution direction is fixed.
    """
    _require(state, "am_ps", "optimal_dr_ps")
    ex, ey = _mode_rows(state, x, y)
    W = state.target.field - state.R
    s = _phasor_sum(state, W, x, y, ex, ey)
    return s.real / state.sqrt_n


def optimal_dr_pi(state: RunState, x: int, y: int) -> float:
    """Approximate magnitude change for pixel (x,y), phase-insensitive.

    Weighted sum (1 - |T|) |R| cos(beta) / sqrt(N) with beta measured
    against the residual T - R, assuming the pixel's contribution is small
    next to |R|^2.  Pixels where the residual vanishes are skipped (their
    direction is undefined and they are already satisfied).
    """
    _require(state, "am_pi", "optimal_dr_pi")
    ex, ey = _mode_rows(state, x, y)
    W = state.target.field - state.R
    wmag = np.abs(W)
    weight = (1.0 - state.target_mag) * np.abs(state.R)
    scale = np.divide(weight, wmag, out=np.zeros_like(wmag), where=wmag > 0)
    s = _phasor_sum(state, scale * W, x, y, ex, ey)
    return s.real / state.sqrt_n


_PREDICTORS = {
    "pm_ps": optimal_phase_ps,
    "pm_pi": optimal_phase_pi,
    "am_ps": optimal_dr_ps,
    "am_pi": optimal_dr_pi,
}


@dataclass(frozen=True)
class PredictorTerms:
    """Explicit per-replay-pixel intermediates of the active predictor.

    The step-rate predictors above never materialise these (they fold the
    trigonometry into complex phasor sums); this reference construction
    spells the formulas out term by term for tests and inspection.  Fields
    not used by the state's variant are None.  ``C`` and ``beta`` are in
    radians; ``e_dag`` is the per-pixel squared error with the pixel
    zeroed (phase modulation) or as-is (amplitude modulation).
    """

    C: np.ndarray | None
    F: np.ndarray | None
    D: np.ndarray | None
    beta: np.ndarray | None
    e_dag: np.ndarray | None


def predictor_terms(state: RunState, x: int, y: int) -> PredictorTerms:
    """Build the explicit intermediate fields for pixel (x, y)."""
    spec = state.spec
    n = spec.size
    phi = 2.0 * np.pi * (np.arange(spec.nx)[:, None] * x / spec.nx
                         + np.arange(spec.ny)[None, :] * y / spec.ny)
    chi = float(np.angle(state.prephase[x, y])) if state.prephase is not None else 0.0
    variant = state.variant

    if variant.startswith("pm"):
        ex, ey = _mode_rows(state, x, y)
        Rz = _zeroed_replay(state, x, y, ex, ey)
        if variant == "pm_ps":
            W = state.target.field - Rz
            return PredictorTerms(
                C=phi + np.angle(W) - chi, F=None, D=None, beta=None,
                e_dag=W.real ** 2 + W.imag ** 2)
        mag = np.abs(Rz)
        root = np.sqrt(mag ** 2 + 1.0 / n)
        F = 2.0 * mag / state.sqrt_n \
            - 2.0 * state.target_mag * mag / (state.sqrt_n * root)
        D = 1.0 / n + 2.0 * state.target_mag * mag - 2.0 * state.target_mag * root
        return PredictorTerms(
            C=phi + np.angle(Rz) - chi, F=F, D=D, beta=None,
            e_dag=(state.target_mag - mag) ** 2)

    W = state.target.field - state.R
    beta = -phi - np.angle(W) + chi
    return PredictorTerms(C=None, F=None, D=None, beta=beta,
                          e_dag=W.real ** 2 + W.imag ** 2)


def hps_step(state: RunState, variant: str | None = None) -> bool:
    """One predictive-search step; returns True if a change was applied.

    The continuous optimum from the matching predictor is quantised to the
    nearest SLM level, the true error change of the quantised move is
    evaluated incrementally, and the move is applied only if it does not
    increase the error.  Draw order: pixel x, pixel y.
    """
    expected = state.variant
    if variant is None:
        variant = expected
    elif variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    elif variant != expected:
        raise ValueError(
            f"variant {variant!r} does not match state configuration {expected!r}"
        )
    rng = state.rng
    x = int(rng.integers(state.spec.nx))
    y = int(rng.integers(state.spec.ny))
    state.iterations += 1
    cur = int(state.levels[x, y])

    if state.spec.is_phase:
        theta = _PREDICTORS[variant](state, x, y)
        k = quantize_phase(state.spec, theta)
    else:
        dr = _PREDICTORS[variant](state, x, y)
        r = state.values[cur].real
        k = quantize_amplitude(state.spec, r + dr)

    if k == cur:
        return False
    en, Rn = _propose(state, x, y, cur, k)
    if en <= state.total_se:
        _apply(state, x, y, k, Rn, en)
        return True
    return False


# ---------------------------------------------------------------------------
# Run harness

@dataclass
class ConvergenceLog:
    """Checkpointed error trace of one optimisation run.

    ``accepted`` is cumulative; ``elapsed`` is wall-clock seconds since the
    run started (informational only, never part of any pass/fail check).
    Resynchronisation events record the relative disagreement between the
    incrementally maintained error and a full recomputation.
    """

    iterations: list
    mse: list
    accepted: list
    elapsed: list
    resync_iterations: list
    resync_drifts: list

    @property
    def max_resync_drift(self) -> float:
        return max(self.resync_drifts, default=0.0)


def resynchronize(state: RunState) -> float:
    """Recompute R and the cached error from the aperture; return the
    relative drift of the cached error against the recomputation."""
    R = dft_unitary(state.H)
    se = _state_se(state, R)
    drift = abs(state.total_se - se) / se if se > 0 else abs(state.total_se - se)
    state.R = R
    state.total_se = se
    return drift


def run(algorithm: str, state: RunState, iterations: int,
        checkpoint_every: int = 1000, resync_every: int = 10_000,
        variant: str | None = None,
        sa_t0: float | None = None, sa_decay: float | None = None) -> ConvergenceLog:
    """Execute ``iterations`` steps, logging at checkpoints.

    The log contains the initial point plus one row per checkpoint (every
    ``checkpoint_every`` iterations and at the final iteration), giving
    ceil(iterations / checkpoint_every) + 1 rows.  The replay field and
    cached error are resynchronised from a full transform every
    ``resync_every`` iterations.

    Simulated annealing follows a geometric schedule T_k = T0 * decay^k;
    by default T0 is 1e-3 times the initial per-pixel MSE and decay is
    chosen so the temperature falls by 1e3 over the run.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if checkpoint_every < 1 or resync_every < 1:
        raise ValueError("checkpoint_every and resync_every must be >= 1")
    if variant is not None and algorithm != "hps":
        raise ValueError("variant only applies to the hps algorithm")

    n = state.spec.size
    if algorithm == "sa":
        temperature = sa_t0 if sa_t0 is not None else 1e-3 * state.total_se / n
        if not temperature > 0:
            temperature = 1e-12  # zero-error start; keep the schedule valid
        decay = sa_decay if sa_decay is not None else (1e-3) ** (1.0 / iterations)
    log = ConvergenceLog([], [], [], [], [], [])

    def record(i, t0):
        log.iterations.append(i)
        log.mse.append(state.total_se / n)
        log.accepted.append(state.accepted)
        log.elapsed.append(0.0 if t0 is None else time.perf_counter() - t0)

    record(0, None)
    t0 = time.perf_counter()
    for i in range(1, iterations + 1):
        if algorithm == "ds":
            ds_step(state)
        elif algorithm == "sa":
            sa_step(state, temperature)
            temperature *= decay
        else:
            hps_step(state, variant)
        if i % resync_every == 0:
            log.resync_iterations.append(i)
            log.resync_drifts.append(resynchronize(state))
        if i % checkpoint_every == 0 or i == iterations:
            record(i, t0)
    return log
