"""Hologram solvers: constrained gradient descent, Gerchberg-Saxton, double phase.

The flagship solver (solve_sgd_dp) optimizes an unconstrained phase grid plus
a scalar offset. Each iteration re-applies the double phase style constraint

    phi_c = (phi - mean(phi)) -/+ offset      (checkerboard on (x + y) parity)

builds the unit-amplitude hologram exp(i * phi_c), propagates it to every
target plane, accumulates the masked multiplane loss, and pulls the gradient
back through the whole chain by hand: loss cotangent -> adjoint propagation
-> phase of the hologram -> mean subtraction and checkerboard. One Adam step
per iteration updates (phi, offset) together. Keeping the hologram pinned to
the constrained family during optimization, rather than projecting once at
export, is what keeps the converged phase compatible with the interleaved
encoding the display expects.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, DivergenceError
from .field import ComplexField, OpticalConfig, from_amplitude_phase
from .loss import LossWeights, loss_gradient_wrt_field, multiplane_loss
from .propagation import (forward_model_far, forward_model_near, propagate,
                          propagate_adjoint)
from .targeting import PlaneTargetSet

ALGORITHMS = ("sgd_dp", "gs", "dp")
REGIMES = ("near", "far")
PHASE_INITS = ("random", "zeros", "provided")


@dataclass
class HologramPhase:
    """Unconstrained phase grid plus the scalar checkerboard offset.

    phi is stored unwrapped; wrapping to [0, 2*pi) happens at export time.
    """

    phi: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=np.float64)
        if phi.ndim != 2:
            raise ConfigurationError(f"phase grid must be 2-D, got shape {phi.shape}")
        if not np.isfinite(phi).all() or not np.isfinite(self.offset):
            raise ConfigurationError("hologram phase must be finite")
        self.phi = phi
        self.offset = float(self.offset)


@dataclass(frozen=True, eq=False)
class SolverConfig:
    """Everything a solve needs besides the targets themselves.

    band_limit=None resolves to True: both regimes keep the anti-aliasing
    limit on their long hops, and in the near regime that limit doubles as
    the aperture filter that makes intensity at the hologram plane itself
    controllable. Pass False only for exact-identity diagnostics.
    """

    optical: OpticalConfig
    algorithm: str = "sgd_dp"
    iterations: int = 200
    learning_rate: float = 1e-3
    hop_distance: float = 0.30
    plane_offsets: tuple | None = None
    regime: str = "near"
    loss_weights: LossWeights = LossWeights()
    phase_init: str = "random"
    initial_phase: np.ndarray | None = None
    initial_offset: float = math.pi / 2.0
    step_per_plane: bool = False
    band_limit: bool | None = None
    compare_amplitude: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.regime not in REGIMES:
            raise ConfigurationError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if self.phase_init not in PHASE_INITS:
            raise ConfigurationError(f"phase_init must be one of {PHASE_INITS}, got {self.phase_init!r}")
        if not isinstance(self.iterations, (int, np.integer)) or self.iterations < 1:
            raise ConfigurationError(f"iterations must be a positive integer, got {self.iterations}")
        if not (self.learning_rate > 0):
            raise ConfigurationError(f"learning_rate must be positive, got {self.learning_rate}")
        if not (self.hop_distance > 0):
            raise ConfigurationError(f"hop_distance must be positive, got {self.hop_distance}")
        if self.phase_init == "provided":
            if self.initial_phase is None:
                raise ConfigurationError("phase_init='provided' needs initial_phase")
            if np.asarray(self.initial_phase).shape != self.optical.shape:
                raise ConfigurationError("initial_phase shape does not match the optical grid")

    def resolved_band_limit(self) -> bool:
        if self.band_limit is None:
            return True
        return bool(self.band_limit)


@dataclass
class SolverTrace:
    """Per-iteration total loss plus the initial and final phase state."""

    losses: np.ndarray
    final: HologramPhase
    initial: HologramPhase
    wall_time: float
    algorithm: str


@lru_cache(maxsize=32)
def _checkerboard_signs(shape: tuple) -> np.ndarray:
    ii, jj = np.indices(shape)
    signs = np.where((ii + jj) % 2 == 0, -1.0, 1.0)
    signs.flags.writeable = False
    return signs


def checkerboard_even(shape) -> np.ndarray:
    """True where (x + y) is even; the 'low' sites of the interleave."""
    return _checkerboard_signs(tuple(shape)) < 0


def phase_constrain(phi: np.ndarray, offset: float) -> np.ndarray:
    """Zero-mean the phase, then split it by -offset/+offset on the checkerboard.

    Pixels with even (x + y) parity get phi0 - offset, odd parity phi0 + offset.
    The output mean is zero because the parity classes have equal size on an
    even-sided grid.
    """
    phi = np.asarray(phi, dtype=np.float64)
    if phi.ndim != 2 or phi.shape[0] % 2 or phi.shape[1] % 2:
        raise ConfigurationError(f"phase_constrain needs an even 2-D grid, got {phi.shape}")
    centered = phi - phi.mean()
    return centered + _checkerboard_signs(phi.shape) * float(offset)


# ---------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0

    @classmethod
    def for_params(cls, params) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params], t=0)


def adam_step(params, grads, state: AdamState, learning_rate: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """One bias-corrected Adam update; returns (new_params, new_state)."""
    t = state.t + 1
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * (g * g)
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        new_params.append(p - learning_rate * m_hat / (np.sqrt(v_hat) + eps))
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamState(new_m, new_v, t)


# ---------------------------------------------------------------------------
# Objective shared by the gradient solver and its tests


def _resolved_offsets(targets: PlaneTargetSet, config: SolverConfig) -> tuple:
    offsets = config.plane_offsets
    if offsets is None:
        offsets = targets.plane_offsets
    if len(offsets) != targets.n_planes:
        raise ConfigurationError(
            f"{len(offsets)} plane offsets for {targets.n_planes} planes"
        )
    return tuple(float(d) for d in offsets)


def _check_geometry(targets: PlaneTargetSet, config: SolverConfig) -> None:
    if targets.shape != config.optical.shape:
        raise ConfigurationError(
            f"target grids {targets.shape} do not match optical grid {config.optical.shape}"
        )


def _propagate_to_plane(hologram: ComplexField, delta: float, config: SolverConfig,
                        band_limit: bool) -> ComplexField:
    if config.regime == "near":
        return forward_model_near(hologram, config.hop_distance, delta, band_limit)
    return forward_model_far(hologram, config.hop_distance + delta, band_limit)


def _pullback_from_plane(cotangent: np.ndarray, delta: float, config: SolverConfig,
                         band_limit: bool) -> np.ndarray:
    cot = ComplexField(cotangent, config.optical)
    if config.regime == "near":
        inner = propagate_adjoint(cot, -config.hop_distance + delta, band_limit)
        return propagate_adjoint(inner, config.hop_distance, band_limit).values
    return propagate_adjoint(cot, config.hop_distance + delta, band_limit).values


def _recon_grid(u_values: np.ndarray, compare_amplitude: bool) -> np.ndarray:
    if compare_amplitude:
        return np.abs(u_values)
    return (u_values * u_values.conj()).real


def _constrained_phase(phi: np.ndarray, offset: float, config: SolverConfig) -> np.ndarray:
    if config.regime == "near":
        return phase_constrain(phi, offset)
    return np.asarray(phi, dtype=np.float64)


def objective_value(phi: np.ndarray, offset: float, targets: PlaneTargetSet,
                    config: SolverConfig, planes=None) -> float:
    """Total multiplane loss of the (phi, offset) parameterization."""
    _check_geometry(targets, config)
    offsets = _resolved_offsets(targets, config)
    band_limit = config.resolved_band_limit()
    constrained = _constrained_phase(phi, offset, config)
    hologram = from_amplitude_phase(np.ones(config.optical.shape), constrained, config.optical)
    if planes is None:
        planes = range(targets.n_planes)
    total = 0.0
    for k in planes:
        u = _propagate_to_plane(hologram, offsets[k], config, band_limit)
        recon = _recon_grid(u.values, config.compare_amplitude)
        total += multiplane_loss(recon, targets.targets[k], targets.masks[k],
                                 config.loss_weights)
    return total


def objective_with_gradient(phi: np.ndarray, offset: float, targets: PlaneTargetSet,
                            config: SolverConfig, planes=None):
    """Loss plus analytic gradients with respect to phi and offset.

    The chain runs: loss cotangent at each plane, adjoint propagation back
    to the hologram plane, conversion to a phase gradient via
    2 * Im(g * conj(O)), then the exact linear pullback of mean subtraction
    (subtract the gradient mean) and of the checkerboard offset (signed sum).
    In the far regime the constraint is skipped, so the offset gradient is
    identically zero.
    """
    _check_geometry(targets, config)
    offsets = _resolved_offsets(targets, config)
    band_limit = config.resolved_band_limit()
    phi = np.asarray(phi, dtype=np.float64)
    constrained = _constrained_phase(phi, offset, config)
    hologram = from_amplitude_phase(np.ones(config.optical.shape), constrained, config.optical)
    o_values = hologram.values
    if planes is None:
        planes = range(targets.n_planes)

    total = 0.0
    grad_constrained = np.zeros(config.optical.shape)
    for k in planes:
        u = _propagate_to_plane(hologram, offsets[k], config, band_limit)
        recon = _recon_grid(u.values, config.compare_amplitude)
        total += multiplane_loss(recon, targets.targets[k], targets.masks[k],
                                 config.loss_weights)
        if not np.isfinite(total):
            # leave the divergence report to the caller; gradients of a
            # non-finite loss would only crash the adjoint chain
            return float(total), np.zeros(config.optical.shape), 0.0
        g_u = loss_gradient_wrt_field(u.values, targets.targets[k], targets.masks[k],
                                      config.loss_weights, config.compare_amplitude)
        g_o = _pullback_from_plane(g_u, offsets[k], config, band_limit)
        grad_constrained += 2.0 * (g_o * o_values.conj()).imag

    if config.regime == "near":
        signs = _checkerboard_signs(phi.shape)
        grad_offset = float(np.sum(grad_constrained * signs))
        grad_phi = grad_constrained - grad_constrained.mean()
    else:
        grad_offset = 0.0
        grad_phi = grad_constrained
    return total, grad_phi, grad_offset


# ---------------------------------------------------------------------------
# Solvers


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _initial_phase(config: SolverConfig, rng: np.random.Generator) -> np.ndarray:
    if config.phase_init == "zeros":
        return np.zeros(config.optical.shape)
    if config.phase_init == "provided":
        return np.asarray(config.initial_phase, dtype=np.float64).copy()
    return rng.uniform(-np.pi, np.pi, size=config.optical.shape)


def solve_sgd_dp(targets: PlaneTargetSet, config: SolverConfig, rng=None) -> SolverTrace:
    """Adam-driven descent on (phi, offset) under the checkerboard constraint.

    The per-iteration loss is recorded before the update, so losses[0] is the
    objective at the initialization. With step_per_plane set, the update runs
    after every plane instead of once per iteration, stepping on the running
    sum of plane gradients (each evaluated at the parameters it saw); this
    mirrors a published formulation and is kept for comparison runs.
    """
    _check_geometry(targets, config)
    rng = _as_rng(rng)
    phi0 = _initial_phase(config, rng)
    offset0 = float(config.initial_offset)
    initial = HologramPhase(phi0.copy(), offset0)

    phi = phi0
    offset = np.float64(offset0)
    state = AdamState.for_params([phi, offset])
    losses = np.zeros(config.iterations)
    start = time.perf_counter()
    for it in range(config.iterations):
        if config.step_per_plane:
            total = 0.0
            g_phi_acc = np.zeros_like(phi)
            g_off_acc = np.float64(0.0)
            for k in range(targets.n_planes):
                part, g_phi, g_off = objective_with_gradient(phi, float(offset), targets,
                                                             config, planes=(k,))
                total += part
                g_phi_acc = g_phi_acc + g_phi
                g_off_acc = g_off_acc + g_off
                (phi, offset), state = adam_step([phi, offset], [g_phi_acc, g_off_acc],
                                                 state, config.learning_rate)
        else:
            total, g_phi, g_off = objective_with_gradient(phi, float(offset), targets, config)
            if np.isfinite(total):
                (phi, offset), state = adam_step([phi, offset], [g_phi, np.float64(g_off)],
                                                 state, config.learning_rate)
        if not np.isfinite(total):
            raise DivergenceError(it)
        losses[it] = total
    wall = time.perf_counter() - start
    return SolverTrace(losses=losses, final=HologramPhase(phi, float(offset)),
                       initial=initial, wall_time=wall, algorithm="sgd_dp")


def solve_gs(targets: PlaneTargetSet, config: SolverConfig, rng=None) -> SolverTrace:
    """Multiplane Gerchberg-Saxton with plane-averaged back-propagation.

    Per sweep: propagate the hologram to every plane, swap each amplitude for
    the target's square root while keeping phase, propagate all planes back,
    average the returned fields, and project onto unit amplitude. Runs in the
    far regime only; there is no constraint and no offset to optimize.
    """
    if config.regime != "far":
        raise ConfigurationError("solve_gs operates plane-to-plane; set regime='far'")
    _check_geometry(targets, config)
    offsets = _resolved_offsets(targets, config)
    band_limit = config.resolved_band_limit()
    rng = _as_rng(rng)
    phi = _initial_phase(config, rng)
    initial = HologramPhase(phi.copy(), 0.0)
    amp_targets = [np.sqrt(p) for p in targets.targets]

    losses = np.zeros(config.iterations)
    start = time.perf_counter()
    for it in range(config.iterations):
        hologram = from_amplitude_phase(np.ones(config.optical.shape), phi, config.optical)
        total = 0.0
        back_sum = np.zeros(config.optical.shape, dtype=np.complex128)
        for k in range(targets.n_planes):
            distance = config.hop_distance + offsets[k]
            u = propagate(hologram, distance, band_limit)
            recon = _recon_grid(u.values, config.compare_amplitude)
            total += multiplane_loss(recon, targets.targets[k], targets.masks[k],
                                     config.loss_weights)
            replaced = ComplexField(amp_targets[k] * np.exp(1j * np.angle(u.values)),
                                    config.optical)
            back_sum += propagate(replaced, -distance, band_limit).values
        if not np.isfinite(total):
            raise DivergenceError(it)
        losses[it] = total
        phi = np.angle(back_sum / targets.n_planes)
    wall = time.perf_counter() - start
    return SolverTrace(losses=losses, final=HologramPhase(phi, 0.0),
                       initial=initial, wall_time=wall, algorithm="gs")


def dp_backprojected_field(targets: PlaneTargetSet, config: SolverConfig,
                           rng=None) -> np.ndarray:
    """Sum of every plane target (with random phase) pulled to the hologram plane.

    Each target rides sqrt(P_k) * exp(i * random phase). In the far regime it
    is back-propagated by the full plane distance; in the near regime the
    long hop out and back is composed explicitly so the net move is just the
    plane's millimetre offset.
    """
    _check_geometry(targets, config)
    offsets = _resolved_offsets(targets, config)
    band_limit = config.resolved_band_limit()
    rng = _as_rng(rng)
    acc = np.zeros(config.optical.shape, dtype=np.complex128)
    for k in range(targets.n_planes):
        phases = rng.uniform(-np.pi, np.pi, size=config.optical.shape)
        target_field = ComplexField(np.sqrt(targets.targets[k]) * np.exp(1j * phases),
                                    config.optical)
        pulled = propagate(target_field, -(config.hop_distance + offsets[k]), band_limit)
        if config.regime == "near":
            pulled = propagate(pulled, config.hop_distance, band_limit)
        acc += pulled.values
    return acc


def double_phase_decompose(values: np.ndarray):
    """Split a * exp(i*theta) into two unit-amplitude phases.

    Amplitudes are first normalized to [0, 1] by the grid maximum. Returns
    (theta - arccos(a), theta + arccos(a), normalized field); the complex
    average of the two unit phasors reproduces the normalized field exactly.
    """
    values = np.asarray(values, dtype=np.complex128)
    a = np.abs(values)
    peak = a.max()
    if peak > 0:
        a = a / peak
        normalized = values / peak
    else:
        normalized = values.copy()
    theta = np.angle(values)
    spread = np.arccos(np.clip(a, 0.0, 1.0))
    return theta - spread, theta + spread, normalized


def interleave_checkerboard(theta_low: np.ndarray, theta_high: np.ndarray) -> np.ndarray:
    """Low phase on even (x + y) sites, high phase on odd sites."""
    theta_low = np.asarray(theta_low, dtype=np.float64)
    return np.where(checkerboard_even(theta_low.shape), theta_low, theta_high)


def dp_encode(targets: PlaneTargetSet, config: SolverConfig, rng=None) -> HologramPhase:
    """Non-iterative double phase hologram for a multiplane target set."""
    summed = dp_backprojected_field(targets, config, rng)
    theta_low, theta_high, _ = double_phase_decompose(summed)
    return HologramPhase(interleave_checkerboard(theta_low, theta_high), 0.0)


def apply_grating(phi: np.ndarray) -> np.ndarray:
    """Add pi to every odd row, pushing the signal away from the DC order."""
    phi = np.asarray(phi, dtype=np.float64).copy()
    phi[1::2, :] += np.pi
    return phi


def export_phase(hologram: HologramPhase, config: SolverConfig) -> np.ndarray:
    """Displayable phase grid for a solver result.

    The gradient solver optimizes an unconstrained parameterization, so its
    result is constrained here; GS and DP holograms are already final.
    """
    if config.algorithm == "sgd_dp" and config.regime == "near":
        return phase_constrain(hologram.phi, hologram.offset)
    return hologram.phi.copy()


def run_solver(targets: PlaneTargetSet, config: SolverConfig, rng=None) -> SolverTrace:
    """Dispatch on config.algorithm; dp yields an empty loss trace."""
    if config.algorithm == "sgd_dp":
        return solve_sgd_dp(targets, config, rng)
    if config.algorithm == "gs":
        return solve_gs(targets, config, rng)
    start = time.perf_counter()
    hologram = dp_encode(targets, config, rng)
    wall = time.perf_counter() - start
    return SolverTrace(losses=np.zeros(0), final=hologram,
                       initial=HologramPhase(hologram.phi.copy(), hologram.offset),
                       wall_time=wall, algorithm="dp")
