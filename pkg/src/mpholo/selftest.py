"""Built-in invariant checks, runnable without the test suite installed."""

from __future__ import annotations

import numpy as np

from .field import ComplexField, OpticalConfig, fft2, ifft2
from .io import quantize_phase
from .loss import finite_difference_gradient
from .propagation import forward_model_near, propagate, propagate_adjoint
from .solvers import (AdamState, SolverConfig, adam_step, apply_grating,
                      dp_backprojected_field, double_phase_decompose,
                      objective_value, objective_with_gradient, phase_constrain)
from .targeting import RgbdScene, compose_targets

_WAVELENGTH = 639e-9


def _field(config: OpticalConfig, rng) -> ComplexField:
    values = rng.standard_normal(config.shape) + 1j * rng.standard_normal(config.shape)
    return ComplexField(values, config)


def _check_fft_unitary(size):
    config = OpticalConfig(_WAVELENGTH, height=size, width=size)
    f = _field(config, np.random.default_rng(0))
    back = ifft2(fft2(f)).values
    err = np.max(np.abs(back - f.values)) / np.max(np.abs(f.values))
    assert err <= 1e-12, f"fft round trip error {err:.3e}"
    spectral = np.sum(np.abs(fft2(f).values) ** 2)
    spatial = np.sum(np.abs(f.values) ** 2)
    rel = abs(spectral - spatial) / spatial
    assert rel <= 1e-12, f"Parseval mismatch {rel:.3e}"


def _check_propagation_round_trip(size):
    config = OpticalConfig(_WAVELENGTH, height=size, width=size)
    f = _field(config, np.random.default_rng(1))
    for distance in (1e-3, 0.30):
        back = propagate(propagate(f, distance, band_limit=False), -distance,
                         band_limit=False).values
        err = np.max(np.abs(back - f.values)) / np.max(np.abs(f.values))
        assert err <= 1e-10, f"round trip at {distance} m: {err:.3e}"


def _check_adjoint(size):
    config = OpticalConfig(_WAVELENGTH, height=size, width=size)
    for seed in range(3):
        rng = np.random.default_rng(seed)
        a, b = _field(config, rng), _field(config, rng)
        for distance in (0.0, 1e-3, 0.30):
            lhs = np.vdot(b.values, propagate(a, distance).values)
            rhs = np.vdot(propagate_adjoint(b, distance).values, a.values)
            rel = abs(lhs - rhs) / max(abs(lhs), 1e-300)
            assert rel <= 1e-10, f"adjoint mismatch {rel:.3e} at {distance} m"


def _check_hop_pair(size):
    config = OpticalConfig(_WAVELENGTH, height=size, width=size)
    f = _field(config, np.random.default_rng(2))
    got = forward_model_near(f, 0.30, 1e-3, band_limit=False).values
    want = propagate(f, 1e-3, band_limit=False).values
    err = np.max(np.abs(got - want)) / np.max(np.abs(want))
    assert err <= 1e-10, f"hop pair composition error {err:.3e}"


def _check_phase_constraint(size):
    rng = np.random.default_rng(3)
    for _ in range(3):
        phi = rng.uniform(-np.pi, np.pi, (size, size))
        offset = rng.uniform(0.0, np.pi)
        out = phase_constrain(phi, offset)
        assert abs(out.mean()) <= 1e-12, "constrained mean not zero"
        centered = phi - phi.mean()
        even = out[0, 0] - centered[0, 0]
        odd = out[0, 1] - centered[0, 1]
        assert abs(even + offset) <= 1e-12 and abs(odd - offset) <= 1e-12, \
            "checkerboard offsets wrong"


def _check_double_phase(size):
    rng = np.random.default_rng(4)
    values = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    lo, hi, normalized = double_phase_decompose(values)
    recombined = 0.5 * (np.exp(1j * lo) + np.exp(1j * hi))
    err = np.max(np.abs(recombined - normalized))
    assert err <= 1e-12, f"double phase identity error {err:.3e}"


def _check_grating(size):
    grated = apply_grating(np.zeros((size, size)))
    spectrum = np.fft.fft2(np.exp(1j * grated), norm="ortho")
    assert abs(spectrum[0, 0]) <= 1e-12, "grating left energy in the DC bin"
    shift = (quantize_phase(grated).astype(int) - quantize_phase(np.zeros((size, size)))) % 256
    assert (shift[1::2, :] == 128).all() and (shift[0::2, :] == 0).all(), \
        "grating rows not shifted by 128 levels"


def _check_gradient(n_coords):
    rng = np.random.default_rng(5)
    size = 16
    scene = RgbdScene(rng.uniform(0.0, 1.0, (size, size)), rng.uniform(0.0, 1.0, (size, size)))
    targets = compose_targets(scene, 2, sigma0=1.0)
    config = SolverConfig(optical=OpticalConfig(_WAVELENGTH, height=size, width=size))
    phi = rng.uniform(-np.pi, np.pi, (size, size))
    offset = float(rng.uniform(0.0, np.pi))
    _, g_phi, g_off = objective_with_gradient(phi, offset, targets, config)

    coords = [tuple(c) for c in rng.integers(0, size, size=(n_coords, 2))]
    fd = finite_difference_gradient(lambda p: objective_value(p, offset, targets, config),
                                    phi, coords=coords)
    scale = np.max(np.abs(g_phi))
    for i, j in coords:
        rel = abs(fd[i, j] - g_phi[i, j]) / max(abs(fd[i, j]), abs(g_phi[i, j]), 1e-6 * scale)
        assert rel <= 1e-4, f"phase gradient off by {rel:.3e} at {(i, j)}"
    step = 1e-5
    fd_off = (objective_value(phi, offset + step, targets, config)
              - objective_value(phi, offset - step, targets, config)) / (2 * step)
    rel = abs(fd_off - g_off) / max(abs(fd_off), abs(g_off), 1e-6 * scale)
    assert rel <= 1e-4, f"offset gradient off by {rel:.3e}"


def _check_adam():
    x = np.float64(1.0)
    state = AdamState.for_params([x])
    for _ in range(200):
        [x], state = adam_step([x], [2.0 * x], state, learning_rate=0.1)
    assert abs(x) < 0.01, f"Adam failed to settle a quadratic, |x| = {abs(x):.3e}"


def _check_dp_field():
    rng = np.random.default_rng(6)
    size = 32
    scene = RgbdScene(rng.uniform(0.0, 1.0, (size, size)), rng.uniform(0.0, 1.0, (size, size)))
    targets = compose_targets(scene, 2, sigma0=1.0)
    config = SolverConfig(optical=OpticalConfig(_WAVELENGTH, height=size, width=size),
                          algorithm="dp")
    summed = dp_backprojected_field(targets, config, rng=7)
    assert np.isfinite(summed).all() and np.abs(summed).max() > 0, "dp field degenerate"


def run_selftest(fast: bool = False, emit=print) -> int:
    """Run the invariant suite; returns the number of failing checks."""
    size = 64 if fast else 256
    checks = [
        ("fft_unitary", lambda: _check_fft_unitary(size)),
        ("propagation_round_trip", lambda: _check_propagation_round_trip(size)),
        ("adjoint_identity", lambda: _check_adjoint(64 if fast else 128)),
        ("hop_pair_composition", lambda: _check_hop_pair(size)),
        ("phase_constraint", lambda: _check_phase_constraint(size)),
        ("double_phase_identity", lambda: _check_double_phase(size)),
        ("grating_dc", lambda: _check_grating(size)),
        ("gradient_check", lambda: _check_gradient(8 if fast else 24)),
        ("adam_quadratic", _check_adam),
        ("dp_backprojection", _check_dp_field),
    ]
    failures = 0
    for name, check in checks:
        try:
            check()
        except AssertionError as exc:
            failures += 1
            emit(f"FAIL {name}: {exc}")
        else:
            emit(f"PASS {name}")
    return failures
