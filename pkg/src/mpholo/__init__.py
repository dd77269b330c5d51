"""Phase-only multiplane holography with realistic defocus blur.

The package optimizes a single phase grid so that a focal sweep through the
reconstruction shows each depth plane sharp where the scene is in focus and
smoothly, incoherently blurred where it is not.
"""

__version__ = "0.1.0"

from .errors import ConfigurationError, DivergenceError, MetricError, MpholoError
from .field import (DEFAULT_PIXEL_PITCH, DEFAULT_WAVELENGTHS, ComplexField,
                    OpticalConfig, amplitude, fft2, from_amplitude_phase, ifft2,
                    intensity, phase)
from .propagation import (TransferFunction, clear_transfer_cache, forward_model_far,
                          forward_model_near, propagate, propagate_adjoint,
                          transfer_function)
from .targeting import (PlaneTargetSet, RgbdScene, compose_targets,
                        default_plane_offsets, focus_masks, gaussian_blur,
                        gaussian_kernel, quantize_depth)
from .loss import (LossWeights, finite_difference_gradient, loss_gradient_wrt_field,
                   multiplane_loss)
from .solvers import (AdamState, HologramPhase, SolverConfig, SolverTrace, adam_step,
                      apply_grating, checkerboard_even, double_phase_decompose,
                      dp_backprojected_field, dp_encode, export_phase,
                      interleave_checkerboard, objective_value,
                      objective_with_gradient, phase_constrain, run_solver,
                      solve_gs, solve_sgd_dp)
from .metrics import (FocalStack, PlaneMetrics, ReconstructionReport, build_report,
                      masked_psnr, psnr, reconstruct_stack,
                      reconstruct_stack_from_phase, report_from_jsonable,
                      report_to_jsonable, ssim)
from .scenes import builtin_scene, three_rectangles
from .io import (RunConfig, dequantize_phase, load_hologram, load_scene,
                 quantize_phase, save_hologram, save_stack_and_report)

__all__ = [name for name in dir() if not name.startswith("_")]
