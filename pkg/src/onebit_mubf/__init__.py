"""Multi-user downlink beamforming with 1-bit DACs.

Exact quantization-noise modeling via the arcsine law, SQINR-balancing power
allocation through uplink-downlink duality, alternating-minimization precoder
design with optional dummy-user dithering, zero-forcing baselines, and a
seeded Monte-Carlo rate/BER evaluation harness.
"""

__version__ = "0.1.0"

from .baselines import ZfDither, tune_zf_dither, zf_beamformers, zf_dither, zf_power
from .channel import (ChannelSet, GeometricScenario, gen_geometric, gen_rayleigh,
                      load_channel, perturb_channel, save_channel)
from .evaluate import (Constellation, ExperimentConfig, ResultTable, blind_gain,
                       constellation, decode, rates, run_experiment,
                       transmit_downlink)
from .numerics import (EigenPair, dominant_nonneg_eigpair,
                       generalized_dominant_eigvec, hermitian_eig, nullspace)
from .optimizer import PrecoderSolution, optimize, optimize_with_dither, qk_matrix
from .power_allocation import (BalanceResult, CouplingSystem, DualityReport,
                               build_extended_dl, build_extended_ul,
                               closed_form_power, coupling_system, solve_balance,
                               verify_duality)
from .precoding import (DitheredMaxMinPrecoder, MaxMinPrecoder, ZeroForcingPrecoder)
from .quantize import (QuantModel, arcsine_covariance, bussgang_gain,
                       diagonal_metric, one_bit, small_angle_eta)
from .sqinr import (SystemNoise, build_d, build_psi, distortion_diag_metric,
                    dl_sqinr_approx, dl_sqinr_exact, dl_sqir, per_antenna_gains,
                    ul_sqinr_approx, ul_sqinr_combiner)

__all__ = [
    "BalanceResult", "ChannelSet", "Constellation", "CouplingSystem",
    "DitheredMaxMinPrecoder", "DualityReport", "EigenPair", "ExperimentConfig",
    "GeometricScenario", "MaxMinPrecoder", "PrecoderSolution", "QuantModel",
    "ResultTable", "SystemNoise", "ZeroForcingPrecoder", "ZfDither",
    "arcsine_covariance", "blind_gain", "build_d", "build_extended_dl",
    "build_extended_ul", "build_psi", "bussgang_gain", "closed_form_power",
    "constellation", "coupling_system", "decode", "diagonal_metric",
    "distortion_diag_metric", "dl_sqinr_approx", "dl_sqinr_exact", "dl_sqir",
    "dominant_nonneg_eigpair", "gen_geometric", "gen_rayleigh",
    "generalized_dominant_eigvec", "hermitian_eig", "load_channel", "nullspace",
    "one_bit", "optimize", "optimize_with_dither", "per_antenna_gains",
    "perturb_channel", "qk_matrix", "rates", "run_experiment", "save_channel",
    "small_angle_eta", "solve_balance", "transmit_downlink", "tune_zf_dither",
    "ul_sqinr_approx", "ul_sqinr_combiner", "verify_duality", "zf_beamformers",
    "zf_dither", "zf_power",
]
