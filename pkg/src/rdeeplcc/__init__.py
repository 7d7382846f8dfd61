"""Robust data-enabled predictive leading cruise control for mixed platoons."""
from .zonoset import Box, MatrixZonotope, Zonotope
from .platoon import OvmParams, PlatoonModel, PlatoonState, build_model, equilibrium_spacing
from .datagen import DataArchive, HankelBlocks, collect_archive, partition_hankels
from .sysid import NoiseSpec, ReachTube, SystemSet, default_noise, error_reach_tube, estimate_system_set
from .gainsynth import GainResult, required_sample_count, synthesize_gain, validate_gain
from .qp import BoxQP
from .ctrl import ControllerSpec, RecentWindow, solve_deepc, solve_mpc, solve_rdeep
from .harness import ScenarioConfig, compare_datasets, metric_rm, metric_rs, prepare_dataset, run_scenario

__version__ = "0.1.0"
