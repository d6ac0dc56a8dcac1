"""Tabular average-reward RL laboratory built around the optimistic sample-path algorithm."""
from .chains import (
    ChainAnalysis,
    MixingCapExceeded,
    NotErgodicError,
    analyze_chain,
    mixing_time,
    pseudo_spectral_gap,
    stationary_distribution,
    tv_distance,
    validate_uniform_ergodicity,
)
from .mdp import (
    EnvState,
    MdpAnalysis,
    MdpModel,
    Policy,
    analyze_mdp,
    env_step,
    generate_ergodic_mdp,
    induced_chain,
    load_mdp,
    validate_mdp,
)
from .osp import OspConfig, RunResult, run_osp
from .paths import ObservationLog, SamplePath, construct_path, extend_path, path_reward_estimate

__version__ = "0.1.0"
