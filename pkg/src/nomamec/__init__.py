"""Resource allocation for a user-helper-AP edge computing system with NOMA uplink.

Two problems are solved exactly: weighted energy minimization under a
deadline (:func:`solve_p1`) and weighted offloaded-data maximization
(:func:`solve_p2`). Benchmarks, brute-force oracles and a Monte Carlo sweep
harness sit alongside.
"""

from .baselines import noma_data_max, noma_energy_min, tdma_data_max, tdma_energy_min
from .data_max import solve_p2, solve_p2_high_snr
from .energy_min import solve_p1, solve_p1_helper_idle
from .errors import *  # noqa: F401,F403
from .oracle import MeshSpec, oracle_p1, oracle_p2
from .simharness import ChannelModel, SweepConfig, gen_channels, run_sweep, table_one_params, write_csv
from .system_model import Allocation, ChannelGains, DeviceCaps, SystemParams, TaskLoad

__version__ = "0.1.0"
