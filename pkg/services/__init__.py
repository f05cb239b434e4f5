"""
Hybrid AN Secrecy Services
"""
from .an_design import design_precoders, power_split, simulate_block
from .asymptotics import bound_report
from .montecarlo import MonteCarloRunner, run_point, run_sweep
from .ofdm_model import build_time_ops, draw_channel, load_config
from .rates import secrecy_report

__all__ = [
    'MonteCarloRunner', 'bound_report', 'build_time_ops', 'design_precoders', 'draw_channel',
    'load_config', 'power_split', 'run_point', 'run_sweep', 'secrecy_report', 'simulate_block',
]
