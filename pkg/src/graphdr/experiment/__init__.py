"""Benchmark driver: configuration, run matrix, tables and plots."""
from .config import AeConfig, ExperimentConfig, load_config
from .report import aggregate, format_mean_std, write_summary
from .runner import RunReport, run_matrix
from .svg import PALETTE, render_scatter_svg

__all__ = ["AeConfig", "ExperimentConfig", "load_config", "aggregate", "format_mean_std", "write_summary",
           "RunReport", "run_matrix", "PALETTE", "render_scatter_svg"]
