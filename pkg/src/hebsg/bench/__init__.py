"""Benchmark harness: experiment configs, presets, CSV traces, plots and the ``hebsg`` CLI."""

from hebsg.bench.config import ConfigError, ExperimentConfig, load_config, parse_config
from hebsg.bench.datasets import LibsvmFormatError, load_libsvm
from hebsg.bench.plots import emit_plot
from hebsg.bench.runner import ExperimentResult, run_experiment
from hebsg.bench.traces import read_trace_csv, write_trace_csv

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentResult",
    "LibsvmFormatError",
    "emit_plot",
    "load_config",
    "load_libsvm",
    "parse_config",
    "read_trace_csv",
    "run_experiment",
    "write_trace_csv",
]
