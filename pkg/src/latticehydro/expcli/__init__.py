from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .results import ResultTable, Row, convergence, convergence_table, read_csv
from .runner import run_experiment


def render_plots(results, outdir, prefix="result"):
    from .plots import render_plots as _render

    return _render(results, outdir, prefix)


__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ResultTable",
    "Row",
    "convergence",
    "convergence_table",
    "load_config",
    "parse_config",
    "read_csv",
    "render_plots",
    "run_experiment",
]
