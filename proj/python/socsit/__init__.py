"""Social-situation consensus simulator."""

from ._socsit import (
    ConfigError,
    MetricsError,
    Opinion,
    OpinionError,
    SchemaError,
    adjusted_rand_index,
    decide,
    expectation,
    floor_uncertainty,
    force_step,
    fuse_averaging,
    fuse_averaging_multi,
    fuse_cumulative,
    generate,
    jaccard_index,
    rand_index,
    resolve_conflict,
    run_scenario,
    run_scenario_file,
)

__all__ = [
    "ConfigError",
    "MetricsError",
    "Opinion",
    "OpinionError",
    "SchemaError",
    "adjusted_rand_index",
    "decide",
    "expectation",
    "floor_uncertainty",
    "force_step",
    "fuse_averaging",
    "fuse_averaging_multi",
    "fuse_cumulative",
    "generate",
    "jaccard_index",
    "rand_index",
    "resolve_conflict",
    "run_scenario",
    "run_scenario_file",
]
