"""Fuzzy clustering of ordinal time series (Rust core)."""

from ._otsclust import (
    DistanceMatrix,
    Partition,
    Series,
    agreement,
    cluster,
    distance_matrix,
    features,
    fuzzy_cmedoids,
    mds_2d,
    scenario,
    select_lags,
)

__all__ = [
    "DistanceMatrix",
    "Partition",
    "Series",
    "agreement",
    "cluster",
    "distance_matrix",
    "features",
    "fuzzy_cmedoids",
    "mds_2d",
    "scenario",
    "select_lags",
]
