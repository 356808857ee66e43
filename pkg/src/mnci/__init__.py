"""Inductive temporal-network node embeddings from neighborhood and community influences."""

from mnci.errors import (
    ConfigError,
    ContractError,
    DataError,
    MNCIError,
    NumericError,
    ParseError,
)
from mnci.ingest import Event, NeighborHistory, TemporalGraph, parse_edge_list, parse_labels
from mnci.trainer import TrainConfig, TrainResult, train

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ContractError",
    "DataError",
    "Event",
    "MNCIError",
    "NeighborHistory",
    "NumericError",
    "ParseError",
    "TemporalGraph",
    "TrainConfig",
    "TrainResult",
    "parse_edge_list",
    "parse_labels",
    "train",
]
