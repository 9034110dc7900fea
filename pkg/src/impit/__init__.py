"""Episodic environmental index toolkit.

Extracts discrete episodes from environmental time series, builds the
parametrised weighted-intensity index family over them, and calibrates the
parameters against a response series via stage-wise correlation maps.
"""

from .episodes import Episode, EpisodeSet, extract_climatology, extract_periodic, extract_threshold, load_episodes
from .index import EvaluationSchedule, IndexSeries, evaluate
from .intensity import IntensityKind, intensity
from .stats import AssociationResult, ResponseSeries, align, moving_average, pearson
from .timeline import Resolution, Season, Signal, ingest_signal, season_overlap_length
from .weights import WeightParams, combined_weight, nu, w1_persistence, w2_recency, w3_timing

__version__ = "0.1.0"

__all__ = [
    "Episode",
    "EpisodeSet",
    "EvaluationSchedule",
    "IndexSeries",
    "IntensityKind",
    "AssociationResult",
    "ResponseSeries",
    "Resolution",
    "Season",
    "Signal",
    "WeightParams",
    "align",
    "combined_weight",
    "evaluate",
    "extract_climatology",
    "extract_periodic",
    "extract_threshold",
    "ingest_signal",
    "intensity",
    "load_episodes",
    "moving_average",
    "nu",
    "pearson",
    "season_overlap_length",
    "w1_persistence",
    "w2_recency",
    "w3_timing",
]
