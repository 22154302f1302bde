"""Retweet-network influence, account leaning, and trigram narrative dynamics."""

__version__ = "0.1.0"

from .corpus import StudyWindow, Tweet, assign_period, assign_week, parse_corpus, read_corpus  # noqa: E402
from .graph import RetweetNetwork, build_network, centrality_report, influence  # noqa: E402
from .kernels import BACKEND  # noqa: E402

__all__ = [
    "BACKEND",
    "RetweetNetwork",
    "StudyWindow",
    "Tweet",
    "assign_period",
    "assign_week",
    "build_network",
    "centrality_report",
    "influence",
    "parse_corpus",
    "read_corpus",
]
