"""Speech intelligibility in noise: scoring, features, and paraphrase ranking."""

from importlib import resources
from pathlib import Path

__version__ = "0.1.0"


def default_lexicon_path() -> Path:
    """Path of the packaged pronouncing dictionary."""
    return Path(resources.files("pararank") / "data" / "lexicon.dict")


def default_g2p_rules_path() -> Path:
    """Path of the packaged letter-to-phoneme fallback rules."""
    return Path(resources.files("pararank") / "data" / "g2p_rules.tsv")
