import os
from dataclasses import dataclass
from typing import Optional

from dotenv import load_dotenv

load_dotenv()


def _flag(name, default):
    value = os.environ.get(name)
    if value is None or value == "":
        return default
    return value.strip().lower() in ("1", "true", "yes", "on")


def _number(name, default, cast):
    value = os.environ.get(name)
    if value is None or value == "":
        return default
    return cast(value)


@dataclass(frozen=True)
class Settings:
    time_limit: Optional[float] = None
    threads: int = 1
    categorical_cap: int = 12
    log_level: str = "WARNING"
    similar_support: bool = True
    subset_bound: bool = True

    @classmethod
    def from_env(cls):
        return cls(
            time_limit=_number("SPARSETREE_TIME_LIMIT", None, float),
            threads=_number("SPARSETREE_THREADS", 1, int),
            categorical_cap=_number("SPARSETREE_CATEGORICAL_CAP", 12, int),
            log_level=os.environ.get("SPARSETREE_LOG_LEVEL", "WARNING").upper(),
            similar_support=_flag("SPARSETREE_SIMILAR_SUPPORT", True),
            subset_bound=_flag("SPARSETREE_SUBSET_BOUND", True),
        )


@dataclass(frozen=True)
class SearchLimits:
    time_limit: Optional[float] = None
    workers: int = 1
    # Randomizes tie-breaking among equally ranked queue entries.
    seed: Optional[int] = None


@dataclass(frozen=True)
class BoundSwitches:
    """
    One switch per pruning device. Turning any of them off must never change the
    optimal risk, only how much of the search space gets visited.
    """

    equivalent_points: bool = True
    incremental_progress: bool = True
    similar_support: bool = True
    subset_bound: bool = True
    lookahead: bool = True
    leaf_cap: bool = True
    rank_incremental: bool = True
    permutation: bool = True
    leaf_support: bool = True
    scope: bool = True

    def without(self, name):
        values = dict(self.__dict__)
        if name not in values:
            raise KeyError(name)
        values[name] = False
        return BoundSwitches(**values)


settings = Settings.from_env()
