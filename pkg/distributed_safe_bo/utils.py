import hashlib
import json
from pathlib import Path
from typing import Any, Union

import numpy as np
from pandas import DataFrame

from distributed_safe_bo.errors import ConfigError

# Fixed spawn keys so that adding a stream never shifts the others.
STREAM_KEYS = {
    "reward_function": 1,
    "initial_parameter": 2,
    "vehicle_parameters": 3,
    "observation_noise": 4,
    "kernel_validation": 5,
    "rkhs_samples": 6,
}


def named_rng(seed: int, stream: str) -> np.random.Generator:
    """
    Returns an independent random generator for one named stream of a master seed.

    Args:
        seed: master seed of the run.
        stream: one of the names in `STREAM_KEYS`.

    Returns:
        :obj:`numpy.random.Generator` that depends only on (seed, stream).

    Examples:
        >>> a = named_rng(3, "observation_noise").normal()
        >>> b = named_rng(3, "observation_noise").normal()
        >>> a == b
        True
    """
    if stream not in STREAM_KEYS:
        raise ConfigError(f"unknown random stream '{stream}'", stream)
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(STREAM_KEYS[stream],)))


def format_float(value: float) -> str:
    # repr gives the shortest string that round-trips an IEEE-754 double
    return repr(float(value))


def format_frame(df: DataFrame) -> DataFrame:
    """
    Converts every float column to its shortest round-trip text so CSV bytes do not depend on pandas defaults.
    """
    out = df.copy()
    for col in out.columns:
        if out[col].dtype.kind == "f":
            out[col] = out[col].map(format_float)
    return out


def write_csv(df: DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    format_frame(df).to_csv(path, index=False, lineterminator="\n")
    return path


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default)


def config_hash(obj: Any) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=_json_default).encode("utf-8")).hexdigest()


def _json_default(obj: Any):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"object of type {type(obj).__name__} is not JSON serializable")
