from .export import dumps_sample, loads_sample, read_jsonl, write_csv, write_jsonl
from .rng import derive_seed, derive_trial_seed, mix64

__all__ = [
    "derive_seed",
    "derive_trial_seed",
    "dumps_sample",
    "loads_sample",
    "mix64",
    "read_jsonl",
    "write_csv",
    "write_jsonl",
]
