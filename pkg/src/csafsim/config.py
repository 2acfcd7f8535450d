"""Flat ``key = value`` experiment configuration.

Lines are ``key = value``; ``#`` starts a comment; blank lines are ignored.
Every key is optional. Unknown keys and bad values raise ConfigError naming
the key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

from csafsim.csaf import MODES
from csafsim.errors import ConfigError
from csafsim.kernels import KERNEL_NAMES
from csafsim.predictors import FAMILIES, PredictorConfig
from csafsim.simulation import DISTURBANCES
from csafsim.workload import ADVERSARIAL_MODES, AdversarialSpec

SOURCES = ("kernels", "adversarial", "trace")


def _int(text: str) -> int:
    return int(text, 0)


def _float(text: str) -> float:
    v = float(text)
    if math.isnan(v):
        raise ValueError("nan")
    return v


def _names(text: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(s, 0) for s in _names(text))


def _sizes(text: str) -> tuple[tuple[str, int], ...]:
    out = []
    for item in _names(text):
        name, _, n = item.partition(":")
        out.append((name.strip(), int(n, 0)))
    return tuple(out)


def _optional_int(text: str) -> int | None:
    return None if text.lower() in ("", "auto") else int(text, 0)


# key -> (parser, default text)
SCHEMA: dict[str, tuple[Callable[[str], object], str]] = {
    "predictor.family": (str, "bimode"),
    "predictor.pht_entries": (_int, "128"),
    "predictor.counter_width": (_int, "2"),
    "predictor.history_bits": (_optional_int, "auto"),
    "predictor.init_value": (_int, "1"),
    "csaf.mode": (str, "csaf"),
    "csaf.threshold": (_float, "0.25"),
    "csaf.table_capacity": (_int, "64"),
    "workload.source": (str, "kernels"),
    "workload.kernels": (_names, ",".join(KERNEL_NAMES)),
    "workload.sizes": (_sizes, ""),
    "workload.trace": (str, ""),
    "workload.adversarial.mode": (str, "destructive"),
    "workload.adversarial.pc_blocks": (_int, "64"),
    "workload.adversarial.bias": (_float, "0.95"),
    "workload.adversarial.length": (_int, "100000"),
    "slice_len": (_int, "10000"),
    "window": (_int, "1000"),
    "seed": (_int, "1"),
    "output_dir": (str, "out"),
    "transient.disturbances": (_names, "invert,reset"),
    "transient.period": (_int, "10000"),
    "transient.sizes": (_ints, ""),
}


@dataclass(frozen=True)
class WorkloadConfig:
    source: str = "kernels"
    kernels: tuple[str, ...] = KERNEL_NAMES
    sizes: tuple[tuple[str, int], ...] = ()
    trace_path: str = ""
    adversarial: AdversarialSpec = field(default_factory=AdversarialSpec)


@dataclass(frozen=True)
class ExperimentConfig:
    predictor: PredictorConfig
    mode: str
    threshold: float
    table_capacity: int
    workload: WorkloadConfig
    slice_len: int
    window: int
    seed: int
    output_dir: str
    disturbances: tuple[str, ...]
    period: int
    transient_sizes: tuple[int, ...]


def _split(line: str, lineno: int) -> tuple[str, str] | None:
    line = line.split("#", 1)[0].strip()
    if not line:
        return None
    key, sep, value = line.partition("=")
    if not sep:
        raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
    return key.strip(), value.strip()


def parse_config(text: str, overrides: Iterable[str] = ()) -> ExperimentConfig:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        kv = _split(line, lineno)
        if kv is not None:
            raw[kv[0]] = kv[1]
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        raw[key.strip()] = value.strip()

    unknown = sorted(set(raw) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown configuration key(s): {', '.join(unknown)}")

    v: dict[str, object] = {}
    for key, (parse, default) in SCHEMA.items():
        text_value = raw.get(key, default)
        try:
            v[key] = parse(text_value)
        except ValueError:
            raise ConfigError(f"{key}: malformed value {text_value!r}") from None
    return _build(v)


def _check(cond: bool, key: str, message: str) -> None:
    if not cond:
        raise ConfigError(f"{key}: {message}")


def _build(v: dict) -> ExperimentConfig:
    _check(v["predictor.family"] in FAMILIES, "predictor.family", f"must be one of {', '.join(FAMILIES)}")
    predictor = PredictorConfig(
        family=v["predictor.family"],
        pht_entries=v["predictor.pht_entries"],
        counter_width=v["predictor.counter_width"],
        history_bits=v["predictor.history_bits"],
        init_value=v["predictor.init_value"],
    )
    _check(v["csaf.mode"] in MODES, "csaf.mode", f"must be one of {', '.join(MODES)}")
    _check(v["csaf.threshold"] >= 0, "csaf.threshold", "must be >= 0")
    _check(v["csaf.table_capacity"] >= 0, "csaf.table_capacity", "must be >= 0")

    source = v["workload.source"]
    _check(source in SOURCES, "workload.source", f"must be one of {', '.join(SOURCES)}")
    kernels = v["workload.kernels"]
    _check(len(kernels) > 0, "workload.kernels", "needs at least one kernel")
    for name in kernels:
        _check(name in KERNEL_NAMES, "workload.kernels", f"unknown kernel {name!r}")
    _check(len(set(kernels)) == len(kernels), "workload.kernels", "duplicate kernel")
    for name, n in v["workload.sizes"]:
        _check(name in KERNEL_NAMES, "workload.sizes", f"unknown kernel {name!r}")
    if source == "trace":
        _check(bool(v["workload.trace"]), "workload.trace", "required when workload.source = trace")

    adv_mode = v["workload.adversarial.mode"]
    _check(adv_mode in ADVERSARIAL_MODES, "workload.adversarial.mode", f"must be one of {', '.join(ADVERSARIAL_MODES)}")
    blocks = v["workload.adversarial.pc_blocks"]
    _check(1 <= blocks <= predictor.pht_entries, "workload.adversarial.pc_blocks", "must be in [1, pht_entries]")
    if adv_mode == "neutral":
        _check(2 * blocks <= predictor.pht_entries, "workload.adversarial.pc_blocks", "neutral needs 2 * pc_blocks <= pht_entries")
    _check(0 <= v["workload.adversarial.bias"] <= 1, "workload.adversarial.bias", "must be in [0, 1]")
    _check(v["workload.adversarial.length"] >= 1, "workload.adversarial.length", "must be >= 1")

    _check(v["slice_len"] >= 1, "slice_len", "must be >= 1")
    _check(v["window"] >= 1, "window", "must be >= 1")
    _check(v["seed"] >= 0, "seed", "must be >= 0")
    _check(bool(v["output_dir"]), "output_dir", "must not be empty")
    for d in v["transient.disturbances"]:
        _check(d in DISTURBANCES, "transient.disturbances", f"unknown disturbance {d!r}")
    _check(len(v["transient.disturbances"]) > 0, "transient.disturbances", "needs at least one disturbance")
    _check(v["transient.period"] >= 1, "transient.period", "must be >= 1")
    for size in v["transient.sizes"]:
        _check(size >= 1 and size & (size - 1) == 0, "transient.sizes", f"{size} is not a power of two")

    workload = WorkloadConfig(
        source=source,
        kernels=kernels,
        sizes=v["workload.sizes"],
        trace_path=v["workload.trace"],
        adversarial=AdversarialSpec(
            mode=adv_mode,
            pc_block_count=blocks,
            bias=v["workload.adversarial.bias"],
            length=v["workload.adversarial.length"],
            seed=v["seed"],
        ),
    )
    return ExperimentConfig(
        predictor=predictor,
        mode=v["csaf.mode"],
        threshold=v["csaf.threshold"],
        table_capacity=v["csaf.table_capacity"],
        workload=workload,
        slice_len=v["slice_len"],
        window=v["window"],
        seed=v["seed"],
        output_dir=v["output_dir"],
        disturbances=v["transient.disturbances"],
        period=v["transient.period"],
        transient_sizes=v["transient.sizes"],
    )
