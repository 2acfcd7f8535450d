"""Single-process branch traces and round-robin multi-process interleaving."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping, Sequence

from csafsim.errors import ConfigError, TraceStructureError
from csafsim.kernels import KERNEL_NAMES, KERNELS, Recorder, kernel_base
from csafsim.predictors import PredictorConfig
from csafsim.trace import Branch, Switch, Trace

ADVERSARIAL_MODES = ("destructive", "neutral", "constructive")


@dataclass(frozen=True)
class KernelSpec:
    name: str
    size: int | None = None
    seed: int = 1


@dataclass(frozen=True)
class AdversarialSpec:
    mode: str = "destructive"
    pc_block_count: int = 64
    bias: float = 0.95
    length: int = 100_000
    seed: int = 1


def gen_kernel_trace(spec: KernelSpec) -> list[Branch]:
    info = KERNELS.get(spec.name)
    if info is None:
        raise ConfigError(f"unknown kernel {spec.name!r}; known kernels: {', '.join(KERNEL_NAMES)}")
    size = info.default_size if spec.size is None else spec.size
    if not info.min_size <= size <= info.max_size:
        raise ConfigError(f"{spec.name} size {size} outside [{info.min_size}, {info.max_size}]")
    if spec.name == "oscar" and size & (size - 1):
        raise ConfigError("oscar size must be a power of two")
    rec = Recorder(kernel_base(spec.name), info.sites)
    info.run(rec, size, random.Random(spec.seed))
    return rec.events


def gen_adversarial_pair(spec: AdversarialSpec, predictor: PredictorConfig) -> tuple[list[Branch], list[Branch]]:
    """Two processes whose branches alias in the bimodal index space as ``spec.mode`` asks.

    destructive: same indices, A taken with probability ``bias``, B with ``1 - bias``.
    constructive: same indices, both with ``bias``.
    neutral: disjoint indices, both with ``bias``.
    """
    n = predictor.pht_entries
    k = spec.pc_block_count
    if spec.mode not in ADVERSARIAL_MODES:
        raise ConfigError(f"adversarial mode {spec.mode!r} not one of {', '.join(ADVERSARIAL_MODES)}")
    if not 1 <= k <= n:
        raise ConfigError(f"pc_block_count {k} must be in [1, pht_entries={n}]")
    if spec.mode == "neutral" and 2 * k > n:
        raise ConfigError(f"neutral mode needs 2 * pc_block_count <= pht_entries ({2 * k} > {n})")
    if not 0.0 <= spec.bias <= 1.0:
        raise ConfigError(f"bias {spec.bias} not in [0, 1]")
    if spec.length < 0:
        raise ConfigError("length must be >= 0")

    # Tag bits above the index keep the two processes' addresses distinct.
    a_pcs = [(1 * n << 12) + i for i in range(k)]
    if spec.mode == "neutral":
        b_pcs = [(2 * n << 12) + k + i for i in range(k)]
    else:
        b_pcs = [(2 * n << 12) + i for i in range(k)]
    b_bias = 1.0 - spec.bias if spec.mode == "destructive" else spec.bias

    rng = random.Random(spec.seed)

    def emit(pcs, bias):
        return [Branch(pcs[rng.randrange(k)], rng.random() < bias) for _ in range(spec.length)]

    a = emit(a_pcs, spec.bias)
    b = emit(b_pcs, b_bias)
    return a, b


def interleave(traces: Mapping[int, Sequence[Branch]], slice_len: int) -> Trace:
    """Round-robin the processes in ascending pid order, ``slice_len`` branches at a time.

    A switch marker precedes each change of running process. Once only one
    process is left its remaining slices run back to back with no marker.
    """
    if slice_len < 1:
        raise ConfigError("slice_len must be >= 1")
    pending = {pid: list(t) for pid, t in sorted(traces.items()) if len(t)}
    if not pending:
        raise TraceStructureError("nothing to interleave: every trace is empty")
    pos = dict.fromkeys(pending, 0)
    out: Trace = []
    running = None
    while pending:
        for pid in list(pending):
            t = pending[pid]
            chunk = t[pos[pid] : pos[pid] + slice_len]
            if pid != running:
                out.append(Switch(pid))
                running = pid
            out.extend(chunk)
            pos[pid] += len(chunk)
            if pos[pid] >= len(t):
                del pending[pid]
    return out


def kernel_workload(
    names: Sequence[str] = KERNEL_NAMES,
    sizes: Mapping[str, int] | None = None,
    seed: int = 1,
) -> dict[int, tuple[str, list[Branch]]]:
    """pid -> (kernel name, trace); pids are 1-based in the order given."""
    sizes = sizes or {}
    return {
        pid: (name, gen_kernel_trace(KernelSpec(name, sizes.get(name), seed)))
        for pid, name in enumerate(names, start=1)
    }
