"""Static cost model: parameter counts and decode-time cache footprints.

Both costs are computed from parameter shapes and instance hyperparameters,
so no arrays are materialized; scoring a wide backbone stays sub-second.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .genome import BackboneGenome
from .model import CompiledBackbone, LivInstance, ModelDims, compile_backbone
from .pool import OptionPool


@dataclass(frozen=True)
class InstanceCost:
    index: int
    name: str
    params: int
    cache_bytes: int


@dataclass(frozen=True)
class CostReport:
    params: int
    cache_bytes: int
    seq_len: int
    bytes_per_element: int
    per_instance: tuple[InstanceCost, ...] = field(default_factory=tuple)

    @property
    def params_millions(self) -> float:
        return self.params / 1e6

    @property
    def cache_megabytes(self) -> float:
        return self.cache_bytes / 2**20


def parameter_count(model: CompiledBackbone, include_embeddings: bool = False) -> int:
    total = 0
    for spec in model.param_specs.values():
        if not include_embeddings and spec.kind in ("embed", "head"):
            continue
        total += math.prod(spec.shape)
    return total


def _instance_params(model: CompiledBackbone, index: int) -> int:
    return sum(math.prod(s.shape) for s in model.param_specs.values()
               if s.owner == index)


def instance_cache_bytes(inst: LivInstance, dims: ModelDims, seq_len: int,
                         bytes_per_element: int = 2) -> int:
    """Decode-state bytes one instance holds while generating."""
    d = dims.width
    if inst.family == "attention":
        # one sequence of keys and one of values, unless routed from a producer
        owned = [r for r in ("k", "v") if r not in inst.consumes]
        per_branch = len(owned) * seq_len * inst.kv_channels * bytes_per_element
    elif inst.family == "recurrence":
        state = d * inst.state_size * bytes_per_element
        conv_tail = (inst.kernel_len - 1) * d * bytes_per_element
        per_branch = state + conv_tail
    elif inst.family == "convolution":
        kernel_len = inst.kernel_len if inst.kernel_len is not None else seq_len
        per_branch = (kernel_len - 1) * d * bytes_per_element
    elif inst.family == "memoryless":
        per_branch = 0
    else:
        raise ValueError(f"unknown family {inst.family}")
    return per_branch * inst.branches


def cache_bytes(model: CompiledBackbone, seq_len: int,
                bytes_per_element: int = 2) -> int:
    return sum(instance_cache_bytes(inst, model.dims, seq_len, bytes_per_element)
               for inst in model.instances)


def cost_report(model: CompiledBackbone, seq_len: int,
                bytes_per_element: int = 2) -> CostReport:
    per_instance = tuple(
        InstanceCost(inst.index, inst.name, _instance_params(model, inst.index),
                     instance_cache_bytes(inst, model.dims, seq_len, bytes_per_element))
        for inst in model.instances)
    return CostReport(
        params=parameter_count(model),
        cache_bytes=sum(c.cache_bytes for c in per_instance),
        seq_len=seq_len,
        bytes_per_element=bytes_per_element,
        per_instance=per_instance)


def genome_cost_report(genome: BackboneGenome, dims: ModelDims,
                       pool: OptionPool | None = None, seq_len: int = 4096,
                       bytes_per_element: int = 2) -> CostReport:
    """Cost report straight from a genome; never materializes parameters."""
    model = compile_backbone(genome, dims, pool)
    return cost_report(model, seq_len, bytes_per_element)
