"""Static cost model: parameter counts and decode-cache footprints."""

import numpy as np
import pytest

from livsynth.costs import (cache_bytes, cost_report, genome_cost_report,
                            instance_cache_bytes, parameter_count)
from livsynth.genome import BackboneGenome, LivGene, parse
from livsynth.model import ModelDims, compile_backbone
from livsynth.pool import default_pool
from livsynth.presets import striped_mamba, transformer_plus_plus

POOL = default_pool()
PAPER_DIMS = ModelDims(width=768)


@pytest.fixture(scope="module")
def tpp():
    return compile_backbone(transformer_plus_plus(), PAPER_DIMS, POOL)


@pytest.fixture(scope="module")
def mamba():
    return compile_backbone(striped_mamba(), PAPER_DIMS, POOL)


def test_alternating_attention_baseline_parameter_count(tpp):
    # 12 * 4 * 768^2 attention + 12 * 3 * 768 * 2048 gated-mlp + 19200 norm gains
    assert parameter_count(tpp) == 84_953_856
    core = 12 * 4 * 768**2 + 12 * 3 * 768 * 2048
    assert parameter_count(tpp) - core == 25 * 768  # 24 block norms + final norm


def test_alternating_attention_baseline_cache_is_exact(tpp):
    assert cache_bytes(tpp, 4096, 2) == 150_994_944
    assert cache_bytes(tpp, 4096, 2) == 12 * 2 * 4096 * 768 * 2


def test_striped_recurrence_baseline_costs(mamba):
    assert parameter_count(mamba) == 79_394_496
    assert cache_bytes(mamba, 4096, 2) == 25_442_304


def test_parameter_count_can_include_embeddings(tpp):
    with_embed = parameter_count(tpp, include_embeddings=True)
    v, d = PAPER_DIMS.vocab, PAPER_DIMS.width
    assert with_embed - parameter_count(tpp) == 2 * v * d


def test_empty_backbone_has_no_cache_and_only_final_norm():
    model = compile_backbone(BackboneGenome((), 32), ModelDims(width=32), POOL)
    assert cache_bytes(model, 4096) == 0
    assert parameter_count(model) == 32  # final norm gain


def test_per_instance_costs_sum_to_totals(tpp):
    report = cost_report(tpp, 4096, 2)
    assert sum(c.params for c in report.per_instance) == report.params - 768
    assert sum(c.cache_bytes for c in report.per_instance) == report.cache_bytes


def test_memoryless_instance_parameter_shape():
    model = compile_backbone(parse("91111", width=768), PAPER_DIMS, POOL)
    d, h = 768, PAPER_DIMS.gmemless_hidden()
    assert parameter_count(model) == 3 * d * h + 2 * d  # + block and final norms


def test_attention_cache_grows_linearly_with_sequence():
    model = compile_backbone(parse("11111", width=768), PAPER_DIMS, POOL)
    c1, c2 = cache_bytes(model, 1024), cache_bytes(model, 2048)
    assert c2 == 2 * c1 > 0


def test_fixed_state_classes_have_sequence_independent_cache():
    for text in ("51111", "61111", "71111", "91111"):
        model = compile_backbone(parse(text, width=768), PAPER_DIMS, POOL)
        assert cache_bytes(model, 1024) == cache_bytes(model, 8192)


def test_long_convolution_cache_tracks_sequence_length():
    model = compile_backbone(parse("81111", width=768), PAPER_DIMS, POOL)
    assert cache_bytes(model, 1024, 2) == 1023 * 768 * 2
    assert cache_bytes(model, 2048, 2) == 2047 * 768 * 2


def test_recurrence_cache_is_state_plus_conv_tail():
    model = compile_backbone(parse("51111", width=768), PAPER_DIMS, POOL)
    d = 768
    assert cache_bytes(model, 4096, 2) == (d * 16 + 2 * d) * 2


def test_differential_classes_double_params_and_cache():
    base = compile_backbone(parse("11111", width=768), PAPER_DIMS, POOL)
    diff = compile_backbone(parse("10,1,1,1,1", width=768), PAPER_DIMS, POOL)
    # doubled everything except the single norm gain per instance
    assert parameter_count(diff) - 768 * 2 == 2 * (parameter_count(base) - 768 * 2)
    assert cache_bytes(diff, 4096) == 2 * cache_bytes(base, 4096)


def test_grouped_query_variants_shrink_kv_cache():
    full = compile_backbone(parse("11111", width=768), PAPER_DIMS, POOL)
    gqa4 = compile_backbone(parse("31111", width=768), PAPER_DIMS, POOL)
    gqa2 = compile_backbone(parse("41111", width=768), PAPER_DIMS, POOL)
    assert cache_bytes(gqa4, 4096) == cache_bytes(full, 4096) // 4
    assert cache_bytes(gqa2, 4096) == cache_bytes(full, 4096) // 2


def test_routed_kv_halves_the_consumer_cache():
    plain = parse("1,1,1,1,1-1,2,1,2,1", width=768)
    routed = parse("1,1,1,1,4-1,2,1,1,4", width=768)  # strategy 4 shares {k, v}
    c_plain = genome_cost_report(plain, PAPER_DIMS, POOL).cache_bytes
    c_routed = genome_cost_report(routed, PAPER_DIMS, POOL).cache_bytes
    assert c_routed == c_plain // 2


def test_featurizer_sharing_reduces_params_not_cache():
    plain = parse("1,1,1,1,1-1,2,1,2,1", width=768)
    shared = parse("1,1,2,1,1-1,1,2,2,1", width=768)
    r_plain = genome_cost_report(plain, PAPER_DIMS, POOL)
    r_shared = genome_cost_report(shared, PAPER_DIMS, POOL)
    assert r_shared.params < r_plain.params
    assert r_shared.cache_bytes == r_plain.cache_bytes


def test_report_unit_properties(tpp):
    report = cost_report(tpp, 4096, 2)
    assert report.params_millions == pytest.approx(84.953856)
    assert report.cache_megabytes == pytest.approx(144.0)


def test_genome_cost_report_leaves_params_unmaterialized():
    genome = transformer_plus_plus()
    report = genome_cost_report(genome, PAPER_DIMS, POOL)
    assert report.params == 84_953_856
    # lazily specified: a fresh compile has no arrays allocated
    model = compile_backbone(genome, PAPER_DIMS, POOL)
    assert model.params is None


def test_instance_cache_rejects_unknown_family(tpp):
    inst = tpp.instances[0]
    inst2 = type(inst)(**{**inst.__dict__, "family": "mystery"})
    with pytest.raises(ValueError):
        instance_cache_bytes(inst2, PAPER_DIMS, 4096)
