"""Option pool: class registry, operator tuples, featurizer rows, strategies."""

import pytest

from livsynth.pool import (FEATURIZER_CLASSES, MAX_FEATURE_GROUPS, ZERO_GROUP,
                           PoolError, default_pool, expand_liv_class,
                           featurizer_genome)


@pytest.fixture(scope="module")
def pool():
    return default_pool()


def test_pool_has_seventeen_classes(pool):
    assert pool.class_ids() == list(range(1, 18))


@pytest.mark.parametrize("class_id,expected", [
    (1, (1, 2, 1, 2, 3)),
    (5, (5, 4, 1, 1, 1)),
    (7, (7, 3, 1, 1, 1)),
    (9, (9, 1, 1, 4, 2)),
])
def test_operator_tuples_for_base_classes(pool, class_id, expected):
    assert expand_liv_class(class_id, pool).as_tuple() == expected


def test_remaining_base_tuples(pool):
    assert expand_liv_class(2, pool).as_tuple() == (2, 2, 1, 2, 3)
    assert expand_liv_class(3, pool).as_tuple() == (3, 2, 1, 2, 3)
    assert expand_liv_class(4, pool).as_tuple() == (4, 2, 1, 2, 3)
    assert expand_liv_class(6, pool).as_tuple() == (6, 4, 1, 1, 1)
    assert expand_liv_class(8, pool).as_tuple() == (8, 3, 1, 1, 1)


def test_differential_variants_mirror_base_tuple_with_flag(pool):
    for base_id in range(1, 9):
        diff = expand_liv_class(base_id + 9, pool)
        base = expand_liv_class(base_id, pool)
        assert diff.as_tuple() == base.as_tuple()
        assert diff.differential and not base.differential


def test_memoryless_class_has_no_differential_variant(pool):
    assert 18 not in pool
    assert not expand_liv_class(9, pool).differential


def test_unknown_class_raises_pool_error(pool):
    with pytest.raises(PoolError):
        expand_liv_class(99, pool)
    with pytest.raises(PoolError):
        pool.spec(0)


def test_featurizer_genomes_padded_to_five_rows():
    for class_id in range(1, 10):
        rows = featurizer_genome(class_id)
        assert len(rows) == MAX_FEATURE_GROUPS
        used = FEATURIZER_CLASSES[class_id]
        assert rows[:len(used)] == used
        assert all(r == ZERO_GROUP for r in rows[len(used):])


def test_featurizer_rows_are_seven_integers_each():
    for rows in FEATURIZER_CLASSES.values():
        for row in rows:
            tup = row.as_tuple()
            assert len(tup) == 7
            assert all(isinstance(v, int) for v in tup)


def test_grouped_query_repeat_factors():
    # last two groups of the grouped-query featurizers carry the repeat factor
    assert [g.repeat_factor for g in FEATURIZER_CLASSES[3]] == [1, 4, 4]
    assert [g.repeat_factor for g in FEATURIZER_CLASSES[4]] == [1, 2, 2]


def test_recurrence_expansion_factors():
    assert [g.expansion_factor for g in FEATURIZER_CLASSES[5]] == [1, 1, 1, 16, 16]
    assert [g.expansion_factor for g in FEATURIZER_CLASSES[6]] == [1, 1, 1, 2, 2]


def test_strategy_lists_enumerate_subsets_of_shareable_groups(pool):
    sa = pool.strategies(1)
    assert sa == ((), ("k",), ("v",), ("k", "v"))
    assert pool.strategy_count(1) == 4
    rec = pool.strategies(5)
    assert rec == ((), ("b",), ("c",), ("b", "c"))
    conv = pool.strategies(7)
    assert conv == ((), ("kernel",), ("gate",), ("kernel", "gate"))
    mem = pool.strategies(9)
    assert mem == ((), ("gate",), ("up",), ("gate", "up"))


def test_strategy_count_is_power_of_two_of_shareable_set(pool):
    for cid in pool.class_ids():
        spec = pool.spec(cid)
        assert pool.strategy_count(cid) == 2 ** len(spec.shareable)


def test_base_spec_resolves_differential_to_base(pool):
    assert pool.base_spec(14).class_id == 5
    assert pool.base_spec(14).state_size == 16
    assert pool.base_spec(5).class_id == 5
