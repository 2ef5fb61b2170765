"""Option pool: LIV classes, operator genomes, featurizer genomes, sharing strategies."""

from __future__ import annotations

from dataclasses import dataclass, field


class PoolError(KeyError):
    """Raised for class ids that are not part of the option pool."""


# Operator-genome field values.
TOKEN_DIAGONAL = 1
TOKEN_LOW_RANK = 2
TOKEN_TOEPLITZ = 3
TOKEN_SEMISEPARABLE = 4

SPARSITY_NONE = 1
SPARSITY_BANDED = 2

NONLIN_NONE = 1
NONLIN_SOFTMAX = 2
NONLIN_RELU = 3
NONLIN_SWISH = 4

CHANNEL_DIAGONAL = 1
CHANNEL_DENSE = 2
CHANNEL_GROUPED = 3

# Featurizer parametrization modes.
PARAM_INPUT_PROJECTION = 1
PARAM_EXPLICIT = 2
PARAM_IMPLICIT = 3


@dataclass(frozen=True)
class OperatorGenome:
    """Five-integer descriptor of a single LIV, plus the differential marker."""

    featurizer_class: int
    token_mixing: int
    sparsity_mask: int
    nonlinearity: int
    channel_mixing: int
    differential: bool = False

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (
            self.featurizer_class,
            self.token_mixing,
            self.sparsity_mask,
            self.nonlinearity,
            self.channel_mixing,
        )


@dataclass(frozen=True)
class FeatureGroupSpec:
    """One row of a featurizer genome (seven integers per feature group)."""

    token_mixing: int
    sparsity_mask: int
    nonlinearity: int
    channel_mixing: int
    parametrization_mode: int
    expansion_factor: int
    repeat_factor: int

    def as_tuple(self) -> tuple[int, ...]:
        return (
            self.token_mixing,
            self.sparsity_mask,
            self.nonlinearity,
            self.channel_mixing,
            self.parametrization_mode,
            self.expansion_factor,
            self.repeat_factor,
        )


ZERO_GROUP = FeatureGroupSpec(0, 0, 0, 0, 0, 0, 0)
MAX_FEATURE_GROUPS = 5


def _proj_group(expansion: int = 1, repeat: int = 1, toeplitz: bool = False,
                channel: int = CHANNEL_DENSE, mode: int = PARAM_INPUT_PROJECTION) -> FeatureGroupSpec:
    token = TOKEN_TOEPLITZ if toeplitz else TOKEN_DIAGONAL
    return FeatureGroupSpec(token, SPARSITY_NONE, NONLIN_NONE, channel, mode, expansion, repeat)


# Featurizer classes 1..9. Each is a list of FeatureGroupSpec, one per feature group.
FEATURIZER_CLASSES: dict[int, tuple[FeatureGroupSpec, ...]] = {
    # q/k/v linear projections
    1: tuple(_proj_group() for _ in range(3)),
    # q/k/v with short depthwise convolutions
    2: tuple(_proj_group(toeplitz=True) for _ in range(3)),
    # grouped-query style: repeat factor 4 on the last two groups (k, v)
    3: (_proj_group(), _proj_group(repeat=4), _proj_group(repeat=4)),
    4: (_proj_group(), _proj_group(repeat=2), _proj_group(repeat=2)),
    # recurrence featurizers: z/a/x plus state-expanded b/c
    5: (_proj_group(toeplitz=True), _proj_group(toeplitz=True), _proj_group(toeplitz=True),
        _proj_group(expansion=16, toeplitz=True), _proj_group(expansion=16, toeplitz=True)),
    6: (_proj_group(toeplitz=True), _proj_group(toeplitz=True), _proj_group(toeplitz=True),
        _proj_group(expansion=2, toeplitz=True), _proj_group(expansion=2, toeplitz=True)),
    # gated-convolution featurizers: diagonal scales plus an explicit/implicit kernel group
    7: (_proj_group(toeplitz=True, channel=CHANNEL_DIAGONAL),
        FeatureGroupSpec(TOKEN_TOEPLITZ, SPARSITY_BANDED, NONLIN_NONE, CHANNEL_DIAGONAL,
                         PARAM_EXPLICIT, 1, 1),
        _proj_group(toeplitz=True, channel=CHANNEL_DIAGONAL)),
    8: (_proj_group(toeplitz=True, channel=CHANNEL_DIAGONAL),
        FeatureGroupSpec(TOKEN_TOEPLITZ, SPARSITY_NONE, NONLIN_NONE, CHANNEL_DIAGONAL,
                         PARAM_IMPLICIT, 1, 1),
        _proj_group(toeplitz=True, channel=CHANNEL_DIAGONAL)),
    # gated memoryless unit: gate/up projections (hidden width set by the model dims)
    9: (_proj_group(expansion=3), _proj_group(expansion=3)),
}


def featurizer_genome(featurizer_class: int) -> tuple[FeatureGroupSpec, ...]:
    """Featurizer genome padded with all-zero rows up to MAX_FEATURE_GROUPS."""
    if featurizer_class not in FEATURIZER_CLASSES:
        raise PoolError(f"unknown featurizer class {featurizer_class}")
    groups = FEATURIZER_CLASSES[featurizer_class]
    return groups + (ZERO_GROUP,) * (MAX_FEATURE_GROUPS - len(groups))


@dataclass(frozen=True)
class LivClassSpec:
    class_id: int
    name: str
    operator: OperatorGenome
    groups: tuple[str, ...]
    shareable: tuple[str, ...]
    family: str  # "attention" | "recurrence" | "convolution" | "memoryless"
    kv_repeat: int = 1
    state_size: int = 0
    kernel_len: int | None = None  # None means kernel spans the sequence

    @property
    def strategies(self) -> tuple[tuple[str, ...], ...]:
        """Ordered subsets of the shareable groups; index 0 is the empty subset."""
        out: list[tuple[str, ...]] = [()]
        for size in range(1, len(self.shareable) + 1):
            out.extend(_subsets(self.shareable, size))
        return tuple(out)


def _subsets(items: tuple[str, ...], size: int) -> list[tuple[str, ...]]:
    from itertools import combinations

    return [tuple(c) for c in combinations(items, size)]


def _base_classes() -> list[LivClassSpec]:
    sa_groups = ("q", "k", "v")
    sa_share = ("k", "v")
    rec_groups = ("z", "a", "x", "b", "c")
    rec_share = ("b", "c")
    conv_groups = ("b", "kernel", "gate")
    conv_share = ("kernel", "gate")
    return [
        LivClassSpec(1, "SA-1", OperatorGenome(1, 2, 1, 2, 3), sa_groups, sa_share, "attention"),
        LivClassSpec(2, "SA-2", OperatorGenome(2, 2, 1, 2, 3), sa_groups, sa_share, "attention"),
        LivClassSpec(3, "SA-3", OperatorGenome(3, 2, 1, 2, 3), sa_groups, sa_share, "attention",
                     kv_repeat=4),
        LivClassSpec(4, "SA-4", OperatorGenome(4, 2, 1, 2, 3), sa_groups, sa_share, "attention",
                     kv_repeat=2),
        LivClassSpec(5, "Rec-1", OperatorGenome(5, 4, 1, 1, 1), rec_groups, rec_share,
                     "recurrence", state_size=16, kernel_len=3),
        LivClassSpec(6, "Rec-2", OperatorGenome(6, 4, 1, 1, 1), rec_groups, rec_share,
                     "recurrence", state_size=2, kernel_len=3),
        LivClassSpec(7, "GConv-1", OperatorGenome(7, 3, 1, 1, 1), conv_groups, conv_share,
                     "convolution", kernel_len=3),
        LivClassSpec(8, "GConv-2", OperatorGenome(8, 3, 1, 1, 1), conv_groups, conv_share,
                     "convolution", kernel_len=None),
        LivClassSpec(9, "GMemless", OperatorGenome(9, 1, 1, 4, 2), ("gate", "up"),
                     ("gate", "up"), "memoryless"),
    ]


@dataclass
class OptionPool:
    """Registry of LIV classes available to the genome and the compiler."""

    classes: dict[int, LivClassSpec] = field(default_factory=dict)

    def __contains__(self, class_id: int) -> bool:
        return class_id in self.classes

    def spec(self, class_id: int) -> LivClassSpec:
        try:
            return self.classes[class_id]
        except KeyError:
            raise PoolError(f"LIV class {class_id} is not in the option pool") from None

    def class_ids(self) -> list[int]:
        return sorted(self.classes)

    def strategies(self, class_id: int) -> tuple[tuple[str, ...], ...]:
        return self.spec(class_id).strategies

    def strategy_count(self, class_id: int) -> int:
        return len(self.strategies(class_id))

    def base_spec(self, class_id: int) -> LivClassSpec:
        """Spec of the underlying (non-differential) class."""
        spec = self.spec(class_id)
        if spec.operator.differential:
            return self.spec(spec.class_id - 9)
        return spec


def default_pool() -> OptionPool:
    """The 17-class pool: 9 base classes plus differential variants of classes 1-8."""
    classes: dict[int, LivClassSpec] = {}
    for spec in _base_classes():
        classes[spec.class_id] = spec
    for base in _base_classes():
        if base.family == "memoryless":
            continue
        diff_op = OperatorGenome(*base.operator.as_tuple(), differential=True)
        classes[base.class_id + 9] = LivClassSpec(
            base.class_id + 9,
            base.name + "-Diff",
            diff_op,
            base.groups,
            base.shareable,
            base.family,
            kv_repeat=base.kv_repeat,
            state_size=base.state_size,
            kernel_len=base.kernel_len,
        )
    return OptionPool(classes)


def expand_liv_class(class_id: int, pool: OptionPool) -> OperatorGenome:
    """Expand a backbone-genome class id into its operator genome."""
    return pool.spec(class_id).operator
