"""Compile backbone genomes into executable stacks of LIV operators.

Each gene becomes a LivInstance. Featurizer-sharing groups bind the same
parameter keys; feature-group-sharing groups route materialized groups from
the shallowest member to the later ones during the forward pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .genome import BackboneGenome, sharing_groups, validate
from .pool import (CHANNEL_DENSE, CHANNEL_DIAGONAL, CHANNEL_GROUPED,
                   NONLIN_NONE, NONLIN_RELU, NONLIN_SOFTMAX, NONLIN_SWISH,
                   OptionPool, default_pool)
from .rngs import stream


class CompileError(ValueError):
    pass


@dataclass(frozen=True)
class ModelDims:
    width: int = 32
    vocab: int = 32
    seq_len: int = 64
    head_dim: int | None = None
    feat_conv_len: int = 3
    gconv2_basis: int = 8

    def resolved_head_dim(self) -> int:
        if self.head_dim is not None:
            return self.head_dim
        if self.width >= 256 and self.width % 64 == 0:
            return 64
        return min(8, self.width)

    def heads(self) -> int:
        hd = self.resolved_head_dim()
        if self.width % hd != 0:
            raise CompileError(f"width {self.width} not divisible by head dim {hd}")
        return self.width // hd

    def gmemless_hidden(self) -> int:
        # SwiGLU convention: hidden ~ 8/3 * width, padded to a multiple of 8
        return int(math.ceil(self.width * 8 / 3 / 8)) * 8


@dataclass(frozen=True)
class ParamSpec:
    key: str
    shape: tuple[int, ...]
    init: str  # normal | ones | zeros | delta | const
    value: float = 0.02
    owner: int | None = None  # instance index for breakdown; None = embed/head
    kind: str = "featurizer"  # featurizer | operator | norm | embed | head


@dataclass
class FeatureGroupValue:
    role: str
    values: Tensor
    branch: int = 0


# Featurizer roles whose parameters a consumer drops when the group is routed
# from a producer instance.
ROLE_PARAMS = {
    "attention": {"q": ("wq", "kq"), "k": ("wk", "kk"), "v": ("wv", "kv")},
    "recurrence": {"z": ("wz", "kz", "bz"), "a": ("wa", "ka", "ba"),
                   "x": ("wx", "kx"), "b": ("wb", "kb"), "c": ("wc", "kc")},
    "convolution": {"b": ("sb", "fb"), "kernel": ("ker", "wgen"),
                    "gate": ("sg", "fg")},
    "memoryless": {"gate": ("wg",), "up": ("wu",)},
}


@dataclass
class LivInstance:
    index: int
    class_id: int
    name: str
    family: str
    op: "object"  # OperatorGenome
    feat_binding: str
    consumes: dict[str, int] = field(default_factory=dict)  # role -> producer idx
    residual_source: int | None = None
    # resolved hyperparameters
    heads: int = 1
    head_dim: int = 8
    kv_repeat: int = 1
    state_size: int = 0
    kernel_len: int | None = 3
    hidden: int = 0
    featurizer_toeplitz: bool = False

    @property
    def branches(self) -> int:
        return 2 if self.op.differential else 1

    @property
    def kv_heads(self) -> int:
        return self.heads // self.kv_repeat

    @property
    def kv_channels(self) -> int:
        return self.kv_heads * self.head_dim


@dataclass
class CompiledBackbone:
    genome: BackboneGenome
    dims: ModelDims
    pool: OptionPool
    instances: list[LivInstance]
    param_specs: dict[str, ParamSpec]
    seed: int
    params: dict[str, np.ndarray] | None = None
    dtype: type = np.float32

    def materialize(self) -> dict[str, np.ndarray]:
        if self.params is None:
            rng = stream(self.seed, "params")
            params: dict[str, np.ndarray] = {}
            for key in sorted(self.param_specs):
                spec = self.param_specs[key]
                params[key] = _init_array(spec, rng).astype(self.dtype)
            self.params = params
        return self.params

    def param_tensors(self, requires_grad: bool = False) -> dict[str, Tensor]:
        params = self.materialize()
        return {k: Tensor(v, requires_grad=requires_grad) for k, v in params.items()}

    def save_params(self, path) -> None:
        np.savez(path, **self.materialize())

    def load_params(self, path) -> None:
        with np.load(path) as blob:
            self.params = {k: blob[k].astype(self.dtype) for k in blob.files}


def _init_array(spec: ParamSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.init == "normal":
        return rng.normal(0.0, spec.value, size=spec.shape)
    if spec.init == "ones":
        return np.ones(spec.shape)
    if spec.init == "zeros":
        return np.zeros(spec.shape)
    if spec.init == "const":
        return np.full(spec.shape, spec.value)
    if spec.init == "delta":
        # conv kernel initialized near pass-through
        arr = rng.normal(0.0, 0.02, size=spec.shape)
        arr[0] += 1.0
        return arr
    raise ValueError(f"unknown init {spec.init}")


# --- compilation -----------------------------------------------------------------

def compile_backbone(genome: BackboneGenome, dims: ModelDims,
                     pool: OptionPool | None = None, seed: int = 0,
                     dtype=np.float32) -> CompiledBackbone:
    pool = pool or default_pool()
    faults = validate(genome, pool)
    if faults:
        raise CompileError("invalid genome: " + "; ".join(str(f) for f in faults))
    if genome.width != dims.width:
        raise CompileError(f"genome width {genome.width} != dims width {dims.width}")

    heads = dims.heads()
    feat_groups = sharing_groups(genome, "feat")
    group_groups = sharing_groups(genome, "group")

    # featurizer bindings: one shared key per active sharing group
    feat_binding_of: dict[int, str] = {}
    for label, members in feat_groups.items():
        cls = genome.genes[members[0]].liv_class
        key = f"feat.c{cls}.g{label}"
        for m in members:
            feat_binding_of[m] = key

    # feature-group routing: consumer role -> producer instance
    consumes_of: dict[int, dict[str, int]] = {}
    for label, members in group_groups.items():
        gene = genome.genes[members[0]]
        strategies = pool.strategies(gene.liv_class)
        roles = strategies[gene.group_share_strategy - 1]
        producer = members[0]
        for m in members[1:]:
            consumes_of.setdefault(m, {}).update({r: producer for r in roles})

    # residual extension: each later member adds the previous member's output
    residual_of: dict[int, int] = {}
    by_label: dict[int, list[int]] = {}
    for i, gene in enumerate(genome.genes):
        if gene.residual_group is not None:
            by_label.setdefault(gene.residual_group, []).append(i)
    for members in by_label.values():
        for prev, nxt in zip(members, members[1:]):
            residual_of[nxt] = prev

    instances: list[LivInstance] = []
    specs: dict[str, ParamSpec] = {}
    for i, gene in enumerate(genome.genes):
        cls_spec = pool.spec(gene.liv_class)
        base = pool.base_spec(gene.liv_class)
        kv_repeat = math.gcd(heads, base.kv_repeat)
        inst = LivInstance(
            index=i,
            class_id=gene.liv_class,
            name=cls_spec.name,
            family=cls_spec.family,
            op=cls_spec.operator,
            feat_binding=feat_binding_of.get(i, f"feat.i{i}"),
            consumes=consumes_of.get(i, {}),
            residual_source=residual_of.get(i),
            heads=heads,
            head_dim=dims.resolved_head_dim(),
            kv_repeat=kv_repeat,
            state_size=base.state_size,
            kernel_len=base.kernel_len,
            hidden=dims.gmemless_hidden(),
            featurizer_toeplitz=base.operator.featurizer_class in (2, 5, 6, 7, 8),
        )
        instances.append(inst)
        _check_routed_dims(inst, instances, genome)
        _declare_params(inst, dims, specs)
        specs[f"norm.i{i}.g"] = ParamSpec(f"norm.i{i}.g", (dims.width,), "ones",
                                          owner=i, kind="norm")

    d, v = dims.width, dims.vocab
    specs["embed.table"] = ParamSpec("embed.table", (v, d), "normal", 0.02, kind="embed")
    specs["head.w"] = ParamSpec("head.w", (d, v), "normal", 0.02, kind="head")
    specs["final_norm.g"] = ParamSpec("final_norm.g", (d,), "ones", kind="norm")

    return CompiledBackbone(genome, dims, pool, instances, specs, seed, dtype=dtype)


def _check_routed_dims(inst: LivInstance, instances: list[LivInstance],
                       genome: BackboneGenome) -> None:
    for role, producer in inst.consumes.items():
        if producer >= inst.index:
            raise CompileError(
                f"gene {producer} cannot feed gene {inst.index}: sharing is forward-only")
        prod = instances[producer]
        if prod.class_id != inst.class_id:
            raise CompileError(
                f"genes {producer} and {inst.index} share group {role!r} "
                f"across classes {prod.class_id} and {inst.class_id}")


def _declare_params(inst: LivInstance, dims: ModelDims,
                    specs: dict[str, ParamSpec]) -> None:
    d = dims.width
    fb = inst.feat_binding
    owner = inst.index
    conv = dims.feat_conv_len

    def feat(name: str, shape, init="normal", value=0.02):
        for br in range(inst.branches):
            key = f"{fb}.{name}.b{br}"
            if key not in specs:
                specs[key] = ParamSpec(key, tuple(shape), init, value,
                                       owner=owner, kind="featurizer")

    def op(name: str, shape, init="normal", value=0.02):
        for br in range(inst.branches):
            key = f"op.i{inst.index}.{name}.b{br}"
            specs[key] = ParamSpec(key, tuple(shape), init, value,
                                   owner=owner, kind="operator")

    owned = {r for r in _roles(inst) if r not in inst.consumes}
    if inst.family == "attention":
        kvc = inst.kv_channels
        if "q" in owned:
            feat("wq", (d, d))
        if "k" in owned:
            feat("wk", (d, kvc))
        if "v" in owned:
            feat("wv", (d, kvc))
        if inst.featurizer_toeplitz:
            if "q" in owned:
                feat("kq", (conv, d), "delta")
            if "k" in owned:
                feat("kk", (conv, kvc), "delta")
            if "v" in owned:
                feat("kv", (conv, kvc), "delta")
        op("wo", (d, d))
    elif inst.family == "recurrence":
        n = inst.state_size
        if "z" in owned:
            feat("wz", (d, d))
            feat("kz", (conv, d), "delta")
            feat("bz", (d,), "const", 1.0)
        if "a" in owned:
            feat("wa", (d, d))
            feat("ka", (conv, d), "delta")
            feat("ba", (d,), "const", 2.0)
        if "x" in owned:
            feat("wx", (d, d))
            feat("kx", (conv, d), "delta")
        if "b" in owned:
            feat("wb", (d, n))
            feat("kb", (conv, n), "delta")
        if "c" in owned:
            feat("wc", (d, n))
            feat("kc", (conv, n), "delta")
        op("cm", (d,), "ones")
    elif inst.family == "convolution":
        if "b" in owned:
            feat("sb", (d,), "ones")
            feat("fb", (conv, d), "delta")
        if "gate" in owned:
            feat("sg", (d,), "ones")
            feat("fg", (conv, d), "delta")
        if "kernel" in owned:
            if inst.kernel_len is not None:
                feat("ker", (inst.kernel_len, d), "delta")
            else:
                feat("wgen", (dims.gconv2_basis, d))
        op("cm", (d,), "ones")
    elif inst.family == "memoryless":
        h = inst.hidden
        if "gate" in owned:
            feat("wg", (d, h))
        if "up" in owned:
            feat("wu", (d, h))
        op("wd", (h, d))
    else:
        raise CompileError(f"unknown family {inst.family}")


def _roles(inst: LivInstance) -> tuple[str, ...]:
    return {"attention": ("q", "k", "v"),
            "recurrence": ("z", "a", "x", "b", "c"),
            "convolution": ("b", "kernel", "gate"),
            "memoryless": ("gate", "up")}[inst.family]


def positional_basis(seq_len: int, n_features: int, dtype=np.float64) -> np.ndarray:
    """Fixed decaying sinusoid features used to generate implicit long kernels."""
    t = np.arange(seq_len, dtype=np.float64) / max(seq_len, 1)
    decay = np.exp(-3.0 * t)
    cols = []
    for k in range(n_features):
        freq = math.pi * (k // 2 + 1)
        wave = np.cos(freq * t) if k % 2 == 0 else np.sin(freq * t)
        cols.append(decay * wave)
    return np.stack(cols, axis=1).astype(dtype)


# --- featurization -----------------------------------------------------------------

def _pk(inst: LivInstance, name: str, branch: int) -> str:
    return f"{inst.feat_binding}.{name}.b{branch}"


def _proj(x: Tensor, params, inst, name: str, branch: int,
          conv_name: str | None = None) -> Tensor:
    out = ad.matmul(x, params[_pk(inst, name, branch)])
    if conv_name is not None and inst.featurizer_toeplitz:
        out = ad.causal_conv1d(out, params[_pk(inst, conv_name, branch)])
    return out


def featurize(inst: LivInstance, x: Tensor, params: dict[str, Tensor],
              cache: dict | None = None, dims: ModelDims | None = None,
              ) -> list[dict[str, Tensor]]:
    """Compute the instance's feature groups, one dict per branch.

    Consumed roles are fetched from the sharing cache; produced shareable
    roles are written to it.
    """
    cache = cache if cache is not None else {}
    branches = []
    for br in range(inst.branches):
        groups: dict[str, Tensor] = {}

        def owned(role: str) -> bool:
            return role not in inst.consumes

        def fetch(role: str) -> Tensor:
            return cache[(inst.consumes[role], role, br)]

        if inst.family == "attention":
            groups["q"] = _proj(x, params, inst, "wq", br, "kq") if owned("q") else fetch("q")
            groups["k"] = _proj(x, params, inst, "wk", br, "kk") if owned("k") else fetch("k")
            groups["v"] = _proj(x, params, inst, "wv", br, "kv") if owned("v") else fetch("v")
        elif inst.family == "recurrence":
            if owned("z"):
                pre = _proj(x, params, inst, "wz", br, "kz")
                groups["z"] = ad.swish(ad.add(pre, params[_pk(inst, "bz", br)]))
            else:
                groups["z"] = fetch("z")
            if owned("a"):
                pre = _proj(x, params, inst, "wa", br, "ka")
                groups["a"] = ad.sigmoid(ad.add(pre, params[_pk(inst, "ba", br)]))
            else:
                groups["a"] = fetch("a")
            groups["x"] = _proj(x, params, inst, "wx", br, "kx") if owned("x") else fetch("x")
            groups["b"] = _proj(x, params, inst, "wb", br, "kb") if owned("b") else fetch("b")
            groups["c"] = _proj(x, params, inst, "wc", br, "kc") if owned("c") else fetch("c")
        elif inst.family == "convolution":
            if owned("b"):
                groups["b"] = ad.causal_conv1d(ad.mul(x, params[_pk(inst, "sb", br)]),
                                               params[_pk(inst, "fb", br)])
            else:
                groups["b"] = fetch("b")
            if owned("gate"):
                groups["gate"] = ad.causal_conv1d(ad.mul(x, params[_pk(inst, "sg", br)]),
                                                  params[_pk(inst, "fg", br)])
            else:
                groups["gate"] = fetch("gate")
            if owned("kernel"):
                if inst.kernel_len is not None:
                    groups["kernel"] = params[_pk(inst, "ker", br)]
                else:
                    seq = x.shape[-2]
                    n_feat = (dims or ModelDims(width=x.shape[-1])).gconv2_basis
                    basis = Tensor(positional_basis(seq, n_feat, x.data.dtype))
                    groups["kernel"] = ad.matmul(basis, params[_pk(inst, "wgen", br)])
            else:
                groups["kernel"] = fetch("kernel")
        elif inst.family == "memoryless":
            groups["gate"] = _proj(x, params, inst, "wg", br) if owned("gate") else fetch("gate")
            groups["up"] = _proj(x, params, inst, "wu", br) if owned("up") else fetch("up")
        # publish shareable roles for later consumers
        for role, value in groups.items():
            if role not in inst.consumes:
                cache[(inst.index, role, br)] = value
        branches.append(groups)
    return branches


# --- structured application ----------------------------------------------------------

def _split_heads(t: Tensor, n_heads: int, head_dim: int) -> Tensor:
    b, L, _ = t.shape
    t = ad.reshape(t, (b, L, n_heads, head_dim))
    return ad.transpose(t, (0, 2, 1, 3))


def _merge_heads(t: Tensor) -> Tensor:
    b, h, L, hd = t.shape
    t = ad.transpose(t, (0, 2, 1, 3))
    return ad.reshape(t, (b, L, h * hd))


def _score_nonlin(scores: Tensor, nonlinearity: int, band: int | None) -> Tensor:
    if nonlinearity == NONLIN_SOFTMAX:
        return ad.causal_softmax(scores)
    if nonlinearity == NONLIN_RELU:
        return ad.causal_mask(ad.relu(scores), band)
    if nonlinearity == NONLIN_SWISH:
        return ad.causal_mask(ad.swish(scores), band)
    return ad.causal_mask(scores, band)


def _apply_branch(inst: LivInstance, groups: dict[str, Tensor], x: Tensor,
                  params: dict[str, Tensor], branch: int) -> Tensor:
    op = inst.op
    if op.token_mixing == 2:  # low rank / attention
        q = _split_heads(groups["q"], inst.heads, inst.head_dim)
        k = _split_heads(groups["k"], inst.kv_heads, inst.head_dim)
        v = _split_heads(groups["v"], inst.kv_heads, inst.head_dim)
        if inst.kv_repeat > 1:
            k = ad.repeat_axis(k, 1, inst.kv_repeat)
            v = ad.repeat_axis(v, 1, inst.kv_repeat)
        scores = ad.mul(ad.matmul(q, ad.transpose(k, (0, 1, 3, 2))),
                        1.0 / math.sqrt(inst.head_dim))
        band = None if op.sparsity_mask == 1 else inst.head_dim
        weights = _score_nonlin(scores, op.nonlinearity, band)
        mixed = _merge_heads(ad.matmul(weights, v))
    elif op.token_mixing == 4:  # semi-separable: gated linear recurrence
        b, L, d = x.shape
        n = inst.state_size
        # scan runs over axis -2, so lay the tensors out as [batch, d, L, n]
        a4 = ad.reshape(ad.transpose(groups["a"], (0, 2, 1)), (b, d, L, 1))
        xin = ad.reshape(ad.transpose(groups["x"], (0, 2, 1)), (b, d, L, 1))
        u = ad.mul(xin, ad.reshape(groups["b"], (b, 1, L, n)))
        h = ad.gated_scan(a4, u)
        read = ad.sum_axis(ad.mul(h, ad.reshape(groups["c"], (b, 1, L, n))), -1)
        mixed = ad.mul(ad.transpose(read, (0, 2, 1)), groups["z"])
    elif op.token_mixing == 3:  # scaled Toeplitz: gated convolution
        u = ad.mul(groups["b"], x)
        conv = ad.causal_conv1d(u, groups["kernel"])
        mixed = ad.mul(groups["gate"], conv)
    elif op.token_mixing == 1:  # diagonal / memoryless
        gate = groups["gate"]
        if op.nonlinearity == NONLIN_SWISH:
            gate = ad.swish(gate)
        elif op.nonlinearity == NONLIN_RELU:
            gate = ad.relu(gate)
        elif op.nonlinearity == NONLIN_SOFTMAX:
            raise CompileError("softmax is not defined for diagonal token mixing")
        mixed = ad.mul(gate, groups["up"])
    else:
        raise CompileError(f"unknown token mixing {op.token_mixing}")

    if not np.all(np.isfinite(mixed.data)):
        raise ad.NumericError("non-finite activation", context=f"instance {inst.index}")

    # channel mixing
    if op.channel_mixing == CHANNEL_DIAGONAL:
        return ad.mul(mixed, params[f"op.i{inst.index}.cm.b{branch}"])
    if op.channel_mixing in (CHANNEL_DENSE, CHANNEL_GROUPED):
        name = "wd" if inst.family == "memoryless" else "wo"
        return ad.matmul(mixed, params[f"op.i{inst.index}.{name}.b{branch}"])
    raise CompileError(f"unknown channel mixing {op.channel_mixing}")


def apply_structured(inst: LivInstance, groups: list[dict[str, Tensor]], x: Tensor,
                     params: dict[str, Tensor]) -> Tensor:
    """Apply the instance's operator via its structure-specific fast path."""
    out = _apply_branch(inst, groups[0], x, params, 0)
    if inst.branches == 2:
        out = out - _apply_branch(inst, groups[1], x, params, 1)
    return out


# --- full model forward ---------------------------------------------------------------

def forward(model: CompiledBackbone, tokens, params: dict[str, Tensor] | None = None,
            ) -> Tensor:
    """Logits [batch, seq, vocab] (batch axis squeezed if the input was 1-D)."""
    tokens = np.asarray(tokens)
    squeeze = tokens.ndim == 1
    if squeeze:
        tokens = tokens[None, :]
    if params is None:
        params = model.param_tensors()
    x = ad.embed_lookup(params["embed.table"], tokens)
    streams = [x]
    cache: dict = {}
    for inst in model.instances:
        u = streams[-1]
        if inst.residual_source is not None:
            u = u + streams[inst.residual_source + 1]
        xn = ad.rms_norm(u, params[f"norm.i{inst.index}.g"])
        groups = featurize(inst, xn, params, cache, model.dims)
        y = apply_structured(inst, groups, xn, params)
        streams.append(u + y)
    final = ad.rms_norm(streams[-1], params["final_norm.g"])
    logits = ad.matmul(final, params["head.w"])
    if squeeze:
        logits = ad.reshape(logits, logits.shape[1:])
    return logits
