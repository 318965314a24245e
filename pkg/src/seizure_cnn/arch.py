"""Declarative 1-D fully-convolutional network specifications.

A NetworkSpec is an ordered list of layer descriptors. It is the single source
of truth for runtime shapes, parameter counts and receptive fields, and it is
what gets written into a model manifest.

Layouts can be written compactly, one token per layer:

    c32k3   conv, 32 output channels, kernel 3 (a ReLU is appended automatically)
    bn      batch norm over the current channel count
    p8s3    average pooling, pool 8, stride 3

Global average pooling and softmax are appended by ``build_from_layout``.

Example:
    >>> spec = build_cnn11()
    >>> param_count(spec)
    28642
    >>> receptive_field(spec, conv_indices(spec)[-1])
    212
"""
from __future__ import annotations

import io
import itertools
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import ConfigurationError, ShapeError, writing


class _Layer(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ConvLayer(_Layer):
    kind: Literal["conv"] = "conv"
    out_channels: int = Field(..., ge=1)
    kernel: int = Field(..., ge=1)


class ReluLayer(_Layer):
    kind: Literal["relu"] = "relu"


class BatchNormLayer(_Layer):
    kind: Literal["batchnorm"] = "batchnorm"
    channels: int = Field(..., ge=1)


class AvgPoolLayer(_Layer):
    kind: Literal["avgpool"] = "avgpool"
    pool: int = Field(..., ge=1)
    stride: int = Field(..., ge=1)


class GlobalAvgPoolLayer(_Layer):
    kind: Literal["global_avg_pool"] = "global_avg_pool"


class SoftmaxLayer(_Layer):
    kind: Literal["softmax"] = "softmax"


LayerSpec = Annotated[
    Union[ConvLayer, ReluLayer, BatchNormLayer, AvgPoolLayer, GlobalAvgPoolLayer, SoftmaxLayer],
    Field(discriminator="kind"),
]


class NetworkSpec(BaseModel):
    """Ordered layer descriptors plus the input descriptor.

    Channel bookkeeping is checked on construction: batch-norm widths must
    match the preceding conv, and the last conv must emit one map per class.
    Length feasibility depends on the input length and is checked by
    ``output_shapes``.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = Field(..., min_length=1)
    input_channels: int = Field(default=1, ge=1)
    input_length: int = Field(default=256, ge=1)
    n_classes: int = Field(default=2, ge=2)
    layers: tuple[LayerSpec, ...]

    @model_validator(mode="after")
    def _channels_consistent(self) -> "NetworkSpec":
        channels = self.input_channels
        last_conv: Optional[ConvLayer] = None
        for i, layer in enumerate(self.layers):
            if isinstance(layer, ConvLayer):
                channels = layer.out_channels
                last_conv = layer
            elif isinstance(layer, BatchNormLayer) and layer.channels != channels:
                raise ValueError(
                    f"layer {i}: batchnorm over {layer.channels} channels follows {channels}-channel input"
                )
        if last_conv is None:
            raise ValueError("network has no convolutional layer")
        if last_conv.out_channels != self.n_classes:
            raise ValueError(
                f"final conv emits {last_conv.out_channels} maps, expected {self.n_classes} (one per class)"
            )
        return self


CNN11_LAYOUT = (
    "c32k3 c32k3 c32k3 bn p8s3 "
    "c32k3 c32k3 c32k3 bn p4s3 "
    "c32k3 c32k3 c32k3 bn p2s3 "
    "c32k3 c2k3"
)

# Reconstruction: only the conv count, kernel width, parameter total and final
# receptive field of this network are published; pool and BN placement are ours.
CNN6_LAYOUT = "c32k4 c32k4 p3s2 c32k4 c32k4 bn p2s2 c32k4 c2k4"

_TOKEN = re.compile(r"^(?:c(?P<out>\d+)k(?P<k>\d+)|p(?P<pool>\d+)s(?P<stride>\d+)|(?P<bn>bn))$")


def parse_layout(text: str, input_channels: int = 1) -> list:
    """Parse a compact layout string into layer descriptors.

    Raises:
        ConfigurationError: on an unknown token
    """
    layers: list = []
    channels = input_channels
    for token in text.split():
        m = _TOKEN.match(token.strip().lower())
        if m is None:
            raise ConfigurationError(f"unknown layout token {token!r}", details={"layout": text})
        if m.group("out"):
            channels = int(m.group("out"))
            layers.append(ConvLayer(out_channels=channels, kernel=int(m.group("k"))))
            layers.append(ReluLayer())
        elif m.group("pool"):
            layers.append(AvgPoolLayer(pool=int(m.group("pool")), stride=int(m.group("stride"))))
        else:
            layers.append(BatchNormLayer(channels=channels))
    return layers


def build_from_layout(name: str, layout: str, input_length: int = 256, n_classes: int = 2) -> NetworkSpec:
    try:
        return NetworkSpec(
            name=name,
            input_length=input_length,
            n_classes=n_classes,
            layers=(*parse_layout(layout), GlobalAvgPoolLayer(), SoftmaxLayer()),
        )
    except ValueError as e:
        raise ConfigurationError(f"invalid layout for {name}: {e}", details={"layout": layout})


def build_cnn11() -> NetworkSpec:
    """Eleven 3-wide convs in three pooled stages, GAP + softmax head."""
    return build_from_layout("cnn11", CNN11_LAYOUT)


def build_cnn6(layout: str = CNN6_LAYOUT) -> NetworkSpec:
    """Six 4-wide convs; ``layout`` lets callers try other pool/BN placements."""
    return build_from_layout("cnn6", layout)


def build_named(arch: str) -> NetworkSpec:
    builders = {"cnn11": build_cnn11, "cnn6": build_cnn6}
    if arch not in builders:
        raise ConfigurationError(f"unknown architecture {arch!r}", details={"known": sorted(builders)})
    return builders[arch]()


@dataclass(frozen=True)
class LayerShape:
    kind: str
    channels: int
    length: int


def describe_layer(index: int, layer) -> str:
    if isinstance(layer, ConvLayer):
        return f"layer {index} (conv {layer.out_channels}x{layer.kernel})"
    if isinstance(layer, AvgPoolLayer):
        return f"layer {index} (avgpool {layer.pool}/{layer.stride})"
    return f"layer {index} ({layer.kind})"


def output_shapes(spec: NetworkSpec, input_len: Optional[int] = None) -> list[LayerShape]:
    """Per-layer output (channels, length) for an input of ``input_len`` samples.

    Raises:
        ShapeError: naming the first layer whose input is shorter than its
            kernel or pool
    """
    length = spec.input_length if input_len is None else input_len
    channels = spec.input_channels
    shapes = []
    for i, layer in enumerate(spec.layers):
        if isinstance(layer, ConvLayer):
            if length < layer.kernel:
                raise ShapeError(
                    f"{describe_layer(i, layer)}: input length {length} shorter than kernel {layer.kernel}",
                    details={"layer": describe_layer(i, layer), "length": length, "kernel": layer.kernel},
                )
            length = length - layer.kernel + 1
            channels = layer.out_channels
        elif isinstance(layer, AvgPoolLayer):
            if length < layer.pool:
                raise ShapeError(
                    f"{describe_layer(i, layer)}: input length {length} shorter than pool {layer.pool}",
                    details={"layer": describe_layer(i, layer), "length": length, "pool": layer.pool},
                )
            length = (length - layer.pool) // layer.stride + 1
        elif isinstance(layer, GlobalAvgPoolLayer):
            length = 1
        shapes.append(LayerShape(layer.kind, channels, length))
    return shapes


def summary_lengths(spec: NetworkSpec, input_len: Optional[int] = None) -> list[int]:
    """Output-size column for conv, pooling and global-pooling rows.

    Conv and pooling rows report their output length; the global pooling row
    reports the flattened width (one value per class).
    """
    rows = []
    for shape in output_shapes(spec, input_len):
        if shape.kind in ("conv", "avgpool"):
            rows.append(shape.length)
        elif shape.kind == "global_avg_pool":
            rows.append(shape.channels)
    return rows


def layer_param_count(layer, in_channels: int) -> int:
    if isinstance(layer, ConvLayer):
        return layer.out_channels * in_channels * layer.kernel + layer.out_channels
    if isinstance(layer, BatchNormLayer):
        # gamma, beta, running mean, running variance
        return 4 * layer.channels
    return 0


def param_count(spec: NetworkSpec) -> int:
    total = 0
    channels = spec.input_channels
    for layer in spec.layers:
        total += layer_param_count(layer, channels)
        if isinstance(layer, ConvLayer):
            channels = layer.out_channels
    return total


def trainable_count(spec: NetworkSpec) -> int:
    running = sum(2 * layer.channels for layer in spec.layers if isinstance(layer, BatchNormLayer))
    return param_count(spec) - running


def conv_indices(spec: NetworkSpec) -> list[int]:
    return [i for i, layer in enumerate(spec.layers) if isinstance(layer, ConvLayer)]


def receptive_fields(spec: NetworkSpec, input_len: Optional[int] = None) -> list[tuple[int, int]]:
    """(receptive field, jump) after every layer.

    rf <- rf + (k - 1) * jump and jump <- jump * stride, with convs as
    (k, stride 1), pools as (pool, stride) and global pooling as a pool over
    the whole remaining length.
    """
    shapes = output_shapes(spec, input_len)
    rf, jump = 1, 1
    prev_len = spec.input_length if input_len is None else input_len
    out = []
    for layer, shape in zip(spec.layers, shapes):
        if isinstance(layer, ConvLayer):
            rf += (layer.kernel - 1) * jump
        elif isinstance(layer, AvgPoolLayer):
            rf += (layer.pool - 1) * jump
            jump *= layer.stride
        elif isinstance(layer, GlobalAvgPoolLayer):
            rf += (prev_len - 1) * jump
        out.append((rf, jump))
        prev_len = shape.length
    return out


def receptive_field(spec: NetworkSpec, layer_index: int) -> int:
    """Input samples visible to one unit at the output of ``layer_index``.

    Raises:
        ConfigurationError: if the index is outside the spec
    """
    if not 0 <= layer_index < len(spec.layers):
        raise ConfigurationError(
            f"layer index {layer_index} out of range",
            details={"layers": len(spec.layers)},
        )
    return receptive_fields(spec)[layer_index][0]


@dataclass(frozen=True)
class ReportRow:
    index: int
    layer: str
    kind: str
    channels: int
    length: int
    receptive_field: int
    jump: int
    params: int


@dataclass(frozen=True)
class ArchReport:
    name: str
    input_length: int
    rows: tuple[ReportRow, ...]
    total_params: int
    trainable_params: int

    @property
    def final_conv_receptive_field(self) -> int:
        return [r for r in self.rows if r.kind == "conv"][-1].receptive_field


def arch_report(spec: NetworkSpec, input_len: Optional[int] = None) -> ArchReport:
    length = spec.input_length if input_len is None else input_len
    shapes = output_shapes(spec, length)
    fields = receptive_fields(spec, length)
    rows = []
    channels = spec.input_channels
    for i, (layer, shape, (rf, jump)) in enumerate(zip(spec.layers, shapes, fields)):
        rows.append(ReportRow(
            index=i,
            layer=describe_layer(i, layer),
            kind=layer.kind,
            channels=shape.channels,
            length=shape.length,
            receptive_field=rf,
            jump=jump,
            params=layer_param_count(layer, channels),
        ))
        channels = shape.channels
    return ArchReport(
        name=spec.name,
        input_length=length,
        rows=tuple(rows),
        total_params=param_count(spec),
        trainable_params=trainable_count(spec),
    )


def render_text(report: ArchReport) -> str:
    lines = [f"network: {report.name}  input: {report.input_length}x1"]
    lines.append(f"{'layer':<26}{'output':>10}{'rf':>6}{'jump':>6}{'params':>9}")
    for r in report.rows:
        lines.append(
            f"{r.layer:<26}{f'{r.length}x{r.channels}':>10}{r.receptive_field:>6}{r.jump:>6}{r.params:>9}"
        )
    lines.append(f"total_params: {report.total_params}")
    lines.append(f"trainable_params: {report.trainable_params}")
    lines.append(f"final_conv_receptive_field: {report.final_conv_receptive_field}")
    return "\n".join(lines) + "\n"


def report_frame(report: ArchReport) -> pd.DataFrame:
    return pd.DataFrame(
        [(r.layer, f"{r.length}x{r.channels}", r.receptive_field, r.jump, r.params) for r in report.rows],
        columns=["layer", "shape", "receptive_field", "jump", "params"],
    )


def report_csv(report: ArchReport, path: Optional[Path] = None) -> str:
    buf = io.StringIO()
    report_frame(report).to_csv(buf, index=False, lineterminator="\n")
    text = buf.getvalue()
    if path is not None:
        with writing(path):
            Path(path).write_text(text, encoding="utf-8")
    return text


def search_cnn6_layouts(
    target_params: int = 17_058,
    target_rf: int = 47,
    input_length: int = 256,
    pools: tuple[tuple[int, int], ...] = ((2, 2), (3, 2), (2, 3), (3, 3), (4, 2), (4, 3)),
) -> list[str]:
    """Six-conv, kernel-4 layouts meeting a parameter total and final receptive field.

    Tries up to two pooling stages between convs and a single batch norm after
    any of the first five convs.
    """
    found = []
    gaps = range(1, 6)
    for n_pools in (0, 1, 2):
        for positions in itertools.combinations(gaps, n_pools):
            for pool_cfgs in itertools.product(pools, repeat=n_pools):
                for bn_after in gaps:
                    tokens = []
                    placed = dict(zip(positions, pool_cfgs))
                    for conv in range(1, 7):
                        tokens.append("c2k4" if conv == 6 else "c32k4")
                        if conv == bn_after:
                            tokens.append("bn")
                        if conv in placed:
                            p, s = placed[conv]
                            tokens.append(f"p{p}s{s}")
                    layout = " ".join(tokens)
                    spec = build_from_layout("cnn6", layout, input_length=input_length)
                    if param_count(spec) != target_params:
                        continue
                    try:
                        rf = receptive_field(spec, conv_indices(spec)[-1])
                    except ShapeError:
                        continue
                    if rf == target_rf:
                        found.append(layout)
    return found


def init_conv_weights(rng: np.random.Generator, out_ch: int, in_ch: int, kernel: int) -> np.ndarray:
    """Fan-in scaled uniform weights, rounded to float32-representable values."""
    bound = np.sqrt(6.0 / (in_ch * kernel))
    w = rng.uniform(-bound, bound, size=(out_ch, in_ch, kernel))
    return w.astype(np.float32).astype(np.float64)


def assemble(spec: NetworkSpec, seed: int = 0):
    """Allocate and initialise a runnable network for ``spec``.

    Conv weights are uniform in +-sqrt(6 / fan_in), biases zero, batch-norm
    gamma 1 and beta 0 with running statistics (0, 1). The same seed always
    yields identical parameters.
    """
    from .nncore.layers import AvgPool1d, BatchNorm1d, BatchNormParams, Conv1d, ConvParams, GlobalAvgPool, ReLU, Softmax
    from .nncore.network import Network

    output_shapes(spec)
    rng = np.random.Generator(np.random.PCG64(seed))
    runtime = []
    channels = spec.input_channels
    for i, layer in enumerate(spec.layers):
        name = describe_layer(i, layer)
        if isinstance(layer, ConvLayer):
            params = ConvParams(
                weight=init_conv_weights(rng, layer.out_channels, channels, layer.kernel),
                bias=np.zeros(layer.out_channels),
            )
            runtime.append(Conv1d(params, name=name))
            channels = layer.out_channels
        elif isinstance(layer, ReluLayer):
            runtime.append(ReLU(name=name))
        elif isinstance(layer, BatchNormLayer):
            runtime.append(BatchNorm1d(BatchNormParams.identity(layer.channels), name=name))
        elif isinstance(layer, AvgPoolLayer):
            runtime.append(AvgPool1d(layer.pool, layer.stride, name=name))
        elif isinstance(layer, GlobalAvgPoolLayer):
            runtime.append(GlobalAvgPool(name=name))
        else:
            runtime.append(Softmax(name=name))
    return Network(spec, runtime)
