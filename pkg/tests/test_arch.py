"""Tests for network descriptions: shapes, receptive fields, parameter counts."""
import numpy as np
import pytest

from seizure_cnn.arch import (
    CNN6_LAYOUT,
    ArchReport,
    BatchNormLayer,
    ConvLayer,
    NetworkSpec,
    arch_report,
    assemble,
    build_cnn6,
    build_cnn11,
    build_from_layout,
    build_named,
    conv_indices,
    output_shapes,
    param_count,
    parse_layout,
    receptive_field,
    receptive_fields,
    render_text,
    report_csv,
    search_cnn6_layouts,
    summary_lengths,
    trainable_count,
)
from seizure_cnn.errors import ConfigurationError, ShapeError

pytestmark = pytest.mark.unit


class TestCnn11:
    def test_parameter_total(self):
        assert param_count(build_cnn11()) == 28642

    def test_trainable_excludes_running_stats(self):
        # three batch norms over 32 channels carry 64 running values each
        assert trainable_count(build_cnn11()) == 28642 - 3 * 64

    def test_summary_lengths(self):
        assert summary_lengths(build_cnn11()) == [254, 252, 250, 81, 79, 77, 75, 24, 22, 20, 18, 6, 4, 2, 2]

    def test_receptive_fields_of_convs(self):
        spec = build_cnn11()
        convs = conv_indices(spec)
        assert len(convs) == 11
        assert receptive_field(spec, convs[0]) == 3
        assert receptive_field(spec, convs[3]) == 20
        assert receptive_field(spec, convs[-1]) == 212

    def test_final_shape_is_one_value_per_class(self):
        shapes = output_shapes(build_cnn11())
        assert shapes[-1].kind == "softmax"
        assert (shapes[-1].channels, shapes[-1].length) == (2, 1)


class TestCnn6:
    def test_parameter_total(self):
        assert param_count(build_cnn6()) == 17058

    def test_final_conv_receptive_field(self):
        spec = build_cnn6()
        assert len(conv_indices(spec)) == 6
        assert receptive_field(spec, conv_indices(spec)[-1]) == 47

    def test_all_convs_kernel_four(self):
        assert {layer.kernel for layer in build_cnn6().layers if isinstance(layer, ConvLayer)} == {4}

    def test_search_finds_default_layout(self):
        assert CNN6_LAYOUT in search_cnn6_layouts()


class TestLayouts:
    def test_relu_follows_every_conv(self):
        kinds = [layer.kind for layer in parse_layout("c8k3 bn p2s2 c2k3")]
        assert kinds == ["conv", "relu", "batchnorm", "avgpool", "conv", "relu"]

    def test_unknown_token(self):
        with pytest.raises(ConfigurationError):
            parse_layout("c8k3 dropout c2k3")

    def test_final_conv_must_emit_class_maps(self):
        with pytest.raises(ConfigurationError):
            build_from_layout("bad", "c8k3 c4k3")

    def test_batchnorm_channel_mismatch(self):
        with pytest.raises(ValueError):
            NetworkSpec(
                name="x",
                layers=(ConvLayer(out_channels=8, kernel=3), BatchNormLayer(channels=4), ConvLayer(out_channels=2, kernel=3)),
            )

    def test_unknown_arch_name(self):
        with pytest.raises(ConfigurationError):
            build_named("cnn99")

    def test_spec_round_trips_through_json(self):
        spec = build_cnn11()
        assert NetworkSpec.model_validate_json(spec.model_dump_json()) == spec


class TestShapeErrors:
    def test_input_too_short_names_layer(self):
        with pytest.raises(ShapeError) as exc:
            output_shapes(build_cnn11(), input_len=40)
        assert "layer" in exc.value.details
        assert "avgpool" in exc.value.details["layer"] or "conv" in exc.value.details["layer"]

    def test_minimum_length_passes(self):
        spec = build_from_layout("tiny", "c4k3 c2k3")
        assert output_shapes(spec, input_len=5)[2].length == 1
        with pytest.raises(ShapeError):
            output_shapes(spec, input_len=4)

    def test_receptive_field_index_out_of_range(self):
        with pytest.raises(ConfigurationError):
            receptive_field(build_cnn6(), 99)


class TestReceptiveFieldRecurrence:
    def test_pool_multiplies_jump(self):
        spec = build_from_layout("rf", "c4k3 p2s2 c2k3")
        fields = receptive_fields(spec)
        # conv(3): 3; pool(2, s2): 4, jump 2; conv(3): 4 + 2 * 2
        assert fields[0] == (3, 1)
        assert fields[2] == (4, 2)
        assert fields[3] == (8, 2)


class TestReport:
    def test_report_totals(self):
        report = arch_report(build_cnn11())
        assert isinstance(report, ArchReport)
        assert report.total_params == 28642
        assert report.final_conv_receptive_field == 212
        assert sum(r.params for r in report.rows) == 28642

    def test_render_text_footer(self):
        text = render_text(arch_report(build_cnn6()))
        assert "total_params: 17058" in text
        assert "final_conv_receptive_field: 47" in text

    def test_report_csv(self, tmp_path):
        path = tmp_path / "cnn6.csv"
        text = report_csv(arch_report(build_cnn6()), path)
        assert path.read_text() == text
        assert text.splitlines()[0] == "layer,shape,receptive_field,jump,params"


class TestAssemble:
    def test_same_seed_same_weights(self):
        a, b = assemble(build_cnn6(), seed=3), assemble(build_cnn6(), seed=3)
        for x, y in zip(a.snapshot(), b.snapshot()):
            np.testing.assert_array_equal(x, y)

    def test_weights_are_float32_representable(self):
        net = assemble(build_cnn6(), seed=1)
        for arr in net.snapshot():
            np.testing.assert_array_equal(arr, arr.astype(np.float32).astype(np.float64))

    def test_state_size_matches_param_count(self):
        net = assemble(build_cnn11(), seed=0)
        assert sum(arr.size for arr in net.snapshot()) == param_count(net.spec)


@pytest.mark.parametrize("builder", [build_cnn11, build_cnn6], ids=["cnn11", "cnn6"])
class TestRuntimeShapes:
    def test_layers_produce_described_shapes(self, builder, rng):
        spec = builder()
        net = assemble(spec, seed=0)
        assert len(net.layers) == len(spec.layers)
        x = rng.standard_normal((3, 1, spec.input_length))
        for layer, expected in zip(net.layers, output_shapes(spec)):
            x = layer.forward(x, "infer")
            length = x.shape[2] if x.ndim == 3 else 1
            assert (x.shape[0], x.shape[1], length) == (3, expected.channels, expected.length), layer.name

    def test_forward_yields_class_probabilities(self, builder, rng):
        spec = builder()
        probs = assemble(spec, seed=1).forward(rng.standard_normal((5, 1, spec.input_length)))
        assert probs.shape == (5, 2)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0)
        assert ((probs >= 0.0) & (probs <= 1.0)).all()
