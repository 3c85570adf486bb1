import numpy as np
import pytest
from hypothesis import given, strategies as st

from offload_rl.errors import ConfigError
from offload_rl.profile import (
    ELEMENT_BYTES, LABEL_BYTES, LayerKind, LayerSpec, build_profile, build_vgg5, build_vgg8,
    layer_flops, parse_architecture, profile_from_dict, transfer_bytes,
)

import oracles


def test_vgg5_fractions_match_shape_walk():
    p = build_vgg5()
    expected = oracles.cumulative_fractions(oracles.VGG5_LAYERS, oracles.VGG5_OP_AFTER)
    np.testing.assert_allclose(p.fractions, expected, rtol=1e-12)


def test_vgg8_fractions_match_shape_walk():
    p = build_vgg8()
    expected = oracles.cumulative_fractions(oracles.VGG8_LAYERS, oracles.VGG8_OP_AFTER)
    np.testing.assert_allclose(p.fractions, expected, rtol=1e-12)


def test_vgg5_boundaries():
    np.testing.assert_allclose(build_vgg5().boundaries(), [0.38, 0.79, 0.96], atol=0.02)


def test_fractions_monotone_and_native_last():
    for p in (build_vgg5(), build_vgg8()):
        f = p.fractions
        assert all(a < b for a, b in zip(f, f[1:]))
        assert f[-1] == 1.0 and p.native_op.is_native
        assert not any(op.is_native for op in p.offloading_points[:-1])


def test_layer_flops_against_shape_walk():
    p = build_vgg5()
    table = oracles.vgg_layer_table(oracles.VGG5_LAYERS)
    for layer, (fwd, numel) in zip(p.layers, table):
        assert layer_flops(layer, multiplier=1.0) == pytest.approx(fwd)
        assert layer.activation_bytes == numel * ELEMENT_BYTES


def test_training_multiplier_cancels_in_fractions():
    p = build_vgg5()
    fwd = [layer_flops(l, 1.0) for l in p.layers]
    assert p.total_flops == pytest.approx(3.0 * sum(fwd))


def test_transfer_bytes_op1():
    p = build_vgg5(batch_size=100)
    op1 = p.op(1)
    act = 16 * 16 * 32 * ELEMENT_BYTES * 100
    assert op1.uplink_bytes == act + LABEL_BYTES * 100
    assert op1.downlink_bytes == act
    assert transfer_bytes(p, op1) == 2 * act + LABEL_BYTES * 100
    assert transfer_bytes(p, p.native_op) == 0


def test_transfer_bytes_rejects_foreign_op():
    with pytest.raises(ValueError):
        transfer_bytes(build_vgg5(), build_vgg8().op(1))


def test_zero_size_layer_rejected():
    bad = LayerSpec(LayerKind.CONV, 8, (0, 4, 3), (0, 4, 8), 3)
    with pytest.raises(ValueError):
        layer_flops(bad)
    with pytest.raises(ConfigError):
        build_profile("x", "C0-FC10(OP1)")


def test_op_lookup_bounds():
    p = build_vgg5()
    assert p.op(2).index == 2
    with pytest.raises(ValueError):
        p.op(0)
    with pytest.raises(ValueError):
        p.op(5)


def test_parse_architecture_and_errors():
    parsed = parse_architecture("C8-MP(OP1)-FC10(OP2)")
    assert [k for k, _, _ in parsed] == [LayerKind.CONV, LayerKind.MAXPOOL, LayerKind.FC]
    assert [op for *_, op in parsed] == [False, True, True]
    with pytest.raises(ConfigError):
        parse_architecture("C8-XX")
    with pytest.raises(ConfigError):
        build_profile("x", "C8-MP(OP1)-FC10")  # last layer has no OP
    with pytest.raises(ConfigError):
        build_profile("x", "FC10-C8(OP1)")


def test_profile_from_dict():
    assert profile_from_dict("VGG5").fractions == build_vgg5().fractions
    p = profile_from_dict({"name": "tiny", "architecture": "C4-MP(OP1)-FC2(OP2)", "input_shape": [8, 8, 1]})
    assert len(p.offloading_points) == 2 and p.input_shape == (8, 8, 1)
    with pytest.raises(ConfigError):
        profile_from_dict("resnet")
    with pytest.raises(ConfigError):
        profile_from_dict({"name": "custom"})


@given(st.lists(st.sampled_from(["C4", "C8", "C16", "MP"]), min_size=1, max_size=4),
       st.integers(1, 64))
def test_random_architectures_fraction_properties(body, batch):
    arch = "-".join(t + "(OP%d)" % (i + 1) for i, t in enumerate(body)) + "-FC10(OP%d)" % (len(body) + 1)
    p = build_profile("r", arch, input_shape=(16, 16, 3), batch_size=batch)
    f = p.fractions
    assert all(0 < x <= 1 for x in f) and f[-1] == 1.0
    assert all(a <= b for a, b in zip(f, f[1:]))
    for op in p.offloading_points[:-1]:
        assert op.uplink_bytes == op.downlink_bytes + LABEL_BYTES * batch
