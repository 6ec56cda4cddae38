from ecgreject.autodiff import (ComputationTape, Tensor, cross_entropy_loss,
                                finite_diff_check)
from ecgreject.network import (NetworkConfig, STAGE_COUNT, build_network,
                               iter_batches)
from ecgreject.typing import ConfigError, ModelMode, NumericError, ShapeError

from fractions import Fraction

import numpy
import pytest


def small_config(**changes):
    return NetworkConfig.desk().replace(input_length=256, **changes)


def random_batch(config, batch=2, seed=0):
    rng = numpy.random.default_rng(seed)
    return Tensor(
        rng.normal(0.0, 1.0,
                   (batch, config.input_leads, config.input_length)))


def randomize_logits(network, seed=1):
    weight = network.head.logits.weight
    weight.values = numpy.random.default_rng(seed).normal(
        0.0, 0.5, weight.shape)


def test_full_size_stage_shapes():
    assert NetworkConfig().stage_output_shapes() == (
        (64, 2500),
        (160, 1250),
        (160, 625),
        (400, 312),
        (400, 156),
        (1024, 78),
        (1024, 39),
    )


def test_desk_final_shape():
    config = NetworkConfig.desk().replace(input_length=1000)
    assert config.stage_output_shapes()[-1] == (256, 7)
    assert config.stage_lengths() == (500, 250, 125, 62, 31, 15, 7)


def test_full_size_forward_shapes():
    config = NetworkConfig()
    network = build_network(config, 0)
    seen = {}

    def hook(stage, x):
        seen[stage] = x.shape[1:]

    logits = network.forward(random_batch(config, batch=1),
                             ModelMode.EvalDeterministic,
                             stage_hook=hook)
    assert logits.shape == (1, 9)
    assert tuple(seen[s]
                 for s in range(1, STAGE_COUNT + 1)) == config.stage_output_shapes()


def test_full_size_train_step_smoke():
    config = NetworkConfig()
    network = build_network(config, 0)
    randomize_logits(network)
    with ComputationTape() as tape:
        logits = network.forward(random_batch(config, batch=2), ModelMode.Train,
                                 numpy.random.default_rng(0))
        loss = cross_entropy_loss(logits, [0, 5])
    tape.backward(loss)
    assert network.stem.weight.grad is not None
    assert numpy.isfinite(loss.item())


def test_layer_counts():
    network = build_network(NetworkConfig(), 0)
    assert network.weighted_layer_count() == 61
    # Stem, 60 block convs and 3 shortcut projections.
    assert network.conv_layer_count() == 64


def test_desk_layer_counts():
    network = build_network(NetworkConfig.desk(), 0)
    assert network.weighted_layer_count() == 22
    assert network.conv_layer_count() == 1 + 21 + 3


def test_bottleneck_width():
    config = NetworkConfig()
    assert [config.bottleneck_width(s) for s in range(STAGE_COUNT)
            ] == [32, 80, 80, 208, 208, 512, 512]


def test_fresh_network_is_uniform():
    config = small_config()
    network = build_network(config, 3)
    probs = network.predict_proba(random_batch(config),
                                  ModelMode.EvalMcDropout,
                                  numpy.random.default_rng(0))
    assert probs.values == pytest.approx(numpy.full((2, 9), 1 / 9))


def test_build_is_deterministic():
    config = small_config()
    a = build_network(config, 5).state()
    b = build_network(config, 5).state()
    c = build_network(config, 6).state()
    assert a.keys() == b.keys()
    assert all(numpy.array_equal(a[k], b[k]) for k in a)
    assert not numpy.array_equal(a['stem.weight'], c['stem.weight'])


def test_initialization_ledger():
    network = build_network(small_config(), 0)
    params = network.named_parameters
    assert not params['head.logits.weight'].values.any()
    assert not params['stem.bias'].values.any()
    assert (params['stage1.block1.pre1.bn.gamma'].values == 1.0).all()
    assert not params['stage1.block1.pre1.bn.beta'].values.any()
    weight = params['stage7.block1.conv1.weight'].values
    fan_in = weight.shape[1] * weight.shape[2]
    assert weight.std() == pytest.approx(numpy.sqrt(2 / fan_in), rel=0.1)


def test_no_decay_is_batch_norm_affine():
    network = build_network(small_config(), 0)
    assert network.no_decay
    assert all(name.endswith(('.gamma', '.beta')) for name in network.no_decay)
    assert 'stem.weight' not in network.no_decay


def test_same_outputs_in_deterministic_mode():
    config = small_config()
    network = build_network(config, 0)
    randomize_logits(network)
    batch = random_batch(config)
    a = network.forward(batch, ModelMode.EvalDeterministic)
    b = network.forward(batch, ModelMode.EvalDeterministic)
    assert numpy.array_equal(a.values, b.values)


def test_mc_dropout_depends_on_rng():
    config = small_config()
    network = build_network(config, 0)
    randomize_logits(network)
    batch = random_batch(config)
    a = network.forward(batch, ModelMode.EvalMcDropout,
                        numpy.random.default_rng(0))
    b = network.forward(batch, ModelMode.EvalMcDropout,
                        numpy.random.default_rng(0))
    c = network.forward(batch, ModelMode.EvalMcDropout,
                        numpy.random.default_rng(1))
    assert numpy.array_equal(a.values, b.values)
    assert not numpy.array_equal(a.values, c.values)


def test_squeeze_excite_saturated_gate_is_identity():
    with_se = build_network(small_config(), 0)
    without_se = build_network(small_config(squeeze_excite=False), 0)
    for network in (with_se, without_se):
        randomize_logits(network)
    for blocks in with_se.stages:
        for block in blocks:
            block.se.excite.weight.values = numpy.zeros(
                block.se.excite.weight.shape)
            block.se.excite.bias.values = numpy.full(
                block.se.excite.bias.shape, 1e3)
    batch = random_batch(small_config())
    a = with_se.forward(batch, ModelMode.EvalDeterministic)
    b = without_se.forward(batch, ModelMode.EvalDeterministic)
    assert numpy.array_equal(a.values, b.values)


def test_zero_residual_branch_passes_shortcut():
    config = small_config()
    network = build_network(config, 0)
    randomize_logits(network)
    block = network.stages[0][0]
    block.conv2.weight.values = numpy.zeros(block.conv2.weight.shape)
    block.conv2.bias.values = numpy.zeros(block.conv2.bias.shape)
    batch = random_batch(config)
    before = network.forward(batch, ModelMode.EvalDeterministic)
    block.conv1.weight.values = block.conv1.weight.values + 1.0
    block.conv_k.weight.values = block.conv_k.weight.values * 3.0
    after = network.forward(batch, ModelMode.EvalDeterministic)
    assert numpy.array_equal(before.values, after.values)


def test_every_parameter_receives_gradient():
    config = small_config()
    network = build_network(config, 0)
    randomize_logits(network)
    with ComputationTape() as tape:
        logits = network.forward(random_batch(config, batch=4),
                                 ModelMode.Train, numpy.random.default_rng(0))
        loss = cross_entropy_loss(logits, [0, 1, 2, 3])
    tape.backward(loss)
    for name, p in network.named_parameters.items():
        assert p.grad is not None, name
        assert numpy.isfinite(p.grad).all(), name
        # A bias feeding straight into batch normalization has zero gradient.
        if not name.endswith(('conv1.bias', 'conv_k.bias')):
            assert numpy.abs(p.grad).sum() > 0, name


def test_network_gradient_check():
    config = small_config()
    network = build_network(config, 0)
    randomize_logits(network)
    batch = random_batch(config, batch=2, seed=4)

    def loss_of(_):
        logits = network.forward(batch, ModelMode.Train,
                                 numpy.random.default_rng(9))
        return cross_entropy_loss(logits, [2, 7])

    for name in ('stem.weight', 'stage3.block1.conv_k.weight',
                 'stage5.block1.se.squeeze.weight', 'head.bn.gamma'):
        parameter = network.named_parameters[name]
        assert finite_diff_check(loss_of, parameter,
                                 max_coordinates=8) < 1e-4, name
    network.zero_grad()


def test_input_gradient_check():
    config = small_config()
    network = build_network(config, 0)
    randomize_logits(network)

    def loss_of(x):
        logits = network.forward(x, ModelMode.Train,
                                 numpy.random.default_rng(9))
        return cross_entropy_loss(logits, [1, 4])

    assert finite_diff_check(loss_of,
                             random_batch(config, seed=8),
                             max_coordinates=12) < 1e-4


@pytest.mark.parametrize('shape,dimension', [
    ((2, 12), 'rank'),
    ((2, 11, 256), 'leads'),
    ((2, 12, 255), 'length'),
])
def test_batch_shape_errors(shape, dimension):
    network = build_network(small_config(), 0)
    with pytest.raises(ShapeError) as info:
        network.forward(Tensor(numpy.zeros(shape)),
                        ModelMode.EvalDeterministic)
    assert info.value.dimension == dimension


def test_non_finite_output():
    config = small_config()
    network = build_network(config, 0)
    network.head.logits.bias.values = numpy.full(9, numpy.nan)
    with pytest.raises(NumericError):
        network.predict_proba(random_batch(config),
                              ModelMode.EvalDeterministic)


@pytest.mark.parametrize('changes,field,stage', [
    ({
        'groups': 3
    }, 'groups', 1),
    ({
        'stage_channels': (64, 160, 160, 400, 400, 1024, 1000)
    }, 'groups', 7),
    ({
        'blocks_per_stage': (2, 2, 2)
    }, 'blocks_per_stage', None),
    ({
        'width_scale': Fraction(1, 3)
    }, 'width_scale', 1),
    ({
        'input_length': 100
    }, 'input_length', 7),
    ({
        'dropout_p': 1.0
    }, 'dropout_p', None),
])
def test_config_errors(changes, field, stage):
    with pytest.raises(ConfigError) as info:
        NetworkConfig(**changes)
    assert info.value.field == field
    assert info.value.stage == stage


def test_config_dict_round_trip():
    config = NetworkConfig.desk()
    assert NetworkConfig.from_dict(config.to_dict()) == config


def test_load_state_mismatch():
    network = build_network(small_config(), 0)
    state = network.state()
    del state['stem.bias']
    with pytest.raises(ValueError):
        network.load_state(state)
    other = build_network(small_config(squeeze_excite=False), 0)
    with pytest.raises(ValueError):
        other.load_state(network.state())


def test_load_state_checks_running_stat_shapes():
    network = build_network(small_config(), 0)
    before = network.state()
    state = network.state()
    name = next(k for k in state if k.endswith('.running_var'))
    state[name] = numpy.ones(state[name].size + 1)
    state['stem.weight'] = state['stem.weight'] + 1.0
    with pytest.raises(ValueError, match='running_var'):
        network.load_state(state)
    after = network.state()
    assert all(numpy.array_equal(before[k], after[k]) for k in before)


def test_load_state_round_trip():
    config = small_config()
    source = build_network(config, 0)
    randomize_logits(source)
    source.forward(random_batch(config), ModelMode.Train,
                   numpy.random.default_rng(0))
    target = build_network(config, 1)
    target.load_state(source.state())
    batch = random_batch(config, seed=2)
    assert numpy.array_equal(
        source.forward(batch, ModelMode.EvalDeterministic).values,
        target.forward(batch, ModelMode.EvalDeterministic).values)


def test_iter_batches():
    assert list(iter_batches(7, 3)) == [slice(0, 3), slice(3, 6), slice(6, 7)]
    assert list(iter_batches(0, 3)) == []
