import numpy as np
import pytest

from biattn.autodiff import backward, constant, finite_difference_check, matmul
from biattn.corpus import SentencePair
from biattn.errors import ContractError, DomainError, UnderflowError
from biattn.models import (
    AlignmentMatrix,
    EncodedSource,
    ModelConfig,
    ModelParameters,
    ParameterBinding,
    attention_row,
    context,
    decoder_step,
    encode,
    init_parameters,
    output_distribution,
    parameter_shapes,
    sentence_log_likelihood,
)


def zero_parameters(config):
    return ModelParameters(config, {name: np.zeros(shape) for name, shape in parameter_shapes(config).items()})


def test_config_defaults_and_validation():
    config = ModelConfig(10, 11, embed_dim=3, hidden_dim=5)
    assert config.attention_dim == 5 and config.readout_dim == 5
    assert ModelConfig.from_dict(config.to_dict()) == config
    with pytest.raises(ContractError, match="embed_dim"):
        ModelConfig(10, 11, embed_dim=0, hidden_dim=5)


def test_parameter_shapes(tiny_config):
    shapes = parameter_shapes(tiny_config)
    assert shapes["src_embed"] == (12, 4)
    assert shapes["enc_bwd.W_r"] == (4, 4)
    assert shapes["dec.W_z"] == (4 + 2 * 4, 4)
    assert shapes["att.U"] == (8, 4)
    assert shapes["out.W_o"] == (4, 12)
    assert len(shapes) == 2 + 3 * 9 + 2 + 3 + 6


def test_init_is_seeded_glorot_with_zero_biases(tiny_config):
    a = init_parameters(tiny_config, seed=3)
    assert a == init_parameters(tiny_config, seed=3)
    assert a != init_parameters(tiny_config, seed=4)

    for name, tensor in a.tensors.items():
        if name.split(".")[-1].startswith("b"):
            assert not tensor.any(), name
        else:
            bound = np.sqrt(6.0 / sum(tensor.shape))
            assert np.abs(tensor).max() <= bound, name


def test_parameters_reject_wrong_shapes(tiny_config, tiny_params):
    tensors = dict(tiny_params.tensors)
    tensors["att.v"] = np.zeros((3, 1))
    with pytest.raises(ContractError, match="att.v"):
        ModelParameters(tiny_config, tensors)

    del tensors["att.v"]
    with pytest.raises(ContractError, match="do not match"):
        ModelParameters(tiny_config, tensors)


def test_copy_is_independent(tiny_params):
    clone = tiny_params.copy()
    clone.tensors["init.b"] += 1.0
    assert clone != tiny_params


def test_alignment_matrix_must_be_row_stochastic():
    AlignmentMatrix(np.full((2, 4), 0.25))
    with pytest.raises(ContractError, match="sum to 1"):
        AlignmentMatrix(np.full((2, 4), 0.3))
    with pytest.raises(ContractError, match="2-d"):
        AlignmentMatrix(np.ones(3))


def test_zero_weights_give_uniform_predictions(tiny_config):
    theta = zero_parameters(tiny_config).bind(requires_grad=False)
    score = sentence_log_likelihood(SentencePair((4, 5, 6), (7,)), theta)

    # One target word plus EOS, each predicted uniformly over 12 types
    assert score.log_likelihood.item() == pytest.approx(2.0 * np.log(1.0 / 12.0))
    assert score.alignment.shape == (2, 4)
    np.testing.assert_allclose(score.alignment.weights, 0.25)


def test_attention_rows_are_distributions(pair, tiny_params):
    score = sentence_log_likelihood(pair, tiny_params.bind(requires_grad=False))
    weights = score.alignment.weights
    assert weights.shape == (len(pair.target) + 1, len(pair.source) + 1)
    np.testing.assert_allclose(weights.sum(axis=1), 1.0)
    assert score.log_likelihood.item() < 0.0


def test_likelihood_is_only_defined_with_teacher_forcing(pair, tiny_params):
    with pytest.raises(ContractError, match="teacher forcing"):
        sentence_log_likelihood(pair, tiny_params.bind(), teacher_forcing=False)


def test_ids_outside_the_vocabulary_are_rejected(tiny_params):
    theta = tiny_params.bind(requires_grad=False)
    with pytest.raises(ContractError, match="target ids"):
        sentence_log_likelihood(SentencePair((4,), (12,)), theta)
    with pytest.raises(ContractError, match="source ids"):
        encode([40], theta)


def test_encoder_directions_mirror_each_other(tiny_params):
    # With tied weights the backward pass over x equals the forward pass over reversed x
    tensors = dict(tiny_params.tensors)
    for name in list(tensors):
        if name.startswith("enc_bwd."):
            tensors[name] = tensors["enc_fwd." + name[len("enc_bwd."):]]
    theta = tiny_params.with_tensors(tensors).bind(requires_grad=False)

    x = [4, 9, 5, 7]
    hidden = tiny_params.config.hidden_dim
    forward_states = encode(x, theta).states.value[:, :hidden]
    backward_states = encode(x[::-1], theta).states.value[:, hidden:]
    np.testing.assert_allclose(forward_states, backward_states[::-1], atol=1e-12)


def test_likelihood_gradients_match_finite_differences(pair, tiny_config, tiny_params):
    def log_likelihood(leaves):
        return sentence_log_likelihood(pair, ParameterBinding(leaves, tiny_config)).log_likelihood

    report = finite_difference_check(log_likelihood, tiny_params.tensors, max_coords=4)
    assert report.passed, report
    assert set(report.per_param) == set(tiny_params.names())


def test_binding_gradients_fill_untouched_tensors_with_zeros(pair, tiny_params):
    theta = tiny_params.bind()
    backward(sentence_log_likelihood(pair, theta).log_likelihood)
    grads = theta.gradients()

    assert set(grads) == set(tiny_params.names())
    # Only the embedding rows of words in the pair (and BOS/EOS) receive gradient
    used_rows = np.flatnonzero(np.abs(grads["src_embed"]).sum(axis=1))
    assert set(used_rows) <= {2, 4, 5, 6}


def random_parameters(config, rng):
    return ModelParameters(
        config, {name: rng.normal(0.0, 0.5, size=shape) for name, shape in parameter_shapes(config).items()}
    )


def softmax(scores):
    exp = np.exp(scores - scores.max())
    return exp / exp.sum()


def sigmoid(values):
    return 1.0 / (1.0 + np.exp(-values))


@pytest.fixture
def random_theta(tiny_config, rng):
    return random_parameters(tiny_config, rng).bind(requires_grad=False)


def test_attention_row_is_the_softmax_of_additive_scores(random_theta, rng):
    h = encode([4, 5, 6, 2], random_theta)
    s_prev = rng.normal(size=(1, 4))
    row = attention_row(constant(s_prev), h, random_theta).value

    t = {name: node.value for name, node in random_theta.items()}
    scores = np.tanh(h.states.value @ t["att.U"] + s_prev @ t["att.W"]) @ t["att.v"]
    np.testing.assert_allclose(row, softmax(scores.T), rtol=1e-12, atol=1e-15)
    assert row.sum() == pytest.approx(1.0)


def test_attention_over_a_single_or_repeated_state(random_theta, rng):
    single = encode([7], random_theta)
    np.testing.assert_allclose(attention_row(constant(rng.normal(size=(1, 4))), single, random_theta).value, [[1.0]])

    states = constant(np.tile(rng.normal(size=(1, 8)), (3, 1)))
    keys = matmul(states, random_theta["att.U"])
    same = EncodedSource(states=states, keys=keys, backward_first=constant(np.zeros((1, 4))))
    row = attention_row(constant(rng.normal(size=(1, 4))), same, random_theta).value
    np.testing.assert_allclose(row, np.full((1, 3), 1.0 / 3.0))


def test_context_is_the_weighted_sum_of_states(random_theta, rng):
    h = encode([4, 5, 6], random_theta)
    states = h.states.value

    one_hot = np.array([[0.0, 1.0, 0.0]])
    np.testing.assert_array_equal(context(constant(one_hot), h).value, states[1:2])

    uniform = np.full((1, 3), 1.0 / 3.0)
    np.testing.assert_allclose(context(constant(uniform), h).value, states.mean(axis=0, keepdims=True))

    weights = rng.dirichlet(np.ones(3))[None, :]
    expected = sum(weights[0, m] * states[m] for m in range(3))[None, :]
    np.testing.assert_allclose(context(constant(weights), h).value, expected, rtol=1e-12, atol=1e-15)

    with pytest.raises(ContractError):
        context(constant(np.ones((1, 2)) / 2.0), h)


def test_decoder_step_is_one_gru_update(random_theta, rng):
    s_prev, c = rng.normal(size=(1, 4)), rng.normal(size=(1, 8))
    s = decoder_step(constant(s_prev), 5, constant(c), random_theta).value

    t = {name: node.value for name, node in random_theta.items()}
    x = np.concatenate([t["tgt_embed"][5:6], c], axis=1)
    z = sigmoid(x @ t["dec.W_z"] + t["dec.b_z"] + s_prev @ t["dec.U_z"])
    r = sigmoid(x @ t["dec.W_r"] + t["dec.b_r"] + s_prev @ t["dec.U_r"])
    candidate = np.tanh(x @ t["dec.W_h"] + t["dec.b_h"] + (r * s_prev) @ t["dec.U_h"])
    np.testing.assert_allclose(s, (1.0 - z) * s_prev + z * candidate, rtol=1e-12, atol=1e-14)


def test_output_distribution_matches_an_explicit_readout(random_theta, rng):
    s, c = rng.normal(size=(1, 4)), rng.normal(size=(1, 8))
    probs = output_distribution(6, constant(s), constant(c), random_theta).value

    t = {name: node.value for name, node in random_theta.items()}
    readout = np.tanh(s @ t["out.W_s"] + c @ t["out.W_c"] + t["tgt_embed"][6:7] @ t["out.W_y"] + t["out.b"])
    expected = softmax(readout @ t["out.W_o"] + t["out.b_o"])
    np.testing.assert_allclose(probs, expected, rtol=1e-12, atol=1e-15)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_log_likelihood_reports_underflowed_gold_tokens(tiny_config):
    tensors = dict(init_parameters(tiny_config, seed=0).tensors)
    tensors["out.b_o"] = np.full((1, 12), -1e4)
    tensors["out.b_o"][0, 7] = 0.0
    theta = ModelParameters(tiny_config, tensors).bind(requires_grad=False)

    with pytest.raises(UnderflowError, match=r"positions \[1\]") as excinfo:
        sentence_log_likelihood(SentencePair((4, 5), (7,)), theta)
    assert isinstance(excinfo.value, DomainError)
