import pytest
import torch

from errors import DimensionError
from model.components.embedding import EmbeddingSuite
from model.core import backward


def suite(lookback=4, channels=3, period=6, embedding_dim=8, ablation=(), seed=0) -> EmbeddingSuite:
    torch.manual_seed(seed)
    return EmbeddingSuite(lookback=lookback, channels=channels, period=period, embedding_dim=embedding_dim, ablation=ablation)


def test_variate_tokenize_gives_one_token_per_channel():
    embedding = suite(lookback=96, channels=7, embedding_dim=16)
    assert embedding.variate_tokenize(torch.randn(96, 7)).shape == (7, 16)
    assert embedding.variate_tokenize(torch.randn(5, 96, 7)).shape == (5, 7, 16)


def test_variate_tokenize_with_zero_weight_returns_bias():
    embedding = suite()
    with torch.no_grad():
        embedding.token_weight.zero_()
    tokens = embedding.variate_tokenize(torch.randn(4, 3))
    assert torch.equal(tokens, embedding.token_bias.detach().expand(3, 8))


def test_variate_tokenize_with_basis_weight_selects_first_step():
    embedding = suite(lookback=3, channels=1)
    with torch.no_grad():
        embedding.token_weight.zero_()
        embedding.token_weight[0, 0] = 1.0
        embedding.token_bias.zero_()
    x = torch.tensor([[2.5], [7.0], [-1.0]])
    assert float(embedding.variate_tokenize(x)[0, 0]) == 2.5


def test_variate_tokenize_rejects_wrong_lookback():
    with pytest.raises(DimensionError):
        suite(lookback=4).variate_tokenize(torch.randn(5, 3))


def test_channel_rows_do_not_depend_on_time():
    embedding = suite(channels=7)
    rows = embedding.embed_channels()
    assert rows.shape == (7, 8)
    assert torch.equal(rows, embedding.channel_table.detach())


def test_channel_gradient_accumulates_across_windows():
    embedding = suite()
    loss = embedding.embed_channels().sum() + embedding.embed_channels().sum()
    backward(loss)
    assert torch.equal(embedding.channel_table.grad, torch.full((3, 8), 2.0))


def test_phase_rows_repeat_the_table_row_for_every_channel():
    embedding = suite(channels=3, period=24)
    rows = embedding.embed_phase(torch.tensor(100))
    assert rows.shape == (3, 8)
    assert torch.equal(rows, embedding.phase_table.detach()[4].expand(3, 8))


def test_phase_rows_are_periodic():
    embedding = suite(period=24)
    t_last = torch.tensor([5, 17])
    assert torch.equal(embedding.embed_phase(t_last), embedding.embed_phase(t_last + 24))


def test_joint_rows_follow_channel_major_layout():
    embedding = suite(channels=2, period=2)
    rows = embedding.embed_joint(torch.tensor(1))
    table = embedding.joint_table.detach()
    assert torch.equal(rows[0], table[1])
    assert torch.equal(rows[1], table[3])


def test_joint_gradient_touches_only_indexed_rows():
    embedding = suite(channels=2, period=3)
    backward(embedding.embed_joint(torch.tensor(4)).sum())
    grad = embedding.joint_table.grad
    touched = {0 * 3 + 1, 1 * 3 + 1}
    for row in range(6):
        expected = 1.0 if row in touched else 0.0
        assert torch.equal(grad[row], torch.full((8,), expected))


def test_fuse_of_zero_tables_is_the_token():
    token = torch.randn(3, 8)
    zeros = torch.zeros(3, 8)
    assert torch.equal(EmbeddingSuite.fuse(token, zeros, zeros, zeros), token)


def test_fuse_is_order_independent():
    parts = [torch.randn(3, 8) for _ in range(4)]
    assert torch.allclose(EmbeddingSuite.fuse(*parts), EmbeddingSuite.fuse(*reversed(parts)), atol=1e-14)


def test_fuse_rejects_shape_mismatch():
    with pytest.raises(DimensionError):
        EmbeddingSuite.fuse(torch.zeros(3, 8), torch.zeros(3, 4))


def test_forward_adds_every_enabled_table():
    embedding = suite(channels=2, period=6)
    x, t_last = torch.randn(4, 2), torch.tensor(9)
    expected = embedding.variate_tokenize(x) + embedding.channel_table + embedding.phase_table[3] + embedding.joint_table[[3, 9]]
    assert torch.allclose(embedding(x, t_last), expected, atol=1e-14)


@pytest.mark.parametrize("ablation", [('channel',), ('phase', 'joint'), ('channel', 'phase', 'joint')])
def test_ablation_equals_adding_zero_tables(ablation):
    ablated = suite(ablation=ablation)
    full = suite()
    full.load_state_dict(ablated.state_dict())
    x, t_last = torch.randn(5, 4, 3), torch.tensor([0, 3, 7, 11, 30])
    assert torch.equal(ablated(x, t_last), full(x, t_last))


def test_ablated_tables_are_frozen_zeros():
    embedding = suite(ablation=('phase',))
    assert not embedding.phase_table.requires_grad
    assert torch.equal(embedding.phase_table, torch.zeros(6, 8))
    assert embedding.channel_table.requires_grad


def test_tables_reshape_joint_per_channel():
    embedding = suite(channels=3, period=6)
    tables = embedding.tables()
    assert tables['joint'].shape == (3, 6, 8)
    assert torch.equal(tables['joint'][2, 5], embedding.joint_table.detach()[2 * 6 + 5])
