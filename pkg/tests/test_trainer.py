import pytest
import torch
import torch.nn as nn

from data import synthetic_series
from errors import ContractError, DimensionError, DivergenceError
from model.emaformer import EMAformer
from model.history import EpochRecord, TrainReport
from model.loss import L1Loss
from model.metric import evaluate
from model.optimizer import ClippedAdam
from preprocessing.series import Split, make_windows


@pytest.fixture
def windows(make_dataset):
    frame = synthetic_series(steps=240, channels=4, period_daily=6, pulse_width=2, seed=4)
    ds = make_dataset(frame.iloc[:, 1:].to_numpy(), period_daily=6, split_bounds=(168, 204))
    return {split: make_windows(ds, split, lookback=8, horizon=4, period=6) for split in Split}


def parameter(*values) -> nn.Parameter:
    return nn.Parameter(torch.tensor(values))


def test_adam_first_step_moves_by_learning_rate_times_sign():
    p = parameter(0.5, -0.25)
    optimizer = ClippedAdam([('p', p)], learning_rate=1e-3, clip_norm=None)
    p.grad = torch.tensor([0.3, -2.0])
    optimizer.step()
    expected = [0.5 - 1e-3 * 0.3 / (0.3 + 1e-8), -0.25 + 1e-3 * 2.0 / (2.0 + 1e-8)]
    assert p.detach().tolist() == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_adam_zero_gradient_from_fresh_state_is_a_no_op():
    p = parameter(0.5, -0.25)
    optimizer = ClippedAdam([('p', p)], learning_rate=1e-3)
    p.grad = torch.zeros(2)
    optimizer.step()
    assert p.detach().tolist() == [0.5, -0.25]


def test_adam_moments_decay_under_zero_gradient():
    p = parameter(1.0)
    optimizer = ClippedAdam([('p', p)], learning_rate=1e-3, clip_norm=None)
    p.grad = torch.tensor([1.0])
    optimizer.step()
    first = optimizer.state_of(p)['exp_avg'].clone()
    p.grad = torch.tensor([0.0])
    optimizer.step()
    assert torch.allclose(optimizer.state_of(p)['exp_avg'], first * 0.9, atol=1e-15)


def test_adam_is_deterministic():
    def run():
        p = parameter(0.1, 0.2, 0.3)
        optimizer = ClippedAdam([('p', p)], learning_rate=1e-2)
        for grad in ([1.0, -2.0, 0.5], [0.3, 0.3, -0.1]):
            p.grad = torch.tensor(grad)
            optimizer.step()
        return p.detach()
    assert torch.equal(run(), run())


def test_non_finite_gradient_raises_divergence():
    p = parameter(1.0, 2.0)
    optimizer = ClippedAdam([('p', p)])
    p.grad = torch.tensor([float('nan'), 0.0])
    with pytest.raises(DivergenceError):
        optimizer.step()


def test_gradient_is_clipped_to_global_norm():
    p = parameter(0.0, 0.0)
    optimizer = ClippedAdam([('p', p)], learning_rate=0.0, clip_norm=5.0)
    p.grad = torch.tensor([6.0, 8.0])
    assert optimizer.step() == pytest.approx(10.0)
    assert float(p.grad.norm()) == pytest.approx(5.0, rel=1e-6)


def test_frozen_parameters_are_not_optimized():
    frozen = nn.Parameter(torch.zeros(2), requires_grad=False)
    optimizer = ClippedAdam([('p', parameter(1.0)), ('frozen', frozen)])
    assert [name for name, _ in optimizer.named_parameters] == ['p']


def test_l1_loss_examples():
    criterion = L1Loss()
    assert float(criterion(torch.ones(2, 3), torch.ones(2, 3))) == 0.0
    assert float(criterion(torch.zeros(2, 3), torch.ones(2, 3))) == 1.0
    assert float(criterion(torch.tensor([1.0, -3.0]), torch.zeros(2))) == 2.0


def test_l1_subgradient_is_zero_at_equality():
    outputs = torch.ones(3, requires_grad=True)
    L1Loss()(outputs, torch.ones(3)).backward()
    assert torch.equal(outputs.grad, torch.zeros(3))


def test_l1_rejects_shape_mismatch():
    with pytest.raises(DimensionError):
        L1Loss()(torch.ones(2, 3), torch.ones(3, 2))


def test_evaluate_of_perfect_oracle_is_zero(windows):
    test = windows[Split.TEST]

    def oracle(x, t_last):
        rows = (t_last - test.start_index + 1).unsqueeze(-1) + torch.arange(test.horizon)
        return test.values[rows]

    assert evaluate(oracle, test) == (0.0, 0.0)


def test_evaluate_hand_computed(windows):
    test = windows[Split.TEST][:2]
    _, y, _ = test.tensors()
    mse, mae = evaluate(lambda x, t_last: torch.zeros_like(y[:x.size(0)]), test, batch_size=1)
    assert mse == pytest.approx(float((y * y).mean()), rel=1e-12)
    assert mae == pytest.approx(float(y.abs().mean()), rel=1e-12)


def test_evaluate_rejects_empty_window_set(windows):
    with pytest.raises(ContractError):
        evaluate(lambda x, t_last: x, windows[Split.TEST][:0])


@pytest.mark.parametrize("learning_rate", [1e-4, 1e-5])
def test_one_small_step_decreases_the_loss(tiny_config, windows, learning_rate):
    trainer = EMAformer(tiny_config(), learning_rate=learning_rate, clip_norm=None)
    x, y, t_last = windows[Split.TRAIN][:32].tensors()
    before = float(trainer.criterion(trainer.model(x, t_last), y))
    assert trainer.train_step(x, y, t_last) == pytest.approx(before)
    after = float(trainer.criterion(trainer.model(x, t_last), y))
    assert after < before


def test_zero_learning_rate_leaves_parameters_unchanged(tiny_config, windows):
    trainer = EMAformer(tiny_config(), learning_rate=0.0)
    before = trainer.snapshot()
    report = trainer.fit(windows[Split.TRAIN], windows[Split.VALID], epochs=2, batch_size=16, patience=5)
    for name, tensor in trainer.model.state_dict().items():
        assert torch.equal(tensor, before[name]), name
    assert report.epochs[0].train_l1 == pytest.approx(report.epochs[1].train_l1, rel=1e-12)


def test_early_stopping_after_patience(tiny_config, windows):
    trainer = EMAformer(tiny_config(), learning_rate=0.0)
    report = trainer.fit(windows[Split.TRAIN], windows[Split.VALID], epochs=50, batch_size=32, patience=2)
    assert report.stopped_early
    assert report.best_epoch == 1
    assert len(report.epochs) == 3


def test_training_is_reproducible(tiny_config, windows, tmp_path):
    for run in ('a', 'b'):
        trainer = EMAformer(tiny_config(seed=9), learning_rate=1e-3)
        trainer.fit(windows[Split.TRAIN], windows[Split.VALID], windows[Split.TEST], epochs=2, batch_size=16, checkpoint=str(tmp_path / run / 'checkpoint'))
    assert (tmp_path / 'a' / 'checkpoint.bin').read_bytes() == (tmp_path / 'b' / 'checkpoint.bin').read_bytes()


def test_best_epoch_weights_are_restored(tiny_config, windows, tmp_path):
    trainer = EMAformer(tiny_config(), learning_rate=1e-3)
    report = trainer.fit(windows[Split.TRAIN], windows[Split.VALID], windows[Split.TEST], epochs=3, batch_size=16, checkpoint=str(tmp_path / 'checkpoint'))
    valid_mse, _ = trainer.evaluate(windows[Split.VALID])
    assert valid_mse == pytest.approx(report.best_valid_mse, rel=1e-12)
    assert report.test_mse is not None and report.test_mae is not None
    restored = EMAformer(tiny_config(), checkpoint=str(tmp_path / 'checkpoint'))
    assert restored.evaluate(windows[Split.VALID])[0] == pytest.approx(report.best_valid_mse, rel=1e-12)


def test_ablated_tables_stay_zero_during_training(tiny_config, windows):
    trainer = EMAformer(tiny_config(ablation={'phase', 'joint'}), learning_rate=1e-2)
    trainer.fit(windows[Split.TRAIN], windows[Split.VALID], epochs=1, batch_size=16)
    embedding = trainer.model.embedding
    assert torch.equal(embedding.phase_table, torch.zeros_like(embedding.phase_table))
    assert torch.equal(embedding.joint_table, torch.zeros_like(embedding.joint_table))
    assert embedding.channel_table.abs().sum() > 0


def test_nan_inputs_raise_divergence(tiny_config, windows):
    train = windows[Split.TRAIN]
    poisoned = train.subset(train.starts)
    poisoned.values = train.values.clone()
    poisoned.values[10, 0] = float('nan')
    with pytest.raises(DivergenceError):
        EMAformer(tiny_config()).fit(poisoned, windows[Split.VALID], epochs=1, batch_size=16)


def test_report_round_trip(tmp_path):
    report = TrainReport(config_tag='token+phase')
    report.add(EpochRecord(epoch=1, train_l1=0.5, valid_mse=0.4, valid_mae=0.3))
    assert not report.add(EpochRecord(epoch=2, train_l1=0.4, valid_mse=0.45, valid_mae=0.35))
    report.save(tmp_path / 'report.json')
    assert TrainReport.load(tmp_path / 'report.json') == report


@pytest.mark.slow
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_phase_embeddings_help_on_phase_locked_pulses(tiny_config, make_dataset, seed):
    frame = synthetic_series(steps=2400, channels=4, period_daily=24, wave=0.0, noise=0.1, seed=seed)
    ds = make_dataset(frame.iloc[:, 1:].to_numpy(), split_bounds=(1680, 1920))
    sets = {split: make_windows(ds, split, lookback=4, horizon=6, period=24) for split in Split}
    scores = {}
    for ablation in (frozenset(), frozenset({'channel', 'phase', 'joint'})):
        config = tiny_config(lookback=4, horizon=6, channels=4, period=24, embedding_dim=32, heads=4, d_ff=64, revin=False, ablation=ablation, seed=seed)
        report = EMAformer(config, learning_rate=2e-3).fit(sets[Split.TRAIN], sets[Split.VALID], epochs=10, batch_size=64, patience=10)
        scores[config.config_tag] = report.epochs[report.best_epoch - 1].valid_mae
    assert scores['full'] < scores['token-only']
