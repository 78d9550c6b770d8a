import numpy as np
import pytest

from semcodebook.analytics import total_semantic_distortion
from semcodebook.channel import ChannelSpec
from semcodebook.codebook import Codebook, FeatureSet, quantize_batch
from semcodebook.losses import LossWeights
from semcodebook.mixture import MixtureSpec, generate_mixture
from semcodebook.simulation import per_trial_mse, simulate_link
from semcodebook.training import TrainConfig, train_codebook


@pytest.fixture(scope="module")
def demo():
    from conftest import PRESETS
    Z, _ = generate_mixture(MixtureSpec.load(PRESETS / "channel_demo.json"))
    return Z


def test_noiseless_link_equals_quantization_error(rng):
    Z, C = FeatureSet(rng.normal(size=(200, 3))), Codebook(rng.normal(size=(5, 3)))
    rep = simulate_link(Z, C, ChannelSpec(0.0), 3, seed=1)
    assert rep.index_error_rate == 0.0
    assert rep.mse_mean == pytest.approx(total_semantic_distortion(Z, C, 0.0).d_quant, rel=1e-12)
    assert rep.mse_stderr == 0.0


def test_centroid_codebook_mse_matches_analytic(demo):
    C, _ = train_codebook(demo, 8, LossWeights(0, 0), ChannelSpec(), TrainConfig(epochs=60, update="lloyd"))
    rep = simulate_link(demo, C, ChannelSpec(0.05), 2000, seed=4)
    assert rep.mse_mean == pytest.approx(rep.analytic_ds, rel=0.01)
    assert rep.index_error_rate == pytest.approx(rep.analytic_pe, rel=0.02)


@pytest.mark.parametrize("model", ["uniform", "exact"])
def test_any_codebook_mse_matches_expected(rng, demo, model):
    C = Codebook(rng.normal(size=(6, 2)))
    rep = simulate_link(demo, C, ChannelSpec(0.1, model), 2000, seed=5)
    lo, hi = rep.mse_mean - 4 * rep.mse_stderr, rep.mse_mean + 4 * rep.mse_stderr
    assert lo <= rep.expected_mse <= hi


def test_trial_stream_layout(rng):
    Z, C = FeatureSet(rng.normal(size=(40, 2))), Codebook(rng.normal(size=(4, 2)))
    ch = ChannelSpec(0.2)
    mse, _ = per_trial_mse(Z, C, ch, 10, seed=2)
    again, _ = per_trial_mse(Z, C, ch, 10, seed=2)
    assert mse.tobytes() == again.tobytes()
    first, _ = per_trial_mse(Z, C, ch, 4, seed=2)
    assert np.array_equal(first, mse[:4])


def test_simulation_validation(rng):
    Z, C = FeatureSet(rng.normal(size=(10, 2))), Codebook(rng.normal(size=(4, 2)))
    with pytest.raises(ValueError):
        simulate_link(Z, C, ChannelSpec(0.1), 0, seed=0)
    with pytest.raises(ValueError):
        simulate_link(FeatureSet(rng.normal(size=(10, 3))), C, ChannelSpec(0.1), 5, seed=0)


def test_report_fields(rng):
    Z, C = FeatureSet(rng.normal(size=(30, 2))), Codebook(rng.normal(size=(4, 2)))
    rep = simulate_link(Z, C, ChannelSpec(0.05), 50, seed=0)
    lo, hi = rep.ci95()
    assert lo < rep.mse_mean < hi
    assert rep.symbols == 1500 and rep.trials == 50
    assert rep.entropy_bits == pytest.approx(rep.entropy_nats / np.log(2))
