import numpy as np
import pytest

from ganfolio import autodiff as ad
from ganfolio import gan, scenarios
from ganfolio.data import WindowConfig, denormalize, extract_window, load_prices
from ganfolio.errors import ConfigError, DataError, ShapeError

from conftest import make_price_matrix
from test_gan import small_bundle


@pytest.fixture(scope="module")
def trained_like_bundle():
    bundle = small_bundle(seed=40)
    bundle.trained = True
    return bundle


def reference(n_days=52, seed=41):
    return make_price_matrix(n_assets=3, n_days=n_days, seed=seed)


def test_block_layout_full_horizon():
    blocks = scenarios.block_starts(800, WindowConfig(40, 20))
    assert len(blocks) == 38
    assert blocks[0] == (41, 20) and blocks[-1] == (781, 20)


def test_block_layout_with_remainder():
    blocks = scenarios.block_starts(805, WindowConfig(40, 20))
    assert len(blocks) == 39
    assert blocks[-1] == (801, 5)


def test_generate_scenarios_accounting(trained_like_bundle):
    ref = reference()
    window = WindowConfig(8, 4)
    out = scenarios.generate_scenarios(trained_like_bundle, ref, window, 2, seed=1)
    assert out.n_draws == 2
    for draw in out.draws:
        assert draw.shape == ref.values.shape
        assert np.array_equal(draw[:, :8], ref.values[:, :8])
        assert np.isfinite(draw).all()
    # distinct seeds give distinct paths beyond the copied prefix
    assert not np.array_equal(out.draws[0][:, 8:], out.draws[1][:, 8:])


def test_each_generated_column_written_once(trained_like_bundle):
    # lengths of the generation blocks tile the horizon exactly once
    ref = reference(n_days=53)  # 8 + 11*4 + remainder 1
    window = WindowConfig(8, 4)
    blocks = scenarios.block_starts(53, window)
    cover = np.zeros(53, dtype=int)
    for start, length in blocks:
        cover[start - 1:start - 1 + length] += 1
    assert (cover[8:] == 1).all() and (cover[:8] == 0).all()
    out = scenarios.generate_scenarios(trained_like_bundle, ref, window, 1, seed=2)
    assert np.isfinite(out.draws[0]).all()


def test_generation_is_recomputable_from_truth(trained_like_bundle):
    """Each block is a pure function of the true history and the latent draw."""
    ref = reference()
    window = WindowConfig(8, 4)
    out = scenarios.generate_scenarios(trained_like_bundle, ref, window, 1, seed=3)
    rng = ad.make_rng(out.seeds[0])
    for start, length in scenarios.block_starts(ref.n_days, window):
        sample = extract_window(ref, start - window.past, window, with_future=False)
        z = rng.standard_normal(trained_like_bundle.latent_dim)
        block = denormalize(gan.generate(trained_like_bundle, z, sample.history),
                            sample.stats)
        assert np.array_equal(out.draws[0][:, start - 1:start - 1 + length],
                              block[:, :length])


def test_untrained_bundle_is_rejected():
    bundle = small_bundle(seed=42)
    ref = reference()
    with pytest.raises(ConfigError, match="untrained"):
        scenarios.generate_scenarios(bundle, ref, WindowConfig(8, 4), 1, seed=0)
    out = scenarios.generate_scenarios(bundle, ref, WindowConfig(8, 4), 1, seed=0,
                                       allow_untrained=True)
    assert out.n_draws == 1


def test_dimension_mismatches(trained_like_bundle):
    ref = make_price_matrix(n_assets=2, n_days=40, seed=4)
    with pytest.raises(ShapeError):
        scenarios.generate_scenarios(trained_like_bundle, ref, WindowConfig(8, 4),
                                     1, seed=0)
    ref3 = reference()
    with pytest.raises(ConfigError):
        scenarios.generate_scenarios(trained_like_bundle, ref3, WindowConfig(10, 4),
                                     1, seed=0)


def test_continuity_shift_anchors_blocks(trained_like_bundle):
    ref = reference()
    window = WindowConfig(8, 4)
    out = scenarios.generate_scenarios(trained_like_bundle, ref, window, 1, seed=5,
                                       continuity_shift=True)
    for start, _ in scenarios.block_starts(ref.n_days, window):
        assert np.allclose(out.draws[0][:, start - 1], ref.values[:, start - 2])


def test_export_load_roundtrip(tmp_path, trained_like_bundle):
    ref = reference()
    out = scenarios.generate_scenarios(trained_like_bundle, ref, WindowConfig(8, 4),
                                       3, seed=6)
    paths = scenarios.export_scenarios(out, tmp_path)
    assert len(paths) == 4  # three draws plus manifest
    manifest = scenarios.read_manifest(tmp_path / "manifest.txt")
    assert manifest["draws"] == "3"
    assert len([k for k in manifest if k.startswith("seed_")]) == 3

    loaded = scenarios.load_scenarios(tmp_path, ref)
    assert loaded.n_draws == 3
    for a, b in zip(out.draws, loaded.draws):
        assert np.array_equal(a, b)  # repr round-trip is exact
    assert loaded.seeds == out.seeds


def test_manifest_seeds_reproduce_files_byte_for_byte(tmp_path, trained_like_bundle):
    ref = reference()
    window = WindowConfig(8, 4)
    first = scenarios.generate_scenarios(trained_like_bundle, ref, window, 2, seed=7)
    scenarios.export_scenarios(first, tmp_path / "a")
    seeds = scenarios.load_scenarios(tmp_path / "a", ref).seeds

    second = scenarios.generate_scenarios(trained_like_bundle, ref, window, 2,
                                          seed=seeds)
    scenarios.export_scenarios(second, tmp_path / "b")
    for name in ["scenario_0000.csv", "scenario_0001.csv"]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_exported_draws_load_as_prices_when_positive(tmp_path, trained_like_bundle):
    ref = reference()
    out = scenarios.generate_scenarios(trained_like_bundle, ref, WindowConfig(8, 4),
                                       1, seed=8)
    if (out.draws[0] > 0).all():
        scenarios.export_scenarios(out, tmp_path)
        pm = load_prices(tmp_path / "scenario_0000.csv")
        assert np.max(np.abs(pm.values - out.draws[0])) < 1e-12


def test_scenario_set_validates_prefix():
    ref = reference()
    bad = ref.values.copy()
    bad[0, 0] += 1.0
    with pytest.raises(DataError, match="prefix"):
        scenarios.ScenarioSet(ref, WindowConfig(8, 4), [bad], [0])
