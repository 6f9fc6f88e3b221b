import numpy as np
import pytest

from famdiff.attention import AttnModConfig, TapSession, TapStore
from famdiff.denoiser import (
    BLOCK_LABELS,
    DenoiserSpec,
    GaussianFieldModel,
    ToyAttentionNet,
    analytic_eps,
    analytic_eps_spectral,
    rescale_gaussian,
    resolution_adapt,
    sample_field,
    toy_net_eps,
)
from famdiff.errors import CapacityError, ParameterError, ShapeError, SizeError
from famdiff.grid import LatentGrid
from famdiff.rng import NoiseSource
from famdiff.schedule import diffuse_marginal, make_linear_schedule, predict_z0
from oracles import posterior_eps_bin, posterior_z0_bin


def test_gaussian_model_validation():
    with pytest.raises(SizeError):
        GaussianFieldModel(mean=0.0, power=np.ones(4))
    asym = np.ones((4, 4))
    asym[1, 0] = 2.0  # partner bin (3, 0) stays 1
    with pytest.raises(ParameterError):
        GaussianFieldModel(mean=0.0, power=asym)
    with pytest.raises(ParameterError):
        GaussianFieldModel(mean=0.0, power=np.zeros((4, 4)))


def test_white_and_smooth_profiles():
    white = GaussianFieldModel.white(0.5, 6, 4, scale=2.0)
    assert np.all(white.power == 2.0)
    assert white.profile == ("white", 2.0)
    smooth = GaussianFieldModel.smooth(0.0, 8, 8, strength=4.0)
    assert smooth.power[0, 0] == 1.0  # DC keeps full power
    assert smooth.power[4, 4] == pytest.approx(1.0 / 5.0)  # Nyquist is damped most
    assert smooth.power.max() == 1.0 and smooth.power.min() > 0.0


def test_rescale_gaussian():
    smooth = GaussianFieldModel.smooth(0.3, 8, 8, strength=2.0)
    assert rescale_gaussian(smooth, 8, 8) is smooth
    bigger = rescale_gaussian(smooth, 16, 16)
    assert (bigger.height, bigger.width) == (16, 16)
    assert bigger.profile == smooth.profile and bigger.mean == smooth.mean
    custom = GaussianFieldModel(mean=0.0, power=np.ones((4, 4)))
    with pytest.raises(ParameterError):
        rescale_gaussian(custom, 8, 8)


def test_sample_field_moments():
    # Monte-Carlo check of the generator: per-pixel mean and per-bin power
    model = GaussianFieldModel.smooth(0.7, 8, 8, strength=4.0)
    gen = np.random.default_rng(0)
    draws = 4000
    acc_mean = 0.0
    acc_power = np.zeros((8, 8))
    for _ in range(draws):
        x = sample_field(model, 1, gen).data[0]
        acc_mean += x.mean()
        acc_power += np.abs(np.fft.fft2(x - model.mean)) ** 2
    acc_mean /= draws
    emp_power = acc_power / draws / (8 * 8)
    assert abs(acc_mean - 0.7) < 0.01
    assert np.max(np.abs(emp_power - model.power) / model.power) < 0.15


def test_sample_field_is_real_and_deterministic():
    model = GaussianFieldModel.smooth(0.0, 6, 6)
    a = sample_field(model, 2, NoiseSource(3).generator(0, 0))
    b = sample_field(model, 2, NoiseSource(3).generator(0, 0))
    assert np.array_equal(a.data, b.data)
    assert a.data.dtype == np.float64


def test_analytic_eps_matches_per_bin_oracle():
    sched = make_linear_schedule(T=100)
    model = GaussianFieldModel.smooth(0.4, 6, 5, strength=3.0)
    rng = np.random.default_rng(1)
    z_t = LatentGrid(rng.normal(size=(2, 6, 5)))
    t = 60
    out = analytic_eps(z_t, t, sched, model).eps_hat
    abar = sched.alpha_bar(t)
    mhat = np.zeros((6, 5), dtype=np.complex128)
    mhat[0, 0] = 0.4 * 6 * 5
    for ch in range(2):
        Z = np.fft.fft2(z_t.data[ch])
        ref_spec = np.empty_like(Z)
        for ky in range(6):
            for kx in range(5):
                ref_spec[ky, kx] = posterior_eps_bin(
                    Z[ky, kx], mhat[ky, kx], model.power[ky, kx], abar
                )
        ref = np.fft.ifft2(ref_spec).real
        assert np.max(np.abs(out.data[ch] - ref)) <= 1e-10


def test_analytic_eps_gives_exact_posterior_z0():
    # predict_z0 on the analytic eps equals E[Z0 | Z_t] bin by bin
    sched = make_linear_schedule(T=50)
    model = GaussianFieldModel.smooth(0.2, 8, 8)
    rng = np.random.default_rng(2)
    z_t = LatentGrid(rng.normal(size=(1, 8, 8)))
    t = 30
    eps = analytic_eps(z_t, t, sched, model).eps_hat
    z0 = predict_z0(z_t, eps, t, sched)
    abar = sched.alpha_bar(t)
    Z = np.fft.fft2(z_t.data[0])
    mhat = np.zeros((8, 8), dtype=np.complex128)
    mhat[0, 0] = 0.2 * 64
    ref = np.empty_like(Z)
    for ky in range(8):
        for kx in range(8):
            ref[ky, kx] = posterior_z0_bin(Z[ky, kx], mhat[ky, kx], model.power[ky, kx], abar)
    assert np.max(np.abs(np.fft.fft2(z0.data[0]) - ref)) <= 1e-8


def test_analytic_eps_is_the_conditional_mean():
    # joint-Gaussian regression slope per bin: Cov(E, Z_t) / Var(Z_t) must
    # match the posterior coefficient the backend uses
    sched = make_linear_schedule(T=10)
    model = GaussianFieldModel.smooth(0.0, 8, 8, strength=4.0)
    t = 6
    abar = sched.alpha_bar(t)
    gen = np.random.default_rng(3)
    draws = 5000
    num = np.zeros((8, 8))
    den = np.zeros((8, 8))
    for _ in range(draws):
        z0 = sample_field(model, 1, gen)
        noise = LatentGrid(gen.standard_normal((1, 8, 8)))
        z_t = diffuse_marginal(z0, t, sched, noise)
        Zt = np.fft.fft2(z_t.data[0])
        E = np.fft.fft2(noise.data[0])
        num += (E * Zt.conj()).real
        den += np.abs(Zt) ** 2
    slope = num / den
    expect = np.sqrt(1.0 - abar) / (abar * model.power + (1.0 - abar))
    # per-bin regression-slope standard error; self-conjugate bins are real
    # Gaussians with half the complex degrees of freedom
    rho2 = (1.0 - abar) / (abar * model.power + (1.0 - abar))
    se = expect * np.sqrt((1.0 - rho2) / (draws * rho2))
    for by, bx in ((0, 0), (0, 4), (4, 0), (4, 4)):
        se[by, bx] *= np.sqrt(2.0)
    assert np.max(np.abs(slope - expect) / se) < 5.0


def test_analytic_eps_spectral_matches_spatial():
    sched = make_linear_schedule(T=20)
    model = GaussianFieldModel.white(0.1, 4, 4)
    rng = np.random.default_rng(4)
    z = LatentGrid(rng.normal(size=(1, 4, 4)))
    via_spatial = analytic_eps(z, 9, sched, model).eps_hat.data[0]
    via_spec = np.fft.ifft2(
        analytic_eps_spectral(np.fft.fft2(z.data[0]), 9, sched, model)
    ).real
    assert np.max(np.abs(via_spatial - via_spec)) <= 1e-12


def test_analytic_eps_checks_dims():
    sched = make_linear_schedule(T=10)
    model = GaussianFieldModel.white(0.0, 4, 4)
    with pytest.raises(SizeError):
        analytic_eps(LatentGrid(np.zeros((1, 8, 8))), 3, sched, model)


def test_toy_net_construction_rules():
    ToyAttentionNet(seed=1, channels=2, height=4, width=6)
    with pytest.raises(ShapeError):
        ToyAttentionNet(seed=1, channels=2, height=5, width=4)  # odd
    with pytest.raises(SizeError):
        ToyAttentionNet(seed=1, channels=0, height=4, width=4)
    with pytest.raises(CapacityError):
        ToyAttentionNet(seed=1, channels=1, height=128, width=64)  # 8192 tokens


def test_toy_net_golden_values():
    net = ToyAttentionNet(seed=42, channels=2, height=4, width=4)
    z = LatentGrid((np.arange(32, dtype=np.float64).reshape(2, 4, 4) - 15.5) / 16.0)
    out = toy_net_eps(z, 10, net).eps_hat.data
    assert out.shape == (2, 4, 4)
    assert out.sum() == pytest.approx(0.15191231649563808, abs=1e-13)
    assert out[0, 0, 0] == pytest.approx(-0.017308355343483926, abs=1e-13)
    assert out[1, 2, 3] == pytest.approx(0.025795417866506951, abs=1e-13)
    # the timestep embedding changes the output
    assert toy_net_eps(z, 500, net).eps_hat.data.sum() == pytest.approx(
        0.14126751673451426, abs=1e-13
    )


def test_toy_net_deterministic_and_seed_sensitive():
    z = LatentGrid(np.random.default_rng(5).normal(size=(2, 4, 4)))
    a = toy_net_eps(z, 7, ToyAttentionNet(seed=9, channels=2, height=4, width=4))
    b = toy_net_eps(z, 7, ToyAttentionNet(seed=9, channels=2, height=4, width=4))
    c = toy_net_eps(z, 7, ToyAttentionNet(seed=10, channels=2, height=4, width=4))
    assert np.array_equal(a.eps_hat.data, b.eps_hat.data)
    assert not np.array_equal(a.eps_hat.data, c.eps_hat.data)


def test_toy_net_even_shift_equivariance():
    # circular convs and token-permutation attention commute with even shifts
    net = ToyAttentionNet(seed=42, channels=1, height=6, width=4)
    z = LatentGrid(np.random.default_rng(6).normal(size=(1, 6, 4)))
    base = toy_net_eps(z, 11, net).eps_hat.data
    rolled = LatentGrid(np.roll(z.data, (2, 2), axis=(1, 2)))
    lhs = toy_net_eps(rolled, 11, net).eps_hat.data
    assert np.max(np.abs(lhs - np.roll(base, (2, 2), axis=(1, 2)))) <= 1e-12


def test_toy_net_rejects_mismatched_input():
    net = ToyAttentionNet(seed=1, channels=2, height=4, width=4)
    with pytest.raises(ShapeError):
        toy_net_eps(LatentGrid(np.zeros((2, 6, 6))), 3, net)


def test_toy_net_taps_fire_per_block():
    net = ToyAttentionNet(seed=1, channels=1, height=4, width=4)
    cfg = AttnModConfig(mode="modulate", lam=0.5, target_blocks=frozenset(BLOCK_LABELS))
    store = TapStore()
    session = TapSession(cfg, store, phase="capture")
    session.begin_step(40)
    toy_net_eps(LatentGrid(np.zeros((1, 4, 4))), 40, net, taps=session)
    assert [r.block for r in session.log] == list(BLOCK_LABELS)
    assert len(store) == 3


def test_tapped_replay_changes_output_only_in_target_block():
    rng = np.random.default_rng(7)
    native = ToyAttentionNet(seed=3, channels=1, height=4, width=4)
    high = resolution_adapt(native, 2)
    z_lo = LatentGrid(rng.normal(size=(1, 4, 4)))
    z_hi = LatentGrid(rng.normal(size=(1, 8, 8)))
    cfg = AttnModConfig(mode="modulate", lam=0.7)
    store = TapStore()
    cap = TapSession(cfg, store, phase="capture")
    cap.begin_step(5)
    toy_net_eps(z_lo, 5, native, taps=cap)
    rep = TapSession(cfg, store, phase="replay", scale=2)
    rep.begin_step(5)
    steered = toy_net_eps(z_hi, 5, high, taps=rep).eps_hat.data
    plain = toy_net_eps(z_hi, 5, high).eps_hat.data
    assert not np.array_equal(steered, plain)
    assert [r.mode for r in rep.log] == ["modulate"]


def test_resolution_adapt_shares_weights():
    net = ToyAttentionNet(seed=8, channels=3, height=4, width=4)
    big = resolution_adapt(net, 2)
    assert (big.height, big.width) == (8, 8)
    assert big.weights is net.weights
    assert resolution_adapt(net, 1).height == 4
    with pytest.raises(ParameterError):
        resolution_adapt(net, 0)
    with pytest.raises(CapacityError):
        resolution_adapt(net, 32)


def test_denoiser_spec_validation():
    model = GaussianFieldModel.white(0.0, 4, 4)
    spec = DenoiserSpec(kind="analytic_gaussian", gaussian=model)
    assert spec.spectral_capable
    net = ToyAttentionNet(seed=1, channels=1, height=4, width=4)
    toy = DenoiserSpec(kind="toy_attention_net", toy=net)
    assert not toy.spectral_capable
    with pytest.raises(ParameterError):
        DenoiserSpec(kind="analytic_gaussian")
    with pytest.raises(ParameterError):
        DenoiserSpec(kind="toy_attention_net")
    with pytest.raises(ParameterError):
        DenoiserSpec(kind="mystery")
