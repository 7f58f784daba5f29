import numpy as np
import pytest

import oracles
from u1floquet.basis import ChainGeometry, encode, enumerate_sector, full_space
from u1floquet.circuit import build_circuit, floquet_unitary
from u1floquet.config import ExperimentConfig
from u1floquet.dynamics import (
    FitError,
    autocorrelation,
    autocorrelation_realization,
    bipartition_map,
    entanglement_experiment,
    entropy_of,
    fit_power_law,
    haar_state,
    make_antiferromagnetic,
    make_domain_wall,
    page_value,
    u1_saturation_value,
    von_neumann_entropy,
)

LN2 = np.log(2)


# -- initial states and autocorrelation ------------------------------------------------

def test_domain_wall_l4():
    s = make_domain_wall(4, 2)
    assert s.index == encode([1, 1, 0, 0])
    np.testing.assert_array_equal(s.z_pattern, [1, 1, -1, -1])
    v = s.vector
    assert v[s.sector.index_of(s.index)] == 1 and np.linalg.norm(v) == 1


def test_domain_wall_rejects_bad_filling():
    from u1floquet.basis import ConfigError

    with pytest.raises(ConfigError):
        make_domain_wall(4, 5)


def test_antiferromagnet():
    s = make_antiferromagnetic(6)
    assert s.n_up == 3
    np.testing.assert_array_equal(s.z_pattern, [1, -1, 1, -1, 1, -1])


def test_flip_is_involution():
    s = make_domain_wall(8, 3)
    f = s.flipped()
    assert f.n_up == 5
    np.testing.assert_array_equal(f.z_pattern, -s.z_pattern)
    assert f.flipped().index == s.index


def test_autocorrelation_starts_at_one():
    c = build_circuit(ChainGeometry(16, 2, 1), "haar", np.random.default_rng(0))
    values = autocorrelation_realization(c, make_domain_wall(16, 8), [0])
    assert values[0] == 1.0


def test_frozen_polarized_state():
    c = build_circuit(ChainGeometry(16, 2, 2), "haar", np.random.default_rng(1))
    values = autocorrelation_realization(c, make_domain_wall(16, 16), [0, 1, 5, 50, 200])
    np.testing.assert_allclose(values, 1.0, atol=1e-14)


def test_autocorrelation_needs_product_state():
    c = build_circuit(ChainGeometry(8, 2, 1), "haar", np.random.default_rng(2))
    with pytest.raises(TypeError):
        autocorrelation_realization(c, np.ones(70), [0, 1])


def test_autocorrelation_matches_dense_oracle():
    rng = np.random.default_rng(3)
    L = 8
    c = build_circuit(ChainGeometry(L, 2, 2), "haar", rng)
    init = make_domain_wall(L, 3)
    times = [0, 2, 4, 10]
    got = autocorrelation_realization(c, init, times)
    # independent path: full-space Kronecker U_F, Z_i from the tensor index
    steps = [[[g.dense() for g in layer] for layer in c.step_gates(t)] for t in range(2)]
    u = oracles.kron_floquet(L, 1, 2, steps)
    psi = np.zeros(2**L, dtype=complex)
    psi[init.index] = 1
    z = np.array([[1 if (i >> s) & 1 else -1 for s in range(L)] for i in range(2**L)])
    for t, value in zip(times, got):
        p = np.abs(np.linalg.matrix_power(u, t // 2) @ psi) ** 2
        expected = np.mean((p @ z) * init.z_pattern)
        assert abs(value - expected) < 1e-12


def test_autocorrelation_bounded_and_averaged():
    cfg = ExperimentConfig(experiment="transport", L=10, T=1, n_realizations=5, t_max=30, seed=4)
    series = autocorrelation(cfg)
    assert series.values.shape == (5, len(series.times))
    assert np.all(series.values[:, 0] == 1.0)
    assert np.all(np.abs(series.values) <= 1 + 1e-12)
    m, e = series.at(30)
    assert m == pytest.approx(series.values[:, -1].mean()) and e > 0


def test_particle_hole_symmetry_of_transport():
    base = ExperimentConfig(experiment="transport", L=10, T=2, n_realizations=200, t_max=20, n_up=3, seed=5)
    a = autocorrelation(base)
    # the flipped wall starts with a down block, so drive it directly; an
    # independent circuit ensemble makes this a comparison of distributions
    from u1floquet.config import map_realizations
    from u1floquet.dynamics import _circuit_for

    flipped = make_domain_wall(10, 3).flipped()
    b = np.array(map_realizations(
        lambda k: autocorrelation_realization(_circuit_for(base.replace(seed=99), k), flipped, a.times),
        range(200)))
    err = np.hypot(a.stderr, b.std(axis=0, ddof=1) / np.sqrt(200))
    diff = np.abs(a.mean - b.mean(axis=0))
    assert np.all(diff[1:] < 4 * err[1:])


# -- power-law fits ------------------------------------------------------------------------

def test_fit_exact_power_law():
    t = np.arange(1, 200)
    slope, err = fit_power_law(t, t**-0.5, (10, 100))
    assert abs(slope + 0.5) < 1e-12 and err < 1e-12


def test_fit_constant():
    t = np.arange(1, 200)
    slope, _ = fit_power_law(t, np.full(len(t), 0.3), (10, 100))
    assert abs(slope) < 1e-12


def test_fit_noisy_synthetic():
    rng = np.random.default_rng(6)
    t = np.unique(np.round(1.2 ** np.arange(40)).astype(int))
    c = t**-0.33 * (1 + 0.01 * rng.standard_normal(len(t)))
    slope, err = fit_power_law(t, c, (10, 1000))
    assert abs(slope + 0.33) < 0.02
    assert 0 < err < 0.02


def test_fit_errors():
    t = np.arange(1, 50)
    with pytest.raises(FitError):
        fit_power_law(t, np.where(t > 20, -1.0, 1.0), (10, 40))
    with pytest.raises(FitError):
        fit_power_law(t, np.ones(len(t)), (100, 200))


# -- entanglement ------------------------------------------------------------------------------

def test_product_state_entropy_zero():
    s = make_antiferromagnetic(8)
    assert von_neumann_entropy(s.vector, s.sector) == 0.0


def test_singlet_across_cut():
    L = 6
    sector = enumerate_sector(L, 1, 3)
    a = encode([0, 1, 0, 1, 0, 1])  # sites 2 and 3 straddle the middle cut
    b = encode([0, 1, 1, 0, 0, 1])
    psi = np.zeros(sector.dim, dtype=complex)
    psi[sector.index_of(a)] = 1 / np.sqrt(2)
    psi[sector.index_of(b)] = -1 / np.sqrt(2)
    assert von_neumann_entropy(psi, sector) == pytest.approx(LN2, abs=1e-14)


def test_entropy_requires_normalized_state():
    sector = enumerate_sector(4, 1, 2)
    with pytest.raises(ValueError):
        von_neumann_entropy(np.full(sector.dim, 0.5), sector)


@pytest.mark.parametrize("L,q,n", [(8, 1, 4), (6, 1, 2), (4, 2, 2), (8, 1, None)])
def test_entropy_matches_dense_svd(L, q, n):
    rng = np.random.default_rng(7)
    sector = full_space(L, q) if n is None else enumerate_sector(L, q, n)
    psi = haar_state(sector.dim, rng)
    glob = np.zeros((2 * q) ** L, dtype=complex)
    glob[sector.states] = psi
    tensor = glob[oracles.tensor_to_global(L, q)]
    for cut in (1, L // 2, L - 1):
        m = tensor.reshape((2 * q) ** cut, -1)
        lam = np.linalg.svd(m, compute_uv=False) ** 2
        expected = -np.sum(lam[lam > 0] * np.log(lam[lam > 0]))
        assert von_neumann_entropy(psi, sector, cut) == pytest.approx(expected, abs=1e-10)


def test_entropy_symmetric_under_swapping_halves():
    sector = enumerate_sector(10, 1, 5)
    psi = haar_state(sector.dim, np.random.default_rng(8))
    bmap = bipartition_map(sector)
    assert abs(entropy_of(bmap.schmidt_values(psi)) - entropy_of(bmap.transposed_values(psi))) < 1e-10


def test_page_value_examples():
    assert page_value(2, 2) == pytest.approx(LN2 - 0.5)
    assert page_value(1, 7) == 0.0
    assert page_value(8, 2) == page_value(2, 8)


def test_page_value_large_dimension():
    rng = np.random.default_rng(9)
    d = 2**10
    samples = []
    for _ in range(3):
        m = haar_state(d * d, rng).reshape(d, d)
        samples.append(entropy_of(np.linalg.svd(m, compute_uv=False) ** 2))
    assert abs(np.mean(samples) - page_value(d, d)) < 1e-3


def test_u1_value_two_sites():
    mean, err = u1_saturation_value(2, 1, 1, 20000, np.random.default_rng(10))
    assert abs(mean - 0.5) < 4 * err


SMALL_L = pytest.mark.xfail(strict=True, reason="Page's asymptotic value undershoots at tiny dimensions")


@pytest.mark.parametrize("L", [pytest.param(2, marks=SMALL_L), pytest.param(4, marks=SMALL_L), 6, 8, 10, 12])
def test_u1_value_below_page(L):
    mean, err = u1_saturation_value(L, 1, L // 2, 1000, np.random.default_rng(11))
    d = 2 ** (L // 2)
    assert mean <= page_value(d, d) + 3 * err


def test_u1_value_l16_reproducible():
    a, ea = u1_saturation_value(16, 1, 8, 1000, np.random.default_rng(12))
    b, eb = u1_saturation_value(16, 1, 8, 1000, np.random.default_rng(13))
    assert f"{a:.3g}" == f"{b:.3g}"
    assert ea < 1e-3 and eb < 1e-3


def test_entropy_series_bounds_and_start():
    cfg = ExperimentConfig(experiment="entanglement", L=10, T=2, n_realizations=4,
                           initial_state="antiferromagnetic", t_max=40, u1_samples=200, seed=14)
    series = entanglement_experiment(cfg)
    assert np.all(series.values[:, 0] == 0)
    assert np.all(series.values >= -1e-12) and np.all(series.values <= 5 * LN2 + 1e-12)
    assert series.s_page == pytest.approx(page_value(32, 32))
    np.testing.assert_allclose(series.deficit, series.s_u1 - series.mean)


def test_entanglement_needs_even_length():
    from u1floquet.basis import ConfigError

    with pytest.raises(ConfigError):
        entanglement_experiment(ExperimentConfig(experiment="entanglement", L=9, r=3))


def test_dense_and_statevector_entropy_agree():
    rng = np.random.default_rng(15)
    L = 8
    c = build_circuit(ChainGeometry(L, 2, 1), "haar", rng)
    init = make_antiferromagnetic(L)
    u = floquet_unitary(c, init.sector)
    from u1floquet.dynamics import entropy_realization

    s = entropy_realization(c, init, [5])
    psi = np.linalg.matrix_power(u, 5) @ init.vector
    assert s[0] == pytest.approx(von_neumann_entropy(psi, init.sector), abs=1e-10)
