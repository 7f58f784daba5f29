import numpy as np
import pytest
from scipy import stats

from oracles import X, Y, Z, expm_gate
from u1floquet.basis import ChainGeometry, ConfigError, enumerate_sector
from u1floquet.circuit import FloquetCircuit, floquet_unitary
from u1floquet.gates import (
    LIE_VOLUME_TOTAL,
    CouplingVector,
    TwoSiteParams,
    gate_from_couplings,
    gate_from_two_site_params,
    gate_sampler,
    gate_to_json,
    identity_gate,
    invert_lie_volume_cdf,
    lie_volume_cdf,
    sample_block_gate,
    sample_haar_u1_two_site,
    sample_haar_unitary,
    sample_perturbed_anderson,
    sample_perturbed_diagonal,
    sample_su2_lie_haar,
    su2_exp,
    two_site_params_of,
)
from u1floquet.spectral import quasienergies

TWO_PI = 2 * np.pi
ZZ = np.kron(Z, Z)


def local_z_sum(r, q):
    zq = np.kron(Z, np.eye(q))
    total = 0
    for k in range(r):
        ops = [np.eye(2 * q)] * r
        ops[k] = zq
        m = ops[0]
        for o in ops[1:]:
            m = np.kron(m, o)
        total = total + m
    return total


# -- Haar unitaries and block gates ---------------------------------------------------

def test_haar_unitary_is_unitary():
    u = sample_haar_unitary(7, np.random.default_rng(0))
    assert np.abs(u.conj().T @ u - np.eye(7)).max() < 1e-12


def test_haar_unitary_n1_phase_uniform():
    rng = np.random.default_rng(1)
    z = np.array([sample_haar_unitary(1, rng)[0, 0] for _ in range(5000)])
    assert np.allclose(np.abs(z), 1.0, atol=1e-14)
    assert stats.kstest(np.mod(np.angle(z), TWO_PI) / TWO_PI, "uniform").pvalue > 1e-3


@pytest.mark.parametrize("n", [0, -3])
def test_haar_unitary_rejects_bad_size(n):
    with pytest.raises(ValueError):
        sample_haar_unitary(n, np.random.default_rng(0))


@pytest.mark.parametrize("r,q,sizes", [(2, 1, (1, 2, 1)), (3, 1, (1, 3, 3, 1)), (2, 2, (4, 8, 4))])
def test_block_sizes(r, q, sizes):
    g = sample_block_gate(r, q, np.random.default_rng(2))
    assert tuple(len(b) for b in g.blocks) == sizes
    assert g.unitarity_error() < 1e-12
    m = g.dense()
    zsum = local_z_sum(r, q)
    assert np.array_equal(m @ zsum, zsum @ m)


@pytest.mark.parametrize("family,r,q,p", [
    ("haar", 2, 1, None), ("haar", 3, 1, None), ("haar", 2, 2, None),
    ("haar_params", 2, 1, None), ("perturbed_anderson", 2, 1, 0.7),
    ("perturbed_diagonal", 2, 1, 0.4)])
def test_families_structural(family, r, q, p):
    sampler = gate_sampler(family, r, q, p)
    rng = np.random.default_rng(3)
    zsum = local_z_sum(r, q)
    for _ in range(50):
        g = sampler(rng)
        assert g.unitarity_error() < 1e-12
        m = g.dense()
        assert np.array_equal(m @ zsum, zsum @ m)


def test_sampler_errors():
    with pytest.raises(ConfigError):
        gate_sampler("perturbed_anderson", 3, 1, 0.1)
    with pytest.raises(ConfigError):
        gate_sampler("perturbed_diagonal", 2, 1, None)
    with pytest.raises(ConfigError):
        gate_sampler("perturbed_diagonal", 2, 1, -1.0)
    with pytest.raises(ConfigError):
        gate_sampler("brickwall", 2, 1, None)


# -- explicit six-parameter form -----------------------------------------------------------

def test_params_zero_is_identity():
    np.testing.assert_allclose(gate_from_two_site_params(TwoSiteParams()).dense(), np.eye(4))


def test_params_full_exchange():
    g = gate_from_two_site_params(TwoSiteParams(psi=np.pi / 2))
    np.testing.assert_allclose(g.central, [[0, 1], [-1, 0]], atol=1e-15)


def test_params_alpha_pi():
    g = gate_from_two_site_params(TwoSiteParams(alpha=np.pi))
    np.testing.assert_allclose(g.dense(), np.diag([-1, 1, 1, 1]), atol=1e-15)


# -- coupling form -------------------------------------------------------------------------

def test_couplings_zero_is_identity():
    np.testing.assert_allclose(gate_from_couplings(CouplingVector()).dense(), np.eye(4))


def test_couplings_c3_only():
    g = gate_from_couplings(CouplingVector.of(c3=0.3)).dense()
    c, s = np.cos(0.3), np.sin(0.3)
    np.testing.assert_allclose(g, [[1, 0, 0, 0], [0, c, 1j * s, 0], [0, 1j * s, c, 0], [0, 0, 0, 1]],
                               atol=1e-15)
    np.testing.assert_allclose(g, expm_gate([0, 0, 0, 0.3, 0, 0]), atol=1e-14)


def test_couplings_match_generator_exponential():
    rng = np.random.default_rng(4)
    for _ in range(200):
        c = rng.uniform(-4, 4, 6)
        np.testing.assert_allclose(gate_from_couplings(CouplingVector(tuple(c))).dense(),
                                   expm_gate(c), atol=1e-12)


def test_commuting_couplings_are_2pi_periodic():
    rng = np.random.default_rng(5)
    for _ in range(50):
        c = rng.uniform(-3, 3, 6)
        base = gate_from_couplings(CouplingVector(tuple(c))).dense()
        for i in range(3):
            shifted = c.copy()
            shifted[i] += TWO_PI
            np.testing.assert_allclose(gate_from_couplings(CouplingVector(tuple(shifted))).dense(),
                                       base, atol=1e-12)


def test_su2_exp_closed_form():
    rng = np.random.default_rng(6)
    from scipy.linalg import expm

    for x, y, z in rng.normal(size=(20, 3)):
        np.testing.assert_allclose(su2_exp(x, y, z), expm(1j * (x * X + y * Y + z * Z)), atol=1e-13)
    np.testing.assert_array_equal(su2_exp(0, 0, 0), np.eye(2))


def test_round_trip_couplings_to_params():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(300):
        g = gate_from_couplings(CouplingVector(tuple(rng.uniform(-5, 5, 6))))
        p = two_site_params_of(g)
        assert 0 <= p.psi <= np.pi / 2
        worst = max(worst, np.abs(gate_from_two_site_params(p).dense() - g.dense()).max())
    assert worst < 1e-10


def test_round_trip_edge_cases():
    for g in (identity_gate(), gate_from_two_site_params(TwoSiteParams(psi=np.pi / 2, beta=1.0)),
              gate_from_couplings(CouplingVector.of(c3=np.pi / 2))):
        back = gate_from_two_site_params(two_site_params_of(g))
        assert np.abs(back.dense() - g.dense()).max() < 1e-12


# -- Lie-algebra Haar sampler ------------------------------------------------------------------

def test_volume_cdf_endpoints():
    assert lie_volume_cdf(0.0) == 0.0
    assert lie_volume_cdf(np.pi) == pytest.approx(np.pi / 2, abs=1e-15)
    assert invert_lie_volume_cdf(0.0) == 0.0
    assert invert_lie_volume_cdf(LIE_VOLUME_TOTAL) == pytest.approx(np.pi, abs=1e-12)


def test_volume_cdf_monotone_and_invertible():
    R = np.linspace(0, np.pi, 2001)
    assert np.all(np.diff(lie_volume_cdf(R)) > 0)
    targets = np.linspace(0, np.pi / 2, 5001)
    roots = invert_lie_volume_cdf(targets)
    assert np.abs(lie_volume_cdf(roots) - targets).max() < 1e-12


def test_volume_cdf_rejects_out_of_range():
    with pytest.raises(ValueError):
        invert_lie_volume_cdf(2.0)


def _central_angles(c):
    s = np.array([su2_exp(*row) for row in c])
    a, b = s[:, 0, 0], s[:, 0, 1]
    return np.abs(b) ** 2, np.mod(np.angle(a), TWO_PI), np.mod(np.angle(b), TWO_PI)


def test_lie_haar_sampler_marginals():
    c = sample_su2_lie_haar(np.random.default_rng(8), size=20000)
    assert c.shape == (20000, 3)
    assert np.linalg.norm(c, axis=1).max() <= np.pi + 1e-12
    sin2, eta, chi = _central_angles(c)
    for sample in (sin2, eta / TWO_PI, chi / TWO_PI):
        assert stats.kstest(sample, "uniform").pvalue > 1e-3


def test_lie_haar_scalar_call():
    c = sample_su2_lie_haar(np.random.default_rng(9))
    assert isinstance(c, tuple) and len(c) == 3


# -- gate families -------------------------------------------------------------------------

def test_haar_params_distribution_matches_block_haar():
    n = 20000
    rng = np.random.default_rng(10)
    a = np.array([sample_haar_u1_two_site(rng).dense() for _ in range(n)])
    b = np.array([sample_block_gate(2, 1, rng).dense() for _ in range(n)])
    # first moments
    for m in (a, b):
        assert np.abs(m.mean(axis=0)).max() < 5 / np.sqrt(n)
    # second moments of every entry
    sa, sb = np.abs(a) ** 2, np.abs(b) ** 2
    err = np.sqrt(sa.var(axis=0) / n + sb.var(axis=0) / n) + 1e-15
    assert (np.abs(sa.mean(axis=0) - sb.mean(axis=0)) / err).max() < 5
    # |U_{ud,ud}|^2 = cos^2 psi = 1 - t is uniform; exchange weight averages 1/2
    assert stats.kstest(sa[:, 1, 1], "uniform").pvalue > 1e-3
    assert abs(sa[:, 1, 2].mean() - 0.5) < 5 * sa[:, 1, 2].std() / np.sqrt(n)


def test_anderson_c2_zero_is_gaussian():
    rng = np.random.default_rng(11)
    for _ in range(100):
        g = sample_perturbed_anderson(0.0, rng)
        uu, dd = g.blocks[2][0, 0], g.blocks[0][0, 0]
        assert abs(uu * dd - np.linalg.det(g.central)) < 1e-12
    g = sample_perturbed_anderson(np.pi / 4, rng)
    assert abs(g.blocks[2][0, 0] * g.blocks[0][0, 0] - np.linalg.det(g.central)) > 1e-3


@pytest.mark.parametrize("c2,factor", [
    (np.pi / 4, (np.eye(4) + 1j * ZZ) / np.sqrt(2)),
    (np.pi / 2, 1j * ZZ)])
def test_anderson_interaction_factor(c2, factor):
    rng = np.random.default_rng(12)
    for _ in range(20):
        c = rng.uniform(-3, 3, 6)
        free = gate_from_couplings(CouplingVector.of(c[0], c[1], 0.0, *c[3:])).dense()
        inter = gate_from_couplings(CouplingVector.of(c[0], c[1], c2, *c[3:])).dense()
        np.testing.assert_allclose(inter, factor @ free, atol=1e-12)


def test_anderson_half_pi_layers_cancel():
    # iZZ on every bond of a sub-layer multiplies to i^(L/2) times global
    # parity, which commutes with the circuit; two sub-layers square it away
    rng = np.random.default_rng(13)
    L = 8
    geom = ChainGeometry(L, 2, 1)
    couplings = rng.uniform(-3, 3, (2, L // 2, 6))

    def circuit(c2):
        gates = [[[gate_from_couplings(CouplingVector.of(c[0], c[1], c2, *c[3:])) for c in layer]
                  for layer in couplings]]
        return FloquetCircuit(geom, gates)

    sector = enumerate_sector(L, 1, 4)
    u_free = floquet_unitary(circuit(0.0), sector)
    u_half = floquet_unitary(circuit(np.pi / 2), sector)
    np.testing.assert_allclose(u_half, (1j) ** L * u_free, atol=1e-12)
    th = quasienergies(u_half).thetas
    assert not np.allclose(th, quasienergies(floquet_unitary(circuit(np.pi / 4), sector)).thetas)


def test_diagonal_R_zero_is_classical():
    rng = np.random.default_rng(14)
    for _ in range(100):
        m = sample_perturbed_diagonal(0.0, rng).dense()
        assert np.count_nonzero(m - np.diag(np.diag(m))) == 0


def test_diagonal_hopping_magnitude():
    rng = np.random.default_rng(15)
    for _ in range(100):
        g = sample_perturbed_diagonal(0.5, rng)
        assert np.allclose(np.abs(g.central[[0, 1], [1, 0]]), np.sin(0.5), atol=1e-14)
    for phi in np.linspace(0, TWO_PI, 7):
        m = expm_gate([0, 0, 0, 0.5 * np.cos(phi), 0.5 * np.sin(phi), 0])
        assert abs(abs(m[1, 2]) - np.sin(0.5)) < 1e-14


def test_diagonal_rejects_negative_R():
    with pytest.raises(ConfigError):
        sample_perturbed_diagonal(-0.1, np.random.default_rng(0))


def test_gate_json_round_trip():
    g = sample_block_gate(2, 2, np.random.default_rng(16))
    js = gate_to_json(g)
    assert js["r"] == 2 and js["q"] == 2
    for b, raw in zip(g.blocks, js["blocks"]):
        arr = np.array(raw)
        np.testing.assert_array_equal(arr[..., 0] + 1j * arr[..., 1], b)
