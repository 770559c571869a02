import math
import os
import subprocess
import sys

import numpy as np
import pytest

from mbshape import _chain_py
from mbshape import acceptance as ac
from mbshape import combinatorics as cb
from mbshape import mbprocess as mp
from mbshape import sampler as sp
from mbshape._rng import Xoshiro256ss, splitmix64_state
from mbshape.errors import DomainError

needs_c = pytest.mark.skipif(sp._chain_c is None, reason="compiled kernel not built")


def test_splitmix64_reference_vector():
    got = [int(v) for v in splitmix64_state(0)]
    assert got == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F, 0xF88BB8A8724C81EC]


def test_xoshiro_reference_vector():
    g = Xoshiro256ss(np.array([1, 2, 3, 4], dtype=np.uint64))
    assert [g.next_u64() for _ in range(4)] == [11520, 0, 1509978240, 1215971899390074240]


def test_next_double_range():
    g = Xoshiro256ss.from_seed(5)
    u = [g.next_double() for _ in range(1000)]
    assert 0 <= min(u) and max(u) < 1


def test_config_validation_and_round_trip():
    cfg = sp.ChainConfig(3, 4, 0.5, 1.0, 1.0, 2.0, 10, burn_in=2, thin=3, seed=9)
    assert sp.ChainConfig.from_dict({k: str(v) for k, v in cfg.to_dict().items()}) == cfg
    with pytest.raises(DomainError):
        sp.ChainConfig(1, 1, 1.0, 1.0, 1.0, 1.0, 3)
    with pytest.raises(DomainError):
        sp.ChainConfig(1, 1, 0.5, 5.0, 1.0, 1.0, 3)
    with pytest.raises(DomainError):
        sp.ChainConfig(1, 1, 0.5, 1.0, 1.0, 1.0, 3, thin=0)


@needs_c
def test_backends_agree_bit_for_bit():
    cfg = sp.ChainConfig(3, 5, 0.7, 1.0, 1.0, 2.0, 8, burn_in=20, thin=3, seed=42)
    a = sp.mcmc_sample(cfg, 30, backend="python")
    b = sp.mcmc_sample(cfg, 30, backend="cython")
    assert a.samples == b.samples
    assert a.acceptance_rate == b.acceptance_rate


def test_same_seed_same_chain_other_seed_differs():
    cfg = sp.ChainConfig(2, 3, 0.6, 1.0, 1.0, 2.0, 8, burn_in=10, thin=2, seed=1)
    a = sp.mcmc_sample(cfg, 40)
    assert sp.mcmc_sample(cfg, 40).samples == a.samples
    other = sp.ChainConfig(**{**cfg.to_dict(), "seed": 2})
    assert sp.mcmc_sample(other, 40).samples != a.samples


def test_states_are_plane_partitions_under_cap():
    cfg = sp.ChainConfig(3, 3, 0.8, 1.0, 1.0, 1.0, 4, burn_in=5, thin=2, seed=3)
    for pp in sp.mcmc_sample(cfg, 50, backend="python"):
        assert max(pp.flat) <= 4  # PlanePartition validates the order itself


def test_single_cell_detailed_balance():
    # 1 x 1 box with cap 2: P(h) proportional to r^h, r = a q^((eta+theta)/2)
    q, a = 0.5, 1.5
    cfg = sp.ChainConfig(1, 1, q, a, 1.0, 1.0, 2, burn_in=10, thin=7, seed=11)
    res = sp.mcmc_sample(cfg, 20000)
    r = a * q
    p = np.array([1, r, r * r]) / (1 + r + r * r)
    freq = np.bincount([pp.flat[0] for pp in res], minlength=3) / len(res)
    assert np.max(np.abs(freq - p)) <= 0.015


def test_small_box_chi_square():
    assert ac.toy_chi_square(n_samples=5000, seed=3)["p_value"] >= 1e-3


def test_vanishing_activity_empties_the_diagonal():
    cfg = sp.ChainConfig(2, 2, 0.5, 1e-12, 1.0, 1.0, 5, burn_in=5, thin=2, seed=4)
    assert all(pp.flat == (0, 0, 0, 0) for pp in sp.mcmc_sample(cfg, 50))


def test_init_state_respected_and_checked():
    cfg = sp.ChainConfig(2, 2, 0.5, 1.0, 1.0, 1.0, 3, burn_in=0, thin=1, seed=0)
    with pytest.raises(DomainError):
        sp.mcmc_sample(cfg, 1, init=cb.PlanePartition(((5, 0), (0, 0))))


def test_kernel_counts_acceptances():
    h = np.zeros((2, 2), dtype=np.int32)
    rfac = np.full((2, 2), 0.5)
    acc = _chain_py.run(h, rfac, 3, 100, splitmix64_state(0))
    assert 0 < acc <= 100


def test_empirical_measure_positions():
    pp = cb.PlanePartition(((2, 1), (1, 0)))
    emp = sp.empirical_measure([pp], 0, beta=1.0)
    # slice (2, 0) at t = 0 gives l = (3, 0) and x = exp(-l / N)
    assert np.allclose(np.sort(emp.samples), [math.exp(-1.5), 1.0])
    assert emp.eps == 0.5


def test_profile_self_consistency():
    prof = mp.mu_density(mp.EnsembleParams(1.0, 2.0, 0.25, 1.0, 0.2))
    x = sp.sample_profile(prof, 20000, np.random.default_rng(0))
    emp = sp.EmpiricalMeasure(xi=0.2, samples=x, n_effective=x.size)
    w1, ks = sp.compare(emp, prof)
    assert w1 <= 0.01 and ks <= 0.02


def test_w1_to_a_point_mass():
    prof = mp.mu_density(mp.EnsembleParams(1.0, 2.0, 0.25, 1.0, 0.2))
    edges, cum = sp.profile_cdf(prof)
    x0 = float(edges[-1]) + 0.5
    mean = float(np.sum(np.diff(edges) * (1 - 0.5 * (cum[1:] + cum[:-1])))) + edges[0]
    w1, ks = sp.compare(sp.EmpiricalMeasure(0.2, np.array([x0]), 1.0), prof)
    assert w1 == pytest.approx(x0 - mean, rel=1e-9)
    assert ks == pytest.approx(1.0)


def test_sample_dump_round_trip(tmp_path):
    cfg = sp.ChainConfig(2, 3, 0.5, 1.0, 1.0, 2.0, 6, burn_in=3, thin=2, seed=8)
    res = sp.mcmc_sample(cfg, 5)
    path = tmp_path / "s.txt"
    sp.write_samples(path, res, {"command": "test"})
    cfg2, header, pps = sp.read_samples(path)
    assert cfg2 == cfg and pps == res.samples
    assert header["schema_version"] == "1"
    lines = path.read_text().splitlines()
    assert lines[-1] == " ".join(map(str, res.samples[-1].flat))


def test_pure_python_switch():
    env = dict(os.environ, MBSHAPE_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import mbshape.sampler as s; print(s.BACKEND)"], env=env, capture_output=True, text=True
    )
    assert out.stdout.strip() == "python"


def test_slice_time():
    assert sp.slice_time(128, 0.2) == 26
    assert sp.slice_time(10, -0.25) == -2
