import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fopi import BENCH_MOTOR, derive_tf
from fopi.errors import HorizonTooShort, NoLimitCycle
from fopi.locus import Verdict, classify_point
from fopi.quasipoly import FractionalTransferFunction, QuasiPolynomial
from fopi.relay import RelayConfig, relay_experiment, ultimate_gain, zn_pi

G = derive_tf(BENCH_MOTOR)


@pytest.fixture(scope="module")
def bench():
    return relay_experiment(G, RelayConfig())


def test_ultimate_gain_examples():
    assert ultimate_gain(0.5, 0.2) == pytest.approx(3.1831, abs=5e-5)
    assert ultimate_gain(math.pi, 4.0) == pytest.approx(1.0)
    assert ultimate_gain(1.0, 1.0) == pytest.approx(4 / math.pi)
    with pytest.raises(ValueError):
        ultimate_gain(0.0, 1.0)
    with pytest.raises(ValueError):
        ultimate_gain(1.0, -1.0)


def test_zn_examples():
    c = zn_pi(3.18, 2.4)
    assert (c.kp, c.ki, c.lam) == (pytest.approx(1.431), pytest.approx(0.7155), 1.0)
    c = zn_pi(1 / 0.45, 1.2)
    assert (c.kp, c.ki) == (pytest.approx(1.0), pytest.approx(1.0))
    # classical constants: Kc = 0.45 Ku, Ti = Pu / 1.2
    assert 0.45 * 3.18 == pytest.approx(1.431) and 1.431 * 1.2 / 2.4 == pytest.approx(0.7155)
    with pytest.raises(ValueError):
        zn_pi(0.0, 1.0)


@pytest.mark.parametrize("kw", [dict(h=0.0), dict(switch_on=0.3, switch_off=0.3), dict(settle_cycles=1),
                                dict(dt=0.0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        RelayConfig(**kw)


def test_bench_experiment(bench):
    assert 0.15 <= bench.a <= 0.25
    assert 2.0 <= bench.pu <= 2.8
    assert 2.5 <= bench.ku <= 4.2
    assert bench.ku * bench.a * math.pi == pytest.approx(4 * 0.5, rel=1e-15)
    assert bench.cycles_used >= 3


def test_relay_output_two_levels(bench):
    assert set(np.unique(bench.relay_out)) == {0.0, 1.0}
    switches = np.nonzero(np.diff(bench.relay_out))[0]
    levels = bench.relay_out[switches + 1]
    assert np.all(levels[1:] != levels[:-1])


def test_zn_from_relay_is_stabilizing(bench):
    c = zn_pi(bench.ku, bench.pu)
    assert classify_point(G, 1.0, c.kp, c.ki) is Verdict.STABLE


def test_pure_gain_no_cycle():
    g = FractionalTransferFunction(QuasiPolynomial([(1.0, 0.0)]), QuasiPolynomial([(1.0, 0.0)]))
    with pytest.raises(NoLimitCycle):
        relay_experiment(g, RelayConfig(horizon=1.0))


def test_short_horizon():
    with pytest.raises(HorizonTooShort):
        relay_experiment(G, RelayConfig(horizon=0.1))
    with pytest.raises(HorizonTooShort):
        relay_experiment(G, RelayConfig(horizon=6.0))


def test_doubling_h_keeps_ku():
    # third-order lag with a narrow hysteresis band: describing-function regime
    g = FractionalTransferFunction(QuasiPolynomial([(1.0, 0.0)]), QuasiPolynomial.from_poly([1, 3, 3, 1]))
    base = dict(switch_on=0.51, switch_off=0.49, horizon=60.0, dt=1e-3)
    r1 = relay_experiment(g, RelayConfig(h=0.5, **base))
    r2 = relay_experiment(g, RelayConfig(h=1.0, **base))
    assert r2.a == pytest.approx(2 * r1.a, rel=0.1)
    assert r2.ku == pytest.approx(r1.ku, rel=0.1)


@given(st.floats(0.05, 1.0))
def test_ku_closure(h):
    a = 0.37
    assert ultimate_gain(h, a) * a * math.pi == pytest.approx(4 * h, rel=1e-14)


def test_csv(tmp_path, bench):
    path = tmp_path / "relay.csv"
    bench.write_csv(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (bench.t.size, 3)
    assert "ku = " in bench.as_text()
