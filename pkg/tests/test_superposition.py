import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nssp.lab.superposition import (
    SuperpositionConfig,
    a_of_s,
    fit_constants,
    fit_superposition_config,
    minimal_l1,
    minimal_s,
    superposition_diagnostics,
)
from nssp.solver import SolverConfig, make_initial, run
from nssp.spectral import GridSpec, sobolev_norm


@pytest.fixture(scope="module")
def short_run():
    g = GridSpec(3, 16, 0.05)
    return run(make_initial("random_divfree", g, seed=7), SolverConfig(g, 0.01, 0.1, sample_every=2))


class TestClosedForms:
    @settings(max_examples=50, deadline=None)
    @given(
        c2=st.floats(0.01, 5.0),
        m=st.floats(0.01, 5.0),
        m_tilde=st.floats(1.1, 50.0),
        threshold=st.floats(1e-4, 1.0),
    )
    def test_minimal_s_against_a_scan(self, c2, m, m_tilde, threshold):
        s = minimal_s(c2, m, m_tilde, threshold)
        assert a_of_s(s, c2, m, m_tilde) < threshold
        if s > 1:
            assert a_of_s(s - 1, c2, m, m_tilde) >= threshold
        if s < 2000:
            scan = next(t for t in range(1, 2001) if a_of_s(t, c2, m, m_tilde) < threshold)
            assert scan == s

    def test_a_of_s_strictly_decreasing(self):
        a = a_of_s(np.arange(1, 65), 0.15, 0.8, 2.0)
        assert np.all(np.diff(a) < 0)
        assert a[0] == pytest.approx(0.15 * 0.8 * 3.0)

    def test_a_tends_to_zero(self):
        assert a_of_s(10**6, 1.0, 1.0, 2.0) == pytest.approx(math.log(4.0) * 1e-6, rel=1e-5)

    @pytest.mark.parametrize("m_tilde,s,expected", [(2.0, 1, 1), (2.0, 2, 3), (4.0, 2, 1), (1.5, 1, 2)])
    def test_minimal_l1(self, m_tilde, s, expected):
        assert minimal_l1(m_tilde, s) == expected
        assert expected >= 1.0 / (m_tilde ** (1.0 / s) - 1.0) - 1e-12

    def test_minimal_l1_needs_m_tilde_above_one(self):
        with pytest.raises(ValueError):
            minimal_l1(1.0, 3)


class TestConfigValidation:
    def base(self, **kw):
        args = dict(s=2, l1=3, i=3, m=0.8, m_tilde=2.0, c1_fitted=0.02, c2_fitted=0.15, a_s=0.1)
        args.update(kw)
        return SuperpositionConfig(**args)

    def test_valid(self):
        assert self.base().i == 3

    @pytest.mark.parametrize("kw", [{"i": 4}, {"l1": 2}, {"m_tilde": 1.0}, {"s": 0}, {"i": 0}])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            self.base(**kw)


class TestOnTrajectory:
    def test_fit_and_diagnose(self, short_run):
        fitted = fit_constants(short_run)
        assert fitted.m == pytest.approx(short_run.column("besov_m1").max())
        assert fitted.c1 > 0 and fitted.c2 > 0
        assert fitted.m_tilde > 1
        cfg = fit_superposition_config(short_run, s_max=512)
        assert cfg.a_s < short_run.nu / 40
        assert cfg.i == 2 * cfg.s - 1
        rep = superposition_diagnostics(short_run, cfg, s_max=64)
        assert rep.passed, [r for r in rep.reports if not r.passed]
        assert rep.threshold_met
        assert rep.s_min_nu4 <= rep.s_min_nu40 == cfg.s

    def test_top_rung_is_h1(self, short_run):
        cfg = fit_superposition_config(short_run, s=3, s_max=64)
        rep = superposition_diagnostics(short_run, cfg, s_max=64)
        direct = max(sobolev_norm(u, 1.0, homogeneous=False) for u in short_run.checkpoints)
        assert rep.rung_sup[5] == pytest.approx(direct, rel=1e-12)
        assert not rep.threshold_met
        assert not rep.passed  # a(3) is far above nu/40

    def test_capped_s_reports_threshold_failure(self, short_run):
        cfg = fit_superposition_config(short_run, s_max=2)
        assert cfg.s == 2
        rep = superposition_diagnostics(short_run, cfg, s_max=2)
        names = {r.name: r.passed for r in rep.reports}
        assert names["a_of_s_threshold"] is False
        assert names["top_rung_h1"] is True

    def test_zero_trajectory(self):
        g = GridSpec(2, 16, 0.05)
        rec = run(make_initial("taylor_green_2d", g) * 0.0, SolverConfig(g, 0.01, 0.03))
        fitted = fit_constants(rec)
        assert fitted.c1 == fitted.c2 == fitted.m == 0.0
        cfg = fit_superposition_config(rec)
        assert cfg.s == 1 and cfg.a_s == 0.0
        assert superposition_diagnostics(rec, cfg).passed
