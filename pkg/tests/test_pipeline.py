"""End-to-end pipeline at reduced desk scale (the 512^2 gate lives in
the acceptance module)."""

import numpy as np

from qcsurgery.cli import RunConfig, run_pipeline


def test_degenerate_pipeline_is_conformal(tmp_path):
    # k = 1, m = n: tau is the identity, mu vanishes, psi is exact, and
    # the assembled map is the bare block composition at grid accuracy
    cfg = RunConfig(command="pipeline", m=1, n=1, window=40.0, grid=128,
                    outdir=str(tmp_path))
    rep = run_pipeline(cfg, degenerate=True)
    assert rep["mu_diagnostics"]["support_nodes"] == 0
    assert rep["solver"]["iterations"] == 0
    assert rep["cr_residual_masked"] < 1e-4
    assert rep["zeros_all_simple"] and rep["zeros_checked"] > 0
    assert rep["max_e_prime_dev"] <= 0.05


def test_small_pipeline_report_fields(tmp_path):
    cfg = RunConfig(command="pipeline", m=0, n=1, window=30.0, grid=128,
                    outdir=str(tmp_path))
    rep = run_pipeline(cfg)
    assert (tmp_path / "pipeline_report.json").exists()
    assert (tmp_path / "mu_grid.npz").exists()
    assert (tmp_path / "psi_grid.npz").exists()
    assert (tmp_path / "f_log_grid.npz").exists()
    assert 0 < rep["mu_diagnostics"]["sup_mu"] < 1
    assert rep["zeros_checked"] > 0 and rep["zeros_all_simple"]
    assert rep["max_e_prime_dev"] <= 0.05
    # coarse grids leave a larger masked residual; it must still be finite
    assert np.isfinite(rep["cr_residual_masked"])
    assert rep["special_mode"]["critical_points_found"] >= 0
