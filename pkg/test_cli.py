"""
命令行测试：子命令、输出文件与退出码
"""
import json

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from etaspec.config import REPORT_JSON, SPECTRUM_CSV, SPECTRUM_JSON, TRAJECTORY_CSV, parse_config_text
from etaspec.discretize import Grid, reference_oscillator
from etaspec.errors import EXIT_COMPLEX_SPECTRUM, EXIT_CONDITION_CAP, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK
from etaspec.main import main
from etaspec.matrix_loader import MatrixLoader
from etaspec.reporter import format_matrix

ALGEBRAIC_SMALL = [
    "--override", "mode=algebraic",
    "--override", "algebraic.dim=8",
    "--override", "times.t_max=2",
    "--override", "times.steps=11",
    "--override", "verify.isometry_samples=20",
]


def run(command, out, *extra):
    return main([command, "--out", str(out), "--no-report", *extra])


def write_matrix(path, matrix):
    path.write_text(format_matrix(np.asarray(matrix, dtype=complex)), encoding="utf-8")
    return str(path)


@pytest.fixture(autouse=True)
def no_source_date(monkeypatch):
    monkeypatch.delenv("SOURCE_DATE_EPOCH", raising=False)


def test_spectrum_fd_csv(tmp_path):
    code = run("spectrum", tmp_path, "--override", "grid.n=201", "--override", "n_states=5")
    assert code == EXIT_OK
    lines = (tmp_path / SPECTRUM_CSV).read_text(encoding="utf-8").splitlines()
    assert lines[0] == "n,E_numeric,E_analytic,abs_error"
    frame = pd.read_csv(tmp_path / SPECTRUM_CSV)
    assert len(frame) == 5
    d2 = Grid(-10.0, 10.0, 201).spacing ** 2
    for _, row in frame.iterrows():
        n = int(row['n'])
        assert row['E_analytic'] == n + 0.5
        bound = 1.25 * d2 * ((2 * n * n + 2 * n + 1) / 32.0 + 0.3 ** 2 * (n + 0.5) / 4.0 + 0.3 ** 4 / 8.0) + 1e-7
        assert row['abs_error'] <= bound
    summary = json.loads((tmp_path / SPECTRUM_JSON).read_text(encoding="utf-8"))
    assert summary['timestamp'] is None
    assert summary['mode'] == "fd-oscillator"


def test_spectrum_alpha_zero_matches_hermitian_oscillator(tmp_path):
    code = run("spectrum", tmp_path, "--override", "alpha=0", "--override", "grid.n=101")
    assert code == EXIT_OK
    frame = pd.read_csv(tmp_path / SPECTRUM_CSV)
    expected = np.linalg.eigvalsh(reference_oscillator(Grid(-10.0, 10.0, 101), 1.0))[:10]
    np.testing.assert_allclose(frame['E_numeric'].to_numpy(), expected, atol=1e-10)


def test_spectrum_algebraic_leaves_analytic_columns_empty(tmp_path):
    code = run("spectrum", tmp_path, *ALGEBRAIC_SMALL)
    assert code == EXIT_OK
    lines = (tmp_path / SPECTRUM_CSV).read_text(encoding="utf-8").splitlines()
    assert len(lines) == 9
    assert all(line.endswith(",,") for line in lines[1:])


def test_spectrum_timestamp_from_source_date_epoch(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    assert run("spectrum", tmp_path, *ALGEBRAIC_SMALL) == EXIT_OK
    summary = json.loads((tmp_path / SPECTRUM_JSON).read_text(encoding="utf-8"))
    assert summary['timestamp'] == "1970-01-01T00:00:00Z"


def test_verify_algebraic_passes(tmp_path):
    assert run("verify", tmp_path, *ALGEBRAIC_SMALL) == EXIT_OK
    report = json.loads((tmp_path / REPORT_JSON).read_text(encoding="utf-8"))
    expected = {
        'pseudo_hermiticity', 'gram', 'hermiticity_h', 'isometry', 'unitarity',
        'equivalence', 'norm_drift', 'completeness', 'observable',
    }
    assert set(report['residuals']) == expected
    assert report['passed'] is True
    assert report['failed'] == []
    for name, value in report['residuals'].items():
        assert 0.0 <= value <= 1e-10, name
    assert report['metadata']['range_dim'] == 8
    assert report['metadata']['config']['algebraic']['dim'] == 8
    assert set(report['metadata']['versions']) >= {'etaspec', 'numpy', 'scipy'}
    assert report['diagnostics']['h_ref_recovery'] <= 1e-12
    assert 'convergence' not in report


def test_verify_fd_records_nonzero_continuum_residual(tmp_path):
    code = run(
        "verify", tmp_path,
        "--override", "grid.n=201",
        "--override", "times.t_max=2",
        "--override", "times.steps=5",
        "--override", "verify.isometry_samples=10",
    )
    report = json.loads((tmp_path / REPORT_JSON).read_text(encoding="utf-8"))
    continuum = report['residuals']['pseudo_hermiticity_continuum']
    assert 0.0 < continuum <= report['thresholds']['pseudo_hermiticity_continuum']
    assert report['convergence']['grid_points'] == [100, 201]
    assert code == (EXIT_OK if report['passed'] else 1)


def test_condition_cap_exit_code(tmp_path):
    code = run(
        "spectrum", tmp_path,
        "--override", "alpha=1.2",
        "--override", "grid.xmin=-12",
        "--override", "grid.xmax=12",
        "--override", "grid.n=101",
    )
    assert code == EXIT_CONDITION_CAP
    assert "ConditionCapExceeded" in (tmp_path / "etaspec.log").read_text(encoding="utf-8")


def test_negative_metric_entry_exit_code(tmp_path):
    h_path = write_matrix(tmp_path / "H.txt", np.diag([1.0, 2.0]))
    eta_path = write_matrix(tmp_path / "eta.txt", np.diag([1.0, -1.0]))
    code = run(
        "spectrum", tmp_path / "out",
        "--override", "mode=matrix-files",
        "--override", f"matrix.hamiltonian={h_path}",
        "--override", f"matrix.metric={eta_path}",
    )
    assert code == EXIT_NUMERICAL
    assert "NotPositiveDefinite" in (tmp_path / "out" / "etaspec.log").read_text(encoding="utf-8")


def test_non_hermitian_seed_reports_complex_spectrum(tmp_path):
    base = ["--override", "mode=algebraic", "--override", "algebraic.dim=6",
            "--override", "algebraic.seed_kind=non_hermitian"]
    assert run("spectrum", tmp_path / "spectrum", *base) == EXIT_COMPLEX_SPECTRUM
    assert "ComplexSpectrum" in (tmp_path / "spectrum" / "etaspec.log").read_text(encoding="utf-8")
    assert run("verify", tmp_path / "verify", *base) == EXIT_COMPLEX_SPECTRUM


@pytest.mark.parametrize("override", ["fd.metric=continuum", "alpha=0.5"])
def test_verify_fd_default_grid_passes(tmp_path, override):
    code = run(
        "verify", tmp_path,
        "--override", override,
        "--override", "times.t_max=2",
        "--override", "times.steps=5",
        "--override", "verify.isometry_samples=10",
    )
    report = json.loads((tmp_path / REPORT_JSON).read_text(encoding="utf-8"))
    assert report['failed'] == []
    assert code == EXIT_OK
    assert report['residuals']['gram'] <= 1e-8


@pytest.mark.parametrize("override", ["grid.bogus=1", "grid.n=abc", "grid=3", "mode=lattice", "tolerances.gram=-1"])
def test_config_errors_exit_code(tmp_path, override):
    assert run("spectrum", tmp_path, "--override", override) == EXIT_CONFIG


def test_missing_config_file(tmp_path):
    assert run("spectrum", tmp_path, "--config", str(tmp_path / "missing.conf")) == EXIT_CONFIG


def test_config_file_sections(tmp_path):
    config = tmp_path / "run.conf"
    config.write_text(
        "mode = algebraic  # 代数模式\n[algebraic]\ndim = 5\n\n[times]\nt_max = 1\nsteps = 3\n",
        encoding="utf-8",
    )
    assert run("evolve", tmp_path / "out", "--config", str(config)) == EXIT_OK
    frame = pd.read_csv(tmp_path / "out" / TRAJECTORY_CSV)
    assert frame['t'].tolist() == [0.0, 0.5, 1.0]


def test_evolve_single_time_point(tmp_path):
    code = run("evolve", tmp_path, *ALGEBRAIC_SMALL, "--override", "times.t_max=0", "--override", "times.steps=1")
    assert code == EXIT_OK
    lines = (tmp_path / TRAJECTORY_CSV).read_text(encoding="utf-8").splitlines()
    assert lines[0] == "t,eta_norm,ref_norm,equiv_dev"
    assert len(lines) == 2
    summary = json.loads((tmp_path / "evolve_summary.json").read_text(encoding="utf-8"))
    assert summary['max_eta_norm_drift'] == 0.0
    assert summary['max_ref_norm_variation'] == 0.0
    assert summary['max_equiv_dev'] == 0.0


def test_evolve_hermitian_reduction(tmp_path):
    code = run(
        "evolve", tmp_path,
        "--override", "alpha=0",
        "--override", "grid.n=101",
        "--override", "times.t_max=3",
        "--override", "times.steps=7",
    )
    assert code == EXIT_OK
    frame = pd.read_csv(tmp_path / TRAJECTORY_CSV)
    for column in ('eta_norm', 'ref_norm'):
        values = frame[column].to_numpy()
        assert np.max(np.abs(values - values[0])) <= 1e-10


def test_equivalent_with_identity_metric_returns_input(tmp_path):
    H = np.array([[2.0 + 0.25j, 1.0 + 0.5j, 0.5 - 1.5j],
                  [1.0 - 0.5j, 3.0 - 0.75j, -0.25 + 2.0j],
                  [0.5 + 1.5j, -0.25 - 2.0j, 1.5 + 0.125j]])
    h_path = write_matrix(tmp_path / "H.txt", H)
    eta_path = write_matrix(tmp_path / "eta.txt", np.eye(3))
    code = run(
        "equivalent", tmp_path / "out",
        "--override", "mode=matrix-files",
        "--override", f"matrix.hamiltonian={h_path}",
        "--override", f"matrix.metric={eta_path}",
    )
    assert code == EXIT_OK
    h = MatrixLoader().load_matrix(str(tmp_path / "out" / "equivalent_h.txt"))
    assert np.array_equal(h, H)
    summary = json.loads((tmp_path / "out" / "equivalent.json").read_text(encoding="utf-8"))
    assert summary['dim'] == 3
    assert summary['eta_condition'] == 1.0


def test_equivalent_algebraic_round_trip(tmp_path):
    assert run("equivalent", tmp_path, *ALGEBRAIC_SMALL) == EXIT_OK
    summary = json.loads((tmp_path / "equivalent.json").read_text(encoding="utf-8"))
    assert summary['h_ref_recovery'] <= 1e-12
    assert summary['hermiticity_residual'] <= 1e-12


def test_verify_is_deterministic(tmp_path):
    assert run("verify", tmp_path, *ALGEBRAIC_SMALL) == EXIT_OK
    first = (tmp_path / REPORT_JSON).read_bytes()
    assert run("verify", tmp_path, *ALGEBRAIC_SMALL) == EXIT_OK
    assert (tmp_path / REPORT_JSON).read_bytes() == first


def test_non_square_matrix_file_is_config_error(tmp_path):
    h_path = write_matrix(tmp_path / "H.txt", np.ones((2, 3)))
    eta_path = write_matrix(tmp_path / "eta.txt", np.eye(2))
    code = run(
        "spectrum", tmp_path / "out",
        "--override", "mode=matrix-files",
        "--override", f"matrix.hamiltonian={h_path}",
        "--override", f"matrix.metric={eta_path}",
    )
    assert code == EXIT_CONFIG


def test_config_comment_outside_quotes_only():
    config = parse_config_text(
        '[matrix]\nhamiltonian = "runs/#3/H.txt"  # 第三组\nmetric = \'eta#1.txt\'\n# 整行注释\n'
    )
    assert config.matrix.hamiltonian == "runs/#3/H.txt"
    assert config.matrix.metric == "eta#1.txt"
    config = parse_config_text("alpha = 0.4 # 注释中的 'quote'\n")
    assert config.alpha == 0.4


def test_quoted_matrix_path_with_hash(tmp_path):
    folder = tmp_path / "run#1"
    folder.mkdir()
    H = np.diag([1.0, 3.0])
    h_path = write_matrix(folder / "H.txt", H)
    eta_path = write_matrix(folder / "eta.txt", np.diag([1.0, 4.0]))
    config = tmp_path / "run.conf"
    config.write_text(
        f'mode = matrix-files\n[matrix]\nhamiltonian = "{h_path}"\nmetric = "{eta_path}"  # 度量\n',
        encoding="utf-8",
    )
    assert run("spectrum", tmp_path / "out", "--config", str(config)) == EXIT_OK
    frame = pd.read_csv(tmp_path / "out" / SPECTRUM_CSV)
    assert_allclose(frame['E_numeric'].to_numpy(), [1.0, 3.0], atol=1e-14)
