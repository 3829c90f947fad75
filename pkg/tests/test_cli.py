import math

import pytest

from xustat.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def kv(out):
    pairs = {}
    for line in out.strip().splitlines():
        if "=" in line:
            key, _, val = line.partition("=")
            pairs[key] = val
    return pairs


@pytest.fixture
def sample_file(tmp_path):
    path = tmp_path / "sample.txt"
    path.write_text("# four points\n4\n3\n1\n0\n")
    return str(path)


@pytest.fixture
def gp_sample_file(tmp_path):
    from xustat import dist

    g = dist.RngStream(31337, 0).generator()
    values = dist.quantile(dist.gp(0.5), g.random(400))
    path = tmp_path / "gp.txt"
    path.write_text("\n".join(repr(float(v)) for v in values) + "\n")
    return str(path)


class TestEstimate:
    def test_four_point_value(self, capsys, sample_file):
        code, out, _ = run_cli(capsys, "estimate", "--input", sample_file, "--m", "3")
        assert code == 0
        got = float(kv(out)["gamma_hat"])
        assert got == pytest.approx(-math.log(24.0) / 4.0, rel=1e-12)

    def test_m_too_small_is_usage_error(self, capsys, sample_file):
        code, _, err = run_cli(capsys, "estimate", "--input", sample_file, "--m", "2")
        assert code == 1
        assert "m" in err

    def test_ties_are_data_error(self, capsys, tmp_path):
        path = tmp_path / "ties.txt"
        path.write_text("7\n7\n7\n")
        code, _, err = run_cli(capsys, "estimate", "--input", str(path), "--m", "3")
        assert code == 2
        assert "DegenerateSpacing" in err

    def test_short_input_is_data_error(self, capsys, tmp_path):
        path = tmp_path / "short.txt"
        path.write_text("1\n2\n")
        code, _, err = run_cli(capsys, "estimate", "--input", str(path), "--m", "3")
        assert code == 2

    def test_missing_file_is_data_error(self, capsys, tmp_path):
        code, _, _ = run_cli(
            capsys, "estimate", "--input", str(tmp_path / "nope.txt"), "--m", "3"
        )
        assert code == 2

    def test_unknown_flag_rejected(self, capsys, sample_file):
        code, _, _ = run_cli(
            capsys, "estimate", "--input", sample_file, "--m", "3", "--bogus", "1"
        )
        assert code == 1

    def test_bootstrap_ci(self, capsys, gp_sample_file):
        code, out, _ = run_cli(
            capsys, "estimate", "--input", gp_sample_file, "--m", "10",
            "--bootstrap", "200", "--seed", "7",
        )
        assert code == 0
        pairs = kv(out)
        lo, hi = (float(v) for v in pairs["ci"].strip("[]").split(","))
        assert lo <= float(pairs["gamma_hat"]) <= hi

    def test_truncation_flag(self, capsys, gp_sample_file):
        _, exact_out, _ = run_cli(
            capsys, "estimate", "--input", gp_sample_file, "--m", "10"
        )
        code, out, _ = run_cli(
            capsys, "estimate", "--input", gp_sample_file, "--m", "10",
            "--truncation", "1e-9",
        )
        assert code == 0
        exact = float(kv(exact_out)["gamma_hat"])
        assert float(kv(out)["gamma_hat"]) == pytest.approx(exact, rel=1e-7)

    def test_seed_default_is_fixed(self, capsys, gp_sample_file):
        _, out1, _ = run_cli(
            capsys, "estimate", "--input", gp_sample_file, "--m", "10",
            "--bootstrap", "200",
        )
        _, out2, _ = run_cli(
            capsys, "estimate", "--input", gp_sample_file, "--m", "10",
            "--bootstrap", "200",
        )
        assert out1 == out2


class TestWeights:
    def test_values(self, capsys):
        code, out, _ = run_cli(capsys, "weights", "--n", "5", "--m", "3")
        assert code == 0
        pairs = kv(out)
        assert float(pairs["w[2]"]) == pytest.approx(0.6)
        assert float(pairs["w[5]"]) == pytest.approx(-0.3)
        assert abs(float(pairs["zero_sum_residual"])) <= 1e-12

    def test_bad_range(self, capsys):
        code, _, _ = run_cli(capsys, "weights", "--n", "5", "--m", "6")
        assert code == 1


class TestOracleCheck:
    def test_default_passes(self, capsys):
        code, out, _ = run_cli(capsys, "oracle-check", "--seed", "11")
        assert code == 0
        pairs = kv(out)
        assert pairs["result"] == "pass"
        assert pairs["brute_vs_fast_vs_generic"] == "pass"
        assert pairs["weight_zero_sum"] == "pass"
        assert pairs["hypergeometric_pmf"] == "pass"
        assert pairs["digamma_kernel_mean"] == "pass"

    def test_injected_error_detected(self, capsys):
        code, out, _ = run_cli(capsys, "oracle-check", "--seed", "11", "--inject-error")
        assert code == 3
        assert kv(out)["result"] == "fail"

    def test_report_deterministic(self, capsys):
        _, out1, _ = run_cli(capsys, "oracle-check", "--seed", "11")
        _, out2, _ = run_cli(capsys, "oracle-check", "--seed", "11")
        assert out1 == out2


CONFIG = """
experiment = MseSweep
family = GP
params = 0.5
n = 120
reps = 5
m_grid = 3,8
seed = 99
out = {out}
threads = 1
"""


class TestSimulate:
    def test_writes_csv_and_is_deterministic(self, capsys, tmp_path):
        cfg = tmp_path / "exp.cfg"
        out = tmp_path / "result.csv"
        cfg.write_text(CONFIG.format(out=out))
        code, stdout, _ = run_cli(capsys, "simulate", "--config", str(cfg))
        assert code == 0
        assert kv(stdout)["out"] == str(out)
        first = out.read_bytes()
        code, _, _ = run_cli(
            capsys, "simulate", "--config", str(cfg), "--threads", "2"
        )
        assert code == 0
        assert out.read_bytes() == first

    def test_row_accounting(self, capsys, tmp_path):
        cfg = tmp_path / "exp.cfg"
        out = tmp_path / "result.csv"
        cfg.write_text(CONFIG.format(out=out))
        run_cli(capsys, "simulate", "--config", str(cfg))
        lines = out.read_text().strip().split("\n")
        assert len(lines) == 1 + 2 * 2  # header + |m_grid| * 2 aggregates
        run_cli(capsys, "simulate", "--config", str(cfg), "--per-rep")
        lines = out.read_text().strip().split("\n")
        assert len(lines) == 1 + 5 * 2 * 2 + 2 * 2

    def test_variance_table_experiment_rows(self, capsys, tmp_path):
        cfg = tmp_path / "vt.cfg"
        out = tmp_path / "vt.csv"
        cfg.write_text(
            "experiment = VarianceTable\nfamily = GP\nparams = -0.5,0,0.5\n"
            f"n = 300\nreps = 120\nm_grid = 6\nseed = 2\nout = {out}\nthreads = 1\n"
        )
        code, _, _ = run_cli(capsys, "simulate", "--config", str(cfg))
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert len(lines) == 1 + 3  # header + one aggregate row per gamma

    def test_bad_config_key_is_usage_error(self, capsys, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("experiment = MseSweep\nwhat = 1\n")
        code, _, err = run_cli(capsys, "simulate", "--config", str(cfg))
        assert code == 1
        assert "unknown key" in err

    def test_unwritable_path_is_data_error(self, capsys, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(CONFIG.format(out="/proc/xustat-no-such-dir/out.csv"))
        code, _, _ = run_cli(capsys, "simulate", "--config", str(cfg))
        assert code == 2


class TestVarianceTableCmd:
    def test_smoke(self, capsys):
        code, out, _ = run_cli(
            capsys, "variance-table", "--gammas", "0.0", "--n", "300", "--m", "6",
            "--reps", "120", "--seed", "3",
        )
        assert code == 0
        assert "sigma2=" in out


class TestBiasCmd:
    def test_smoke(self, capsys):
        code, out, _ = run_cli(
            capsys, "bias", "--gamma", "0.5", "--rhos", "-1", "--reps", "20000",
            "--seed", "3",
        )
        assert code == 0
        assert "b_k=" in out

    def test_positive_rho_rejected(self, capsys):
        code, _, _ = run_cli(
            capsys, "bias", "--gamma", "0.5", "--rhos", "0.5", "--reps", "20000"
        )
        assert code == 1


class TestBootstrapCmd:
    def test_smoke(self, capsys, gp_sample_file):
        code, out, _ = run_cli(
            capsys, "bootstrap", "--input", gp_sample_file, "--m", "10",
            "--boot-reps", "200", "--seed", "5",
        )
        assert code == 0
        pairs = kv(out)
        assert "ci" in pairs and "dropped" in pairs


class TestTopLevel:
    def test_no_command_is_usage_error(self, capsys):
        assert run_cli(capsys)[0] == 1

    def test_unknown_command_is_usage_error(self, capsys):
        assert run_cli(capsys, "frobnicate")[0] == 1

    def test_help_lists_every_flag(self, capsys):
        with pytest.raises(SystemExit):
            main(["estimate", "--help"])
        out = capsys.readouterr().out
        for flag in ("--input", "--m", "--bootstrap", "--level", "--seed", "--truncation"):
            assert flag in out