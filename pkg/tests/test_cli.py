import filecmp

import pytest

from dopo_qb import cli, config
from dopo_qb.dopo import DopoParams
from dopo_qb.errors import ConfigError
from dopo_qb.load import DischargeParams

SMALL = """
[dopo]
n_s = 8
n_p = 4
[integrator]
t_end = 2.0
sample_dt = 0.25
"""


def write(tmp_path, text, name="cfg.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run(argv):
    return cli.main(argv)


class TestConfig:
    def test_defaults(self):
        cfg = config.load()
        assert cfg.dopo == DopoParams()
        d = cfg.discharge
        assert (d.omega_s, d.omega_a, d.g, d.gamma_s2, d.gamma_a, d.n_s) == (1000, 1000, 10, 1, 1, 32)
        assert (cfg.integrator.rtol, cfg.sample_dt, cfg.t_end) == (1e-8, 0.1, 40.0)
        assert (cfg.fit.window, cfg.fit.tolerance, cfg.fit.decay_start, cfg.fit.decay_end) == (10, 0.02, 41, 45)

    @pytest.mark.parametrize("text", ["[dopo]\nfp = 2\n", "[pump]\nn = 3\n", "[dopo]\nn_s = many\n",
                                      "[dopo]\ngamma_s = 0\n", "[discharge]\nframe = rotating\n",
                                      "[run]\nthreads = 0\n", "no section header\n",
                                      "[fit]\ndecay_start = 39\n"])
    def test_rejected(self, text):
        with pytest.raises(ConfigError):
            config.resolve(config.parse(text))

    def test_manifest_round_trip(self, tmp_path):
        cfg = config.load(write(tmp_path, SMALL + "[custom]\nf_p_values = 0.5, 1.25\n"))
        again = config.resolve(config.parse(config.to_ini(cfg)))
        assert again == cfg

    def test_output_dir_precedence(self):
        raw = config.parse("[run]\noutput_dir = from_file\n")
        assert config.resolve(raw, env={}).output_dir == "from_file"
        assert config.resolve(raw, env={config.OUTPUT_ENV: "from_env"}).output_dir == "from_env"
        assert config.resolve(raw, output_dir="flag", env={config.OUTPUT_ENV: "e"}).output_dir == "flag"

    def test_discharge_section(self):
        cfg = config.resolve(config.parse("[discharge]\ng = 3.5\nframe = lab\n"))
        assert cfg.discharge == DischargeParams(g=3.5, frame="lab")

    def test_lint(self):
        assert config.lint(config.load()) == []
        small = config.lint(config.resolve(config.parse("[dopo]\nn_s = 8\n")))
        assert len(small) == 1 and small[0].startswith("truncation")
        strong = config.lint(config.resolve(config.parse("[dopo]\nf_p = 5\n")))
        assert len(strong) == 1 and strong[0].startswith("regime")


class TestCommands:
    def test_list(self, capsys):
        assert run(["list"]) == 0
        out = capsys.readouterr().out
        for name in config.EXPERIMENTS:
            assert name in out
        assert "Fig. 8" in out

    def test_validate_default(self, tmp_path, capsys):
        assert run(["validate", "--config", write(tmp_path, "")]) == 0
        assert "warning:" not in capsys.readouterr().out

    def test_validate_warnings(self, tmp_path, capsys):
        assert run(["validate", "--config", write(tmp_path, "[dopo]\nn_s = 8\nf_p = 5\n")]) == 0
        out = capsys.readouterr().out
        assert "truncation" in out and "regime" in out

    def test_validate_schema_error(self, tmp_path, capsys):
        assert run(["validate", "--config", write(tmp_path, "[dopo]\nbogus = 1\n")]) == 1
        assert "bogus" in capsys.readouterr().out

    def test_usage_error_is_config_error(self):
        with pytest.raises(SystemExit) as info:
            run(["run", "fig99"])
        assert info.value.code == 1

    def test_missing_config_file(self, tmp_path):
        assert run(["run", "custom", "--config", str(tmp_path / "nope.ini"), "--out", str(tmp_path)]) == 1


class TestRun:
    def test_custom_no_drive(self, tmp_path):
        out = tmp_path / "out"
        cfg = write(tmp_path, "[dopo]\nf_p = 0\n[integrator]\nt_end = 3\n")
        assert run(["run", "custom", "--config", cfg, "--out", str(out)]) == 0
        lines = (out / "custom.csv").read_text().splitlines()
        assert lines[0] == "t,W,W_c,W_i,P,n_s,n_p,re_alpha_s,im_alpha_s"
        for line in lines[1:]:
            t, w, wc, wi, *_ = (float(v) for v in line.split(","))
            assert w == wc == wi == 0
        summary = (out / "summary.txt").read_text()
        assert "criterion.1=pass" in summary and "experiment=custom" in summary
        manifest = (out / "manifest.ini").read_text()
        assert manifest.startswith("# dopo-qb ")
        assert config.resolve(config.parse(manifest)).dopo.f_p == 0

    def test_seventeen_digits(self, tmp_path):
        out = tmp_path / "out"
        cfg = write(tmp_path, "[dopo]\nn_s = 8\nn_p = 4\nf_p = 1.0\n[integrator]\nt_end = 1\nsample_dt = 0.5\n")
        assert run(["run", "custom", "--config", cfg, "--out", str(out)]) == 0
        row = (out / "custom.csv").read_text().splitlines()[-1].split(",")
        w = row[1]
        assert float(w) == float(format(float(w), ".17g"))
        assert len(w.replace(".", "").replace("-", "").lstrip("0").split("e")[0]) >= 15

    def test_byte_identical_rerun_and_parallel(self, tmp_path):
        cfg = write(tmp_path, SMALL + "[custom]\nf_p_values = 0.5, 1.0, 1.5\n")
        dirs = [tmp_path / name for name in ("a", "b", "c")]
        assert run(["run", "custom", "--config", cfg, "--out", str(dirs[0])]) == 0
        assert run(["run", "custom", "--config", cfg, "--out", str(dirs[1])]) == 0
        assert run(["run", "custom", "--config", cfg, "--out", str(dirs[2]), "--threads", "3"]) == 0
        names = sorted(p.name for p in dirs[0].iterdir() if p.suffix in (".csv", ".txt"))
        assert "custom_fit.csv" in names and "custom_f_p1.5.csv" in names
        for other in dirs[1:]:
            match, mismatch, errors = filecmp.cmpfiles(dirs[0], other, names, shallow=False)
            assert mismatch == [] and errors == []

    def test_env_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv(config.OUTPUT_ENV, str(tmp_path / "env_out"))
        assert run(["run", "custom", "--config", write(tmp_path, SMALL)]) == 0
        assert (tmp_path / "env_out" / "summary.txt").exists()

    def test_check_exit_code(self, tmp_path):
        # a different coupling moves the threshold away from its reference value
        cfg = write(tmp_path, SMALL.replace("[dopo]\n", "[dopo]\nkappa = 1.0\n"))
        assert run(["run", "custom", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
        assert run(["run", "custom", "--config", cfg, "--out", str(tmp_path / "o"), "--check"]) == 4
        assert "criterion.1=fail" in (tmp_path / "o" / "summary.txt").read_text()

    def test_integration_failure_exit_code(self, tmp_path, capsys):
        # tolerances this loose let the state lose positivity within one sample
        cfg = write(tmp_path, "[dopo]\nn_s = 6\nn_p = 3\n[integrator]\nrtol = 0.5\natol = 0.5\n"
                              "t_end = 1\n")
        assert run(["run", "custom", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
        assert "integration failed" in capsys.readouterr().err

    def test_fit_failure_exit_code(self, tmp_path, capsys):
        cfg = write(tmp_path, "[dopo]\nn_s = 6\nn_p = 3\n[integrator]\nt_end = 4\nsample_dt = 0.5\n"
                              "[fit]\nwindow = 2\ntolerance = 1e-12\n")
        assert run(["run", "fig3", "--config", cfg, "--out", str(tmp_path / "o")]) == 3
        assert "fit failed" in capsys.readouterr().err
