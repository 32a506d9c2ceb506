import numpy as np

from satprecode import io as csvio
from satprecode.cli import main
from satprecode.precoding import evaluate_sinr, feed_powers

SCENARIO = "dimensions: {beams: 4, users_per_beam: 2}\nper_feed_power: 10\n"


def write_config(tmp_path, extra=""):
    path = tmp_path / "scenario.yaml"
    path.write_text(SCENARIO + extra)
    return str(path)


def test_no_arguments_prints_usage(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().err


def test_generate_precode_evaluate(tmp_path, capsys):
    cfg = write_config(tmp_path)
    h, w, s = (str(tmp_path / n) for n in ("h.csv", "w.csv", "s.csv"))
    assert main(["generate", "--config", cfg, "--seed", "3", "--out", h]) == 0
    assert main(["precode", "--channels", h, "--method", "block_svd", "--out", w]) == 0
    precode_line = capsys.readouterr().out.strip().splitlines()[-1]
    assert main(["evaluate", "--channels", h, "--precoder", w, "--out", s]) == 0
    assert capsys.readouterr().out.strip() == precode_line
    channels = csvio.read_channels(h)
    W = csvio.read_matrix(w)
    assert np.array_equal(csvio.read_sinr(s).sinr, evaluate_sinr(channels, W).sinr)
    assert feed_powers(W).max() <= 55.0 * (1 + 1e-9)


def test_config_channels_match_generate(tmp_path):
    cfg = write_config(tmp_path)
    h, w1, w2 = (str(tmp_path / n) for n in ("h.csv", "a.csv", "b.csv"))
    main(["generate", "--config", cfg, "--seed", "9", "--out", h])
    main(["precode", "--channels", h, "--power", "10", "--out", w1])
    main(["precode", "--config", cfg, "--seed", "9", "--out", w2])
    assert np.array_equal(csvio.read_matrix(w1), csvio.read_matrix(w2))


def test_missing_seed_is_printed(tmp_path, capsys):
    cfg = write_config(tmp_path)
    h = str(tmp_path / "h.csv")
    assert main(["generate", "--config", cfg, "--out", h]) == 0
    err = capsys.readouterr().err
    seed = int(err.strip().split("=")[1])
    again = str(tmp_path / "again.csv")
    main(["generate", "--config", cfg, "--seed", str(seed), "--out", again])
    assert open(h).read() == open(again).read()


def test_dimension_error(tmp_path, capsys):
    cfg = write_config(tmp_path)
    h, w = str(tmp_path / "h.csv"), str(tmp_path / "w.csv")
    main(["generate", "--config", cfg, "--seed", "1", "--out", h])
    csvio.write_matrix(w, np.ones((3, 4)))
    assert main(["evaluate", "--channels", h, "--precoder", w]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error: DimensionMismatchError:")


def test_config_error_reported(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("link_budget: {bandwidth: -5}\n")
    assert main(["generate", "--config", str(cfg), "--seed", "1", "--out", str(tmp_path / "h.csv")]) == 1
    assert "link_budget.bandwidth" in capsys.readouterr().err


def test_solve_qos_and_maxmin(tmp_path, capsys):
    h = tmp_path / "h.csv"
    csvio.write_channels(h, _single_beam())
    assert main(["solve-qos", "--channels", str(h), "--gamma", "4", "--power", "100", "--seed", "0",
                 "--log", str(tmp_path / "log.csv")]) == 0
    out = capsys.readouterr().out
    assert out.startswith("status=feasible")
    assert main(["maxmin", "--channels", str(h), "--power", "5", "--seed", "0"]) == 0
    t = float(capsys.readouterr().out.split()[0].split("=")[1])
    assert abs(t - 5.0) <= 1e-3


def _single_beam():
    from satprecode.channel import ChannelSet

    return ChannelSet.from_matrices(np.ones((1, 1, 1), dtype=complex))


def test_impair_and_hybrid(tmp_path, capsys):
    cfg = write_config(tmp_path)
    w = str(tmp_path / "w.csv")
    assert main(["precode", "--config", cfg, "--seed", "2", "--out", w]) == 0
    capsys.readouterr()
    out = str(tmp_path / "impair.csv")
    assert main(["impair", "--config", cfg, "--seed", "2", "--precoder", w, "--phase-param", "0.1",
                 "--trials", "200", "--symbols", "500", "--g3", "-0.01", "--out", out]) == 0
    lines = open(out).read().splitlines()
    assert lines[0].startswith("beam,user,nominal_sinr") and len(lines) == 1 + 4 * 2
    trace = str(tmp_path / "trace.csv")
    assert main(["hybrid", "--precoder", w, "--n-rf", "4", "--trace", trace]) == 0
    assert float(capsys.readouterr().out.split()[0].split("=")[1]) <= 1e-8


def test_sweep_and_summarize(tmp_path, capsys):
    cfg = write_config(tmp_path, "sweep: {users_per_beam: [1, 2], runs: 2, master_seed: 4}\n")
    a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    assert main(["sweep", "--config", cfg, "--out", a, "--no-timing"]) == 0
    assert main(["sweep", "--config", cfg, "--out", b, "--no-timing", "--workers", "2"]) == 0
    assert open(a).read() == open(b).read()
    capsys.readouterr()
    assert main(["summarize", "--input", a]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("precoder,K,N,Nu,count") and len(lines) == 1 + 2 * 2
