import json

import pytest

from accoffload import cli
from accoffload.sim_model import fixture_path
from conftest import SRC, mock_compile_cmd, write_config


def analyze_config(tmp_path, source, **extra):
    return write_config(tmp_path / "a.json", source=str(source), workdir="wd",
                        toolchain={"compile_cmd": mock_compile_cmd()}, **extra)


# analyze -------------------------------------------------------------------

def test_analyze_matmul(tmp_path, capsys):
    cfg = analyze_config(tmp_path, SRC / "matmul.c")
    assert cli.main(["analyze", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "12 for loops, 12 candidates" in out
    doc = json.loads((tmp_path / "wd" / "analysis.json").read_text())
    assert doc["gene_length"] == 12
    assert len((tmp_path / "wd" / "probe.jsonl").read_text().splitlines()) == 12


def test_analyze_zero_loops(tmp_path, capsys):
    src = tmp_path / "empty.c"
    src.write_text("int main(void) { return 0; }\n")
    assert cli.main(["analyze", str(analyze_config(tmp_path, src))]) == 0
    assert "no candidate loops" in capsys.readouterr().out
    assert json.loads((tmp_path / "wd" / "analysis.json").read_text())["gene_length"] == 0


@pytest.mark.parametrize("name, rejected, cls", [
    ("ext_call.c", [1], "ExternalCall"),
    ("early_exit.c", [1], "EarlyExit"),
    ("data_dep.c", [1], "DataDependency"),
    ("nested.c", [0, 1], "NestedOverlap"),
])
def test_analyze_corpus_classes(tmp_path, name, rejected, cls):
    assert cli.main(["analyze", str(analyze_config(tmp_path, SRC / name))]) == 0
    doc = json.loads((tmp_path / "wd" / "analysis.json").read_text())
    bad = [lp for lp in doc["loops"] if lp["verdict"] == "Rejected"]
    assert [lp["id"] for lp in bad] == rejected
    assert {lp["reject_class"] for lp in bad} == {cls}
    assert doc["gene_length"] == len(doc["loops"]) - len(rejected)


def test_analyze_scan_error(tmp_path):
    src = tmp_path / "bad.c"
    src.write_text("int f() { for(;;) {\n")
    assert cli.main(["analyze", str(analyze_config(tmp_path, src))]) == cli.EXIT_SCAN


def test_analyze_missing_config(tmp_path):
    assert cli.main(["analyze", str(tmp_path / "nope.json")]) == cli.EXIT_CONFIG


def test_config_unknown_key(tmp_path):
    cfg = analyze_config(tmp_path, SRC / "matmul.c", colour="blue")
    assert cli.main(["analyze", str(cfg)]) == cli.EXIT_CONFIG


def test_config_needs_exactly_one_backend(tmp_path):
    cfg = write_config(tmp_path / "c.json", source=str(SRC / "matmul.c"),
                       toolchain={"compile_cmd": "true"}, sim_model=str(fixture_path("matrix12")))
    assert cli.main(["analyze", str(cfg)]) == cli.EXIT_CONFIG


# tune ----------------------------------------------------------------------

def test_tune_writes_artifacts(sim_config, tmp_path, capsys):
    cfg = sim_config()
    assert cli.main(["tune", str(cfg)]) == 0
    wd = tmp_path / "run"
    for name in ("config.resolved.json", "generations.csv", "summary.json", "cache.jsonl",
                 "best_matmul.c", "manifest.json", "analysis.json", "probe.jsonl"):
        assert (wd / name).exists(), name
    summary = json.loads((wd / "summary.json").read_text())
    assert set(summary) == {"baseline_s", "best_s", "speedup", "best_genome", "distinct_evals", "elapsed_s"}
    assert summary["speedup"] == pytest.approx(summary["baseline_s"] / summary["best_s"])
    best = (wd / "best_matmul.c").read_text()
    assert best.count("#pragma acc kernels") == summary["best_genome"].count("1")


def test_tune_population_one_rejected(sim_config):
    assert cli.main(["tune", str(sim_config(population=1, generations=1))]) == cli.EXIT_CONFIG


def test_tune_flag_overrides(sim_config, tmp_path):
    assert cli.main(["tune", str(sim_config()), "--seed", "5", "--generations", "3",
                     "--workdir", str(tmp_path / "other")]) == 0
    rows = (tmp_path / "other" / "generations.csv").read_text().splitlines()
    assert len(rows) == 1 + 4
    resolved = json.loads((tmp_path / "other" / "config.resolved.json").read_text())
    assert resolved["ga"]["seed"] == 5


def test_tune_rerun_uses_cache(sim_config, tmp_path, capsys):
    cfg = str(sim_config())
    assert cli.main(["tune", cfg]) == 0
    first = (tmp_path / "run" / "summary.json").read_bytes()
    capsys.readouterr()
    assert cli.main(["tune", cfg]) == 0
    assert "toolchain invocations this run: 0" in capsys.readouterr().out
    assert (tmp_path / "run" / "summary.json").read_bytes() == first


def test_tune_sim_flag_replaces_toolchain(tmp_path):
    cfg = write_config(tmp_path / "t.json", source=str(SRC / "matmul.c"), workdir="wd",
                       toolchain={"compile_cmd": mock_compile_cmd()}, ga={"generations": 2})
    assert cli.main(["tune", str(cfg), "--sim", str(fixture_path("matrix12"))]) == 0
    resolved = json.loads((tmp_path / "wd" / "config.resolved.json").read_text())
    assert resolved["toolchain"] is None and resolved["sim_model"].endswith("matrix12.json")


def test_tune_model_length_mismatch(tmp_path):
    cfg = write_config(tmp_path / "t.json", source=str(SRC / "data_dep.c"), workdir="wd",
                       sim_model=str(fixture_path("matrix12")))
    assert cli.main(["tune", str(cfg)]) == cli.EXIT_CONFIG


def test_tune_toolchain_end_to_end(tmp_path):
    model = str(fixture_path("matrix12"))
    cfg = write_config(tmp_path / "t.json", source=str(SRC / "matmul.c"), workdir="wd",
                       probe={"compile_cmd": mock_compile_cmd()},
                       toolchain={"compile_cmd": mock_compile_cmd("--allow-nested", "--model", model),
                                  "time_regex": r"elapsed:\s*([0-9.eE+-]+)", "jobs": 4},
                       ga={"population": 6, "generations": 3, "seed": 1})
    assert cli.main(["tune", str(cfg)]) == 0
    summary = json.loads((tmp_path / "wd" / "summary.json").read_text())
    assert summary["baseline_s"] == pytest.approx(0.09227)
    assert summary["speedup"] >= 1.0
    assert (tmp_path / "wd" / "variants" / ("0" * 12) / "run.log").exists()


def test_tune_missing_compiler(tmp_path):
    cfg = write_config(tmp_path / "t.json", source=str(SRC / "matmul.c"), workdir="wd",
                       probe={"compile_cmd": mock_compile_cmd()},
                       toolchain={"compile_cmd": "no-such-cc-xyz {src} -o {out}"})
    assert cli.main(["tune", str(cfg)]) == cli.EXIT_TOOLCHAIN


def test_tune_no_candidates(tmp_path):
    src = tmp_path / "calls.c"
    src.write_text("void f(int n){\n  for(int i=0;i<n;i++){ g(i); }\n}\n")
    cfg = write_config(tmp_path / "t.json", source=str(src), workdir="wd",
                       toolchain={"compile_cmd": mock_compile_cmd()})
    assert cli.main(["tune", str(cfg)]) == cli.EXIT_SCAN


def test_tune_baseline_failure(tmp_path):
    cfg = write_config(tmp_path / "t.json", source=str(SRC / "matmul.c"), workdir="wd",
                       probe={"compile_cmd": mock_compile_cmd()},
                       toolchain={"compile_cmd": mock_compile_cmd("--fail-run")})
    assert cli.main(["tune", str(cfg)]) == cli.EXIT_TOOLCHAIN


# report --------------------------------------------------------------------

def test_report_table_and_figure(sim_config, tmp_path, capsys):
    assert cli.main(["tune", str(sim_config())]) == 0
    capsys.readouterr()
    wd = tmp_path / "run"
    assert cli.main(["report", str(wd)]) == 0
    out = capsys.readouterr().out
    table = [ln for ln in out.splitlines() if ln[:4].strip().isdigit()]
    assert len(table) == 13
    assert (wd / "generations.png").stat().st_size > 0
    dat = (wd / "generations.dat").read_text().splitlines()
    assert dat[0].startswith("#") and len(dat) == 14
    final_speedup = float(dat[-1].split()[1])
    summary = json.loads((wd / "summary.json").read_text())
    assert final_speedup == pytest.approx(summary["speedup"])
    assert final_speedup >= 35.0


def test_report_gnuplot_path_and_no_plot(sim_config, tmp_path):
    assert cli.main(["tune", str(sim_config(generations=2))]) == 0
    wd = tmp_path / "run"
    assert cli.main(["report", str(wd), "--gnuplot", str(tmp_path / "g.dat"), "--no-plot"]) == 0
    assert (tmp_path / "g.dat").exists()
    assert not (wd / "generations.png").exists()


def test_report_tampered_log(sim_config, tmp_path, capsys):
    assert cli.main(["tune", str(sim_config())]) == 0
    csv = tmp_path / "run" / "generations.csv"
    lines = csv.read_text().splitlines()
    last = lines[-1].split(",")
    last[1] = repr(float(last[1]) * 10)
    last[2] = repr(float(lines[1].split(",")[1]) / float(last[1]))
    lines[-1] = ",".join(last)
    csv.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    assert cli.main(["report", str(tmp_path / "run"), "--no-plot"]) == cli.EXIT_CORRUPT_LOG
    assert "elitism" in capsys.readouterr().err


def test_report_dangling_artifact(sim_config, tmp_path):
    assert cli.main(["tune", str(sim_config(generations=2))]) == 0
    (tmp_path / "run" / "best_matmul.c").unlink()
    assert cli.main(["report", str(tmp_path / "run"), "--no-plot"]) == cli.EXIT_CORRUPT_LOG


def test_report_garbled_csv(sim_config, tmp_path):
    assert cli.main(["tune", str(sim_config(generations=2))]) == 0
    (tmp_path / "run" / "generations.csv").write_text("nonsense\n1,2\n")
    assert cli.main(["report", str(tmp_path / "run"), "--no-plot"]) == cli.EXIT_CORRUPT_LOG


def test_report_missing_log(tmp_path):
    assert cli.main(["report", str(tmp_path)]) == cli.EXIT_CONFIG
