import csv
import math

import pytest

from csafsim.cli import main
from csafsim.config import parse_config
from csafsim.errors import ConfigError
from csafsim.kernels import KERNEL_NAMES
from csafsim.trace import read_trace_file

SMALL = """\
# two short kernels, fast to simulate
workload.kernels = queens, towers, bubblesort
workload.sizes = queens:6, towers:8, bubblesort:40
slice_len = 400
window = 100
transient.period = 500
transient.sizes = 16, 64
"""


def test_bimode_128_example():
    cfg = parse_config("predictor.family = bimode\npredictor.pht_entries = 128")
    assert (cfg.predictor.family, cfg.predictor.pht_entries) == ("bimode", 128)


def test_empty_file_gives_defaults():
    cfg = parse_config("")
    assert cfg.predictor.family == "bimode" and cfg.predictor.pht_entries == 128
    assert cfg.predictor.history_bits == 7 and cfg.predictor.init_value == 1
    assert (cfg.mode, cfg.threshold, cfg.table_capacity) == ("csaf", 0.25, 64)
    assert cfg.workload.kernels == KERNEL_NAMES
    assert (cfg.slice_len, cfg.window, cfg.period) == (10_000, 1000, 10_000)


def test_comments_and_overrides():
    cfg = parse_config("csaf.threshold = 0.5  # tighter\n\nseed = 4\n", ["seed=9", "csaf.threshold = inf"])
    assert cfg.seed == 9 and math.isinf(cfg.threshold)


@pytest.mark.parametrize(
    "text,key",
    [
        ("csaf.threshold = -1", "csaf.threshold"),
        ("predictor.pht_entries = many", "predictor.pht_entries"),
        ("predictor.pht_entries = 100", "pht_entries"),
        ("predictor.family = perceptron", "predictor.family"),
        ("bogus.key = 1", "bogus.key"),
        ("workload.kernels = queens, dhrystone", "workload.kernels"),
        ("csaf.mode = sometimes", "csaf.mode"),
        ("window = 0", "window"),
        ("transient.sizes = 100", "transient.sizes"),
        ("workload.source = trace", "workload.trace"),
        ("just words", "line 1"),
    ],
)
def test_rejections_name_the_field(text, key):
    with pytest.raises(ConfigError, match=key.replace(".", r"\.")):
        parse_config(text)


@pytest.fixture
def small(tmp_path, monkeypatch):
    monkeypatch.delenv("CSAFSIM_OUT", raising=False)
    cfg = tmp_path / "small.cfg"
    cfg.write_text(SMALL + f"output_dir = {tmp_path / 'out'}\n")
    return cfg, tmp_path / "out"


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_gen_writes_traces(small):
    cfg, out = small
    assert main(["gen", str(cfg)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["bubblesort.trace", "queens.trace", "towers.trace", "workload.trace"]
    wl = read_trace_file(out / "workload.trace")
    solo = read_trace_file(out / "queens.trace")
    assert solo[0].pid == 1
    assert sum(1 for ev in wl if len(ev) == 2) == sum(
        len(read_trace_file(out / f"{n}.trace")) - 1 for n in ("queens", "towers", "bubblesort")
    )


def test_simulate_outputs_and_determinism(small):
    cfg, out = small
    assert main(["simulate", str(cfg)]) == 0
    names = ["series.csv", "per_process.csv", "switches.csv", "footprint.csv"]
    first = {n: (out / n).read_bytes() for n in names}
    assert main(["simulate", str(cfg)]) == 0
    assert {n: (out / n).read_bytes() for n in names} == first
    assert read_csv(out / "series.csv")[0] == ["index", "rate"]
    assert read_csv(out / "per_process.csv")[0] == ["pid", "branches", "mispredicts", "rate"]
    assert read_csv(out / "switches.csv")[0] == ["event", "from_pid", "to_pid", "observed_changes", "decision", "reset_count"]
    usage = [float(r[3]) for r in read_csv(out / "footprint.csv")[1:]]
    assert usage and all(0 <= u <= 1 for u in usage)


def test_compare_columns_and_baseline_matches_simulate(small):
    cfg, out = small
    assert main(["compare", str(cfg)]) == 0
    table = read_csv(out / "table.csv")
    assert table[0] == ["Benchmark", "Baseline", "CSAF", "AlwaysResetSel", "AlwaysResetFull"]
    assert [r[0] for r in table[1:]] == ["queens", "towers", "bubblesort"]
    assert read_csv(out / "differential.csv")[0] == ["index", "rate"]

    assert main(["simulate", str(cfg), "--set", "csaf.mode=baseline"]) == 0
    per = read_csv(out / "per_process.csv")[1:]
    assert [r[1] for r in table[1:]] == [f"{100 * int(m) / int(b):.3f}" for _, b, m, _ in per]
    assert (out / "series_baseline.csv").read_bytes() == (out / "series.csv").read_bytes()


def test_transient_outputs(small):
    cfg, out = small
    assert main(["transient", str(cfg)]) == 0
    summary = read_csv(out / "transient_summary.csv")
    assert summary[0] == ["size", "disturbance", "disturbances", "mean_peak", "max_peak"]
    assert [(r[0], r[1]) for r in summary[1:]] == [("16", "invert"), ("16", "reset"), ("64", "invert"), ("64", "reset")]
    assert (out / "transient_invert_64.csv").exists()


def test_transient_period_below_window_fails_cleanly(small):
    cfg, out = small
    assert main(["transient", str(cfg), "--set", "transient.period=50"]) == 1
    assert not out.exists() or not any(out.iterdir())


def test_bad_config_exit_code_and_no_files(small):
    cfg, out = small
    assert main(["simulate", str(cfg), "--set", "csaf.threshold=-1"]) == 1
    assert main(["simulate", str(cfg), "--set", "nope=1"]) == 1
    assert main(["simulate", str(cfg), "--set", "workload.sizes=queens:99"]) == 1
    assert not out.exists() or not any(out.iterdir())


def test_usage_errors_exit_one(small):
    cfg, _ = small
    assert main(["explode", str(cfg)]) == 1
    assert main([]) == 1


def test_io_errors_exit_two(small, tmp_path):
    cfg, out = small
    assert main(["simulate", str(tmp_path / "missing.cfg")]) == 2
    assert main(["simulate", str(cfg), "--set", "workload.source=trace", "--set", f"workload.trace={tmp_path / 'none.trace'}"]) == 2
    bad = tmp_path / "bad.trace"
    bad.write_text("C 1\nB zz T\n")
    assert main(["simulate", str(cfg), "--set", "workload.source=trace", "--set", f"workload.trace={bad}"]) == 2
    assert not out.exists() or not any(out.iterdir())


def test_simulate_from_generated_trace_matches(small):
    cfg, out = small
    assert main(["gen", str(cfg)]) == 0
    assert main(["simulate", str(cfg)]) == 0
    direct = (out / "series.csv").read_bytes()
    assert main(["simulate", str(cfg), "--set", "workload.source=trace", "--set", f"workload.trace={out / 'workload.trace'}"]) == 0
    assert (out / "series.csv").read_bytes() == direct


def test_env_overrides_output_dir(small, tmp_path, monkeypatch):
    cfg, out = small
    other = tmp_path / "elsewhere"
    monkeypatch.setenv("CSAFSIM_OUT", str(other))
    assert main(["simulate", str(cfg)]) == 0
    assert (other / "series.csv").exists() and not out.exists()


def test_adversarial_source(small):
    cfg, out = small
    sets = ["workload.source=adversarial", "workload.adversarial.length=2000", "predictor.family=bimodal"]
    args = ["compare", str(cfg)]
    for s in sets:
        args += ["--set", s]
    assert main(args) == 0
    assert [r[0] for r in read_csv(out / "table.csv")[1:]] == ["A", "B"]
