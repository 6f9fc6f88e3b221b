import statistics

import pytest

from famdiff.bench import (
    BENCH_HEADER,
    KERNEL_HEADER,
    BenchPlan,
    BenchRow,
    _median_iqr,
    _mode_label,
    append_bench_csv,
    bench_config,
    bench_csv,
    bench_kernel_backends,
    bench_mix_paths,
    kernel_csv,
    require_fine_timer,
    run_plan,
    thread_cap,
)
from famdiff.errors import BenchError, ParameterError


def tiny_plan(**kw):
    base = dict(
        sizes=((8, 8, 2, 2),),
        modes=(("frequency_modulation", "off"),),
        steps=5,
        repeats=3,
        warmup=1,
    )
    base.update(kw)
    return BenchPlan(**base)


def test_fine_timer_available_here():
    require_fine_timer()


def test_thread_cap_env(monkeypatch):
    monkeypatch.delenv("FAMDIFF_THREADS", raising=False)
    assert thread_cap(4) == 4
    monkeypatch.setenv("FAMDIFF_THREADS", "2")
    assert thread_cap(4) == 2
    assert thread_cap(1) == 1
    monkeypatch.setenv("FAMDIFF_THREADS", "0")
    assert thread_cap(4) == 1


def test_plan_validation():
    with pytest.raises(ParameterError):
        tiny_plan(repeats=2)
    with pytest.raises(ParameterError):
        tiny_plan(warmup=0)
    with pytest.raises(ParameterError):
        tiny_plan(sizes=())


def test_median_iqr_matches_statistics():
    samples = [5, 1, 9, 3, 7, 11, 2]
    med, iqr = _median_iqr(samples)
    assert med == int(statistics.median(samples))
    q1, _, q3 = statistics.quantiles(samples, n=4, method="inclusive")
    assert iqr == int(q3 - q1)


def test_mode_labels():
    assert _mode_label("none", "off") == "none"
    assert _mode_label("frequency_modulation", "off") == "fm"
    assert _mode_label("skip_residual", "off") == "skip"
    assert _mode_label("frequency_modulation", "modulate") == "fm+am-modulate"


def test_bench_config_row():
    # T defaults to 1000, so 5 steps divide evenly via stride 200
    row = bench_config(tiny_plan(), (8, 8, 2, 2), ("frequency_modulation", "off"))
    assert row.size == "8x8" and row.scale == "2x2" and row.mode == "fm"
    assert row.steps == 5 and row.calls == 5
    assert row.median_ns > 0 and row.iqr_ns >= 0


def test_run_plan_sequential_and_parallel(monkeypatch):
    plan = tiny_plan(modes=(("none", "off"), ("frequency_modulation", "off")))
    rows = run_plan(plan)
    assert [r.mode for r in rows] == ["none", "fm"]
    monkeypatch.setenv("FAMDIFF_THREADS", "2")
    rows_par = run_plan(tiny_plan(parallel=4))
    assert len(rows_par) == 1


def test_bench_csv_layout():
    row = BenchRow("8x8", "2x2", "fm", 5, 1000, 10, 5)
    text = bench_csv([row])
    lines = text.strip().split("\n")
    assert lines[0] == "# famdiff-bench-v1"
    assert lines[1] == BENCH_HEADER
    assert lines[2] == "8x8,2x2,fm,5,1000,10,5"
    noisy = bench_csv([row], parallel=3)
    assert "parallel=3" in noisy.split("\n")[1]


def test_append_refuses_other_schema(tmp_path):
    row = BenchRow("8x8", "2x2", "fm", 5, 1000, 10, 5)
    path = tmp_path / "bench.csv"
    append_bench_csv(path, [row])
    append_bench_csv(path, [row])
    lines = path.read_text().strip().split("\n")
    assert len(lines) == 4 and lines[2] == lines[3]
    alien = tmp_path / "other.csv"
    alien.write_text("# some-other-schema\n")
    with pytest.raises(BenchError):
        append_bench_csv(alien, [row])


def test_mix_path_microbench_rows():
    rows = bench_mix_paths(size=(1, 16, 16), repeats=3)
    names = [r[0] for r in rows]
    assert names == ["fm_mix", "fm_mix_conv"]
    assert all(r[3] > 0 for r in rows)


def test_kernel_bench_rows_and_csv():
    rows = bench_kernel_backends(repeats=3)
    backends = {r[2] for r in rows}
    assert "numpy" in backends
    text = kernel_csv(rows)
    lines = text.strip().split("\n")
    assert lines[0] == "# famdiff-kernel-bench-v1"
    assert lines[1] == KERNEL_HEADER
    assert len(lines) == 2 + len(rows)
