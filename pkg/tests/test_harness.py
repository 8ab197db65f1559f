import hashlib
import json
import math

import pytest

from zratio import ConfigError
from zratio.harness import (AGGREGATE_COLUMNS, CSV_COLUMNS, ExperimentSpec,
                            MethodSpec, ResultRow, aggregate_rows,
                            calibration_report, equal_budget_scan,
                            parse_config_text, read_aggregate, read_rows,
                            run_experiment, run_replication, write_aggregate,
                            write_rows)

BASE_CONFIG = """
# desk-scale comparison
family = generalized_normal
s = 0.05
t = 0.0
q = 10.0
kernel = rwm
methods = lis:geometric:forward, ais:forward
lis_n = 4
lis_k = 50
m_runs = 20
replications = 3
master_seed = 77
"""


def tiny_spec(**overrides):
    base = dict(family="nested_uniform", s=0.3, kernel="independence",
                methods=(MethodSpec("lis", "forward"),
                         MethodSpec("ais", "forward")),
                lis_n=2, lis_k=4, m_runs=4, replications=3, master_seed=11)
    base.update(overrides)
    return ExperimentSpec(**base)


class TestConfigParsing:
    def test_round_trip_of_reference_config(self):
        spec = parse_config_text(BASE_CONFIG)
        assert spec.family == "generalized_normal"
        assert spec.q == 10.0
        assert spec.methods[0] == MethodSpec("lis", "forward", "geometric")
        assert spec.methods[1] == MethodSpec("ais", "forward")
        assert spec.replications == 3

    def test_unknown_key_is_named(self):
        with pytest.raises(ConfigError, match="walrus"):
            parse_config_text("walrus = 7")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config_text("s = 0.1\ns = 0.2")

    def test_bad_value_reports_line(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config_text("lis_n = many")

    def test_method_tokens(self):
        assert MethodSpec.parse("ais:bridged:geometric") == MethodSpec(
            "ais", "bridged", top_bridge="geometric")
        assert MethodSpec.parse("lis:optimal_true:reverse") == MethodSpec(
            "lis", "reverse", stage_bridge="optimal_true")
        assert MethodSpec.parse(
            "lis:geometric:bridged:optimal_iterated") == MethodSpec(
            "lis", "bridged", "geometric", "optimal_iterated")
        with pytest.raises(ConfigError):
            MethodSpec.parse("smc:forward")

    def test_discrete_family_from_config(self):
        spec = parse_config_text(
            "family = discrete_table\np0 = 1, 2\np1 = 2, 1\n"
            "kernel = metropolis_table\nmethods = lis:geometric:forward\n"
            "lis_n = 1\nlis_k = 2\nm_runs = 4\nreplications = 1")
        row = run_replication(spec, 0, 0)
        assert math.isfinite(row.log_r_hat)


class TestDeterminism:
    def test_rows_reproducible_from_indices(self):
        spec = tiny_spec()
        again = run_replication(spec, 1, 2)
        rows = run_experiment(spec)
        match = [r for r in rows
                 if r.method == again.method and r.replication == 2]
        assert match[0] == again

    def test_thread_count_never_changes_rows(self):
        spec = tiny_spec(replications=4)
        assert run_experiment(spec, threads=1) == run_experiment(spec, threads=3)

    def test_rerun_is_byte_identical(self, tmp_path):
        spec = tiny_spec()
        digests = []
        for name in ("a.csv", "b.csv"):
            path = tmp_path / name
            write_rows(path, run_experiment(spec))
            digests.append(hashlib.sha256(path.read_bytes()).hexdigest())
        assert digests[0] == digests[1]


class TestCostAccounting:
    def test_lis_and_ais_costs_match_instrumented_counts(self):
        # positive-density family: no zero-estimate short circuits, so the
        # instrumented counters equal the nominal ladder cost
        spec = tiny_spec(replications=1, family="generalized_normal",
                         s=0.5, q=2.0, kernel="rwm")
        rows = run_experiment(spec)
        by_method = {r.method: r for r in rows}
        lis_cost = spec.m_runs * (1 + spec.lis_k * (spec.lis_n + 1))
        ais_cost = spec.m_runs * (1 + spec.budget() - 1)
        assert by_method["lis-forward-geometric"].cost == lis_cost
        assert by_method["ais-forward-none"].cost == ais_cost
        assert abs(lis_cost - ais_cost) == spec.m_runs  # one unit per run

    def test_draw_weight_knob(self):
        light = tiny_spec(replications=1, draw_cost_weight=0.0)
        row = run_experiment(light)[0]
        assert row.cost == light.m_runs * light.lis_k * (light.lis_n + 1)


class TestRows:
    def test_trivial_identical_endpoints_row(self):
        spec = ExperimentSpec(family="generalized_normal", s=1.0, t=0.0, q=2.0,
                              kernel="rwm",
                              methods=(MethodSpec("lis", "forward"),),
                              lis_n=2, lis_k=3, m_runs=4, replications=1)
        row = run_replication(spec, 0, 0)
        assert row.log_r_hat == 0.0
        assert row.squared_error_of_log == 0.0
        assert row.calibration_flag is False

    def test_reverse_direction_inverts_the_estimate(self):
        spec = tiny_spec(methods=(MethodSpec("lis", "forward"),
                                  MethodSpec("lis", "reverse")))
        rows = run_experiment(spec)
        assert {r.direction for r in rows} == {"forward", "reverse"}
        for row in rows:
            if math.isfinite(row.log_r_hat):
                assert row.squared_error_of_log == pytest.approx(
                    (row.log_r_hat - math.log(0.3)) ** 2)

    def test_bridged_method_runs_both_sides(self):
        spec = tiny_spec(methods=(MethodSpec("lis", "bridged",
                                             top_bridge="optimal_iterated"),),
                         m_runs=6, m_bar_runs=3, replications=1)
        row = run_replication(spec, 0, 0)
        assert row.M == 6  # three runs per side
        assert row.method == "lis-bridged-geometric+optimal_iterated"


class TestScan:
    def test_budget_split_rounds_ties_down(self):
        spec = tiny_spec(family="generalized_normal", s=0.05, q=10.0,
                         kernel="rwm", lis_n=4, lis_k=50,
                         methods=(MethodSpec("lis", "forward"),
                                  MethodSpec("ais", "forward")),
                         m_runs=2, replications=1)
        rows = equal_budget_scan(spec, n_values=(4, 9, 19, 39))
        pairs = {(r.n, r.K) for r in rows if r.method.startswith("lis")}
        assert pairs == {(4, 50), (9, 25), (19, 12), (39, 6)}
        baseline = [r for r in rows if r.method.startswith("ais")]
        assert baseline and all(r.n == 250 for r in baseline)

    def test_single_n_reduces_to_run_experiment(self):
        spec = tiny_spec(methods=(MethodSpec("lis", "forward"),))
        scan_rows = equal_budget_scan(spec, n_values=(spec.lis_n,))
        plain = run_experiment(spec)
        lis_rows = [r for r in scan_rows if r.method.startswith("lis")]
        assert lis_rows == plain

    def test_infeasible_budget_rejected(self):
        spec = tiny_spec(lis_n=1, lis_k=1)  # budget 2
        with pytest.raises(ConfigError):
            equal_budget_scan(spec, n_values=(11,))


class TestCalibration:
    @staticmethod
    def _row(err, se):
        return ResultRow(method="m", direction="forward", bridge="none",
                         n=1, K=1, M=2, replication=0, r_hat=1.0,
                         log_r_hat=err, se_log=se, zero_count=0,
                         squared_error_of_log=err * err,
                         calibration_flag=abs(err) > 2 * se, cost=0.0, seed=0)

    def test_zero_error_rows(self):
        rows = [self._row(0.0, 1.0) for _ in range(10)]
        assert calibration_report(rows) == 0.0

    def test_gaussian_errors_with_exact_se(self, rng):
        rows = [self._row(e, 1.0) for e in rng.standard_normal(10_000)]
        want = 2 * (1 - 0.9772498680518208)  # two-sided normal tail at 2
        se = math.sqrt(want * (1 - want) / len(rows))
        assert abs(calibration_report(rows) - want) < 3.5 * se


class TestCsv:
    def test_row_round_trip(self, tmp_path):
        rows = run_experiment(tiny_spec())
        path = tmp_path / "rows.csv"
        write_rows(path, rows)
        assert read_rows(path) == rows
        header = path.read_text().splitlines()[0]
        assert header == ",".join(CSV_COLUMNS)

    def test_aggregate_round_trip(self, tmp_path):
        aggs = aggregate_rows(run_experiment(tiny_spec()))
        path = tmp_path / "agg.csv"
        write_aggregate(path, aggs)
        assert read_aggregate(path) == aggs
        header = path.read_text().splitlines()[0]
        assert header == ",".join(AGGREGATE_COLUMNS)

    def test_lf_line_endings(self, tmp_path):
        path = tmp_path / "rows.csv"
        write_rows(path, run_experiment(tiny_spec(replications=1)))
        assert b"\r" not in path.read_bytes()

    def test_schema_mismatch_detected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("method,oops\nx,1\n")
        with pytest.raises(ConfigError):
            read_rows(path)


class TestCli:
    def test_experiment_and_estimate_commands(self, tmp_path, capsys):
        from zratio.cli import main
        spec_path = tmp_path / "spec.txt"
        spec_path.write_text(
            "family = nested_uniform\ns = 0.3\nkernel = independence\n"
            "methods = lis:geometric:forward\nlis_n = 2\nlis_k = 4\n"
            "m_runs = 4\nreplications = 2\nmaster_seed = 5\n")
        out = tmp_path / "rows.csv"
        assert main(["experiment", "--spec", str(spec_path),
                     "--out", str(out)]) == 0
        assert len(read_rows(out)) == 2
        assert (tmp_path / "rows_aggregate.csv").exists()
        capsys.readouterr()
        assert main(["estimate", "--spec", str(spec_path)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["method"] == "lis-forward-geometric"
        assert "true_log_r" in payload

    def test_oracle_command(self, capsys):
        from zratio.cli import main
        assert main(["oracle", "--family", "nested", "--s", "0.1",
                     "--n", "2", "--m", "200"]) == 0
        payload = json.loads(capsys.readouterr().out)
        quantities = {p["quantity"]: p["value"] for p in payload}
        assert quantities["OptimalN"] == 2.0
        assert quantities["ZeroProbAIS"] == pytest.approx(0.9)
        assert quantities["LogVarLIS"] == pytest.approx(
            2 * (math.sqrt(10) - 1) / 201)

    def test_validate_command(self, capsys):
        from zratio.cli import main
        assert main(["validate"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out

    def test_estimate_rejects_multi_method_spec(self, tmp_path, capsys):
        from zratio.cli import main
        spec_path = tmp_path / "spec.txt"
        spec_path.write_text(
            "family = nested_uniform\ns = 0.3\nkernel = independence\n"
            "methods = lis:geometric:forward, ais:forward\n"
            "lis_n = 2\nlis_k = 4\nm_runs = 4\nreplications = 1\n")
        assert main(["estimate", "--spec", str(spec_path)]) == 2
