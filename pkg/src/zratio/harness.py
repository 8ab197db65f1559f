"""Experiment orchestration: replicated method comparisons, equal-budget
scans, standard-error calibration, CSV emission, and deterministic seeding.

An experiment spec names a distribution family, a kernel, a list of methods
(algorithm x direction x bridge settings), ladder sizes, run counts, and a
master seed.  Each method/replication pair is an independent simulation whose
random streams derive from (master seed, method index, replication, side,
run index), so results never depend on execution order or worker count.

Cost accounting counts exact endpoint draws and elementary kernel updates,
one unit each by default (``draw_cost_weight`` reweights draws).  A linked
run with n stages of length m costs m(n+1) updates plus one draw; the
matched annealed ladder therefore uses m(n+1) stages, which its one draw
plus m(n+1)-1 updates matches within one unit.
"""

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .bridges import GeometricBridge, IteratedOptimal, OptimalBridge
from .distributions import (DiscreteTable, GeneralizedNormal, NestedUniform,
                            ShiftedUniform)
from .errors import ConfigError
from .estimators import (LadderConfig, combine_bridged, geometric_ladder,
                         run_ais, run_lis, stage_bridges, summarize)
from .kernels import Independence, RandomWalkMetropolis, metropolis_kernel


@dataclass(frozen=True)
class MethodSpec:
    """One estimator variant: algorithm, direction, and bridge settings.

    ``stage_bridge`` applies to linked runs ("geometric", "optimal_true",
    "optimal_ones"); ``top_bridge`` applies to the bridged direction
    ("geometric", "optimal_true", "optimal_iterated").
    """

    algorithm: str
    direction: str
    stage_bridge: str = "geometric"
    top_bridge: str = "optimal_iterated"

    def __post_init__(self):
        if self.algorithm not in ("ais", "lis"):
            raise ConfigError(f"unknown algorithm: {self.algorithm!r}")
        if self.direction not in ("forward", "reverse", "bridged"):
            raise ConfigError(f"unknown direction: {self.direction!r}")
        if self.stage_bridge not in ("geometric", "optimal_true", "optimal_ones"):
            raise ConfigError(f"unknown stage bridge: {self.stage_bridge!r}")
        if self.top_bridge not in ("geometric", "optimal_true", "optimal_iterated"):
            raise ConfigError(f"unknown top bridge: {self.top_bridge!r}")

    @property
    def bridge_label(self):
        if self.direction == "bridged":
            if self.algorithm == "lis":
                return f"{self.stage_bridge}+{self.top_bridge}"
            return self.top_bridge
        if self.algorithm == "ais":
            return "none"
        return self.stage_bridge

    @property
    def label(self):
        return f"{self.algorithm}-{self.direction}-{self.bridge_label}"

    @staticmethod
    def parse(token):
        """Parse "ais:forward", "lis:geometric:reverse",
        "lis:optimal_true:bridged:optimal_iterated" and the like."""
        parts = [p.strip() for p in token.split(":")]
        if not parts or parts[0] not in ("ais", "lis"):
            raise ConfigError(f"bad method token: {token!r}")
        if parts[0] == "ais":
            if len(parts) == 2:
                return MethodSpec("ais", parts[1])
            if len(parts) == 3 and parts[1] == "bridged":
                return MethodSpec("ais", "bridged", top_bridge=parts[2])
            if len(parts) == 3:
                return MethodSpec("ais", parts[1])  # tolerated no-op bridge
            raise ConfigError(f"bad method token: {token!r}")
        if len(parts) == 3:
            return MethodSpec("lis", parts[2], stage_bridge=parts[1])
        if len(parts) == 4 and parts[2] == "bridged":
            return MethodSpec("lis", "bridged", stage_bridge=parts[1],
                              top_bridge=parts[3])
        raise ConfigError(f"bad method token: {token!r}")


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce an experiment from scratch."""

    family: str = "generalized_normal"
    s: float = 0.05
    t: float = 0.0
    q: float = 2.0
    p0: tuple = ()
    p1: tuple = ()
    kernel: str = "rwm"
    methods: tuple = (MethodSpec("lis", "forward"), MethodSpec("ais", "forward"))
    lis_n: int = 4
    lis_k: int = 50
    ais_n: int = 0          # 0 means cost-matched to the linked ladder
    m_runs: int = 20
    m_bar_runs: int = 0     # 0 means m_runs // 2 per side for bridged
    replications: int = 200
    master_seed: int = 20251108
    draw_cost_weight: float = 1.0
    scan_n_values: tuple = ()

    def budget(self):
        """Kernel updates per linked run: the cost constant the annealed
        ladder is matched to."""
        return self.lis_k * (self.lis_n + 1)

    def ais_stages(self):
        return self.ais_n if self.ais_n > 0 else self.budget()

    def bar_runs(self):
        return self.m_bar_runs if self.m_bar_runs > 0 else max(self.m_runs // 2, 2)

    def validate(self):
        if self.family not in ("generalized_normal", "nested_uniform",
                               "shifted_uniform", "discrete_table"):
            raise ConfigError(f"unknown family: {self.family!r}")
        if self.kernel not in ("rwm", "independence", "metropolis_table"):
            raise ConfigError(f"unknown kernel: {self.kernel!r}")
        if not self.methods:
            raise ConfigError("methods must be nonempty")
        if self.lis_n < 1 or self.lis_k < 0:
            raise ConfigError("lis_n must be >= 1 and lis_k >= 0")
        if self.m_runs < 2:
            raise ConfigError("m_runs must be at least 2")
        if self.replications < 1:
            raise ConfigError("replications must be positive")
        return self


def build_family(spec):
    if spec.family == "generalized_normal":
        return GeneralizedNormal(s=spec.s, t=spec.t, q=spec.q)
    if spec.family == "nested_uniform":
        return NestedUniform(s=spec.s)
    if spec.family == "shifted_uniform":
        return ShiftedUniform(t=spec.t)
    if spec.family == "discrete_table":
        if not spec.p0 or not spec.p1:
            raise ConfigError("discrete_table needs p0 and p1 weight lists")
        return DiscreteTable(spec.p0, spec.p1)
    raise ConfigError(f"unknown family: {spec.family!r}")


def build_kernel(spec, seq):
    if spec.kernel == "rwm":
        return RandomWalkMetropolis(seq)
    if spec.kernel == "independence":
        return Independence(seq)
    if spec.kernel == "metropolis_table":
        return metropolis_kernel(seq)
    raise ConfigError(f"unknown kernel: {spec.kernel!r}")


@dataclass
class ResultRow:
    """One method x replication outcome; fields are the CSV columns in
    order.  Reproducible from (spec, replication) alone."""

    method: str
    direction: str
    bridge: str
    n: int
    K: int
    M: int
    replication: int
    r_hat: float
    log_r_hat: float
    se_log: float
    zero_count: int
    squared_error_of_log: float
    calibration_flag: bool
    cost: float
    seed: int


CSV_COLUMNS = ["method", "direction", "bridge", "n", "K", "M", "replication",
               "r_hat", "log_r_hat", "se_log", "zero_count",
               "squared_error_of_log", "calibration_flag", "cost", "seed"]

AGGREGATE_COLUMNS = ["method", "direction", "bridge", "n", "K", "M",
                     "replications", "mse_log", "mse_se", "zero_fraction"]


def _rng_for(spec, method_index, replication, side, run_index):
    ss = np.random.SeedSequence(
        entropy=spec.master_seed,
        spawn_key=(method_index, replication, side, run_index))
    return np.random.default_rng(ss)


def _replication_seed(spec, method_index, replication):
    ss = np.random.SeedSequence(entropy=spec.master_seed,
                                spawn_key=(method_index, replication))
    return int(ss.generate_state(1)[0])


def _lis_config(spec, seq, kernel, method):
    etas = geometric_ladder(spec.lis_n)
    lengths = (spec.lis_k,) * (spec.lis_n + 1)
    if method.stage_bridge == "geometric":
        bridges = stage_bridges("geometric", etas, lengths)
    elif method.stage_bridge == "optimal_true":
        bridges = stage_bridges("optimal", etas, lengths, seq=seq)
    else:
        bridges = stage_bridges("optimal", etas, lengths)
    return LadderConfig(etas=etas, chain_lengths=lengths, bridges=bridges,
                        kernel=kernel)


def _ais_config(spec, kernel):
    stages = spec.ais_stages()
    etas = geometric_ladder(stages)
    return LadderConfig(etas=etas, chain_lengths=(0,) * (stages + 1),
                        bridges=GeometricBridge(), kernel=kernel)


def _top_bridge(method, seq):
    if method.top_bridge == "geometric":
        return GeometricBridge()
    if method.top_bridge == "optimal_true":
        return OptimalBridge(r=math.exp(seq.true_log_r()))
    return IteratedOptimal()


def run_replication(spec, method_index, replication):
    """Simulate one method for one replication and produce its row."""
    method = spec.methods[method_index]
    seq = build_family(spec)
    kernel = build_kernel(spec, seq)
    true_log_r = seq.true_log_r()

    if method.algorithm == "lis":
        config = _lis_config(spec, seq, kernel, method)
        ladder_n, ladder_k = spec.lis_n, spec.lis_k
    else:
        config = _ais_config(spec, kernel)
        ladder_n, ladder_k = spec.ais_stages(), 0
    runner = run_lis if method.algorithm == "lis" else run_ais

    cost = 0.0
    if method.direction == "bridged":
        m_side = spec.bar_runs()
        fwd, rev = [], []
        rev_config = replace(config, direction="reverse")
        for i in range(m_side):
            rec = runner(config, _rng_for(spec, method_index, replication, 0, i))
            fwd.append(rec)
            cost += rec.cost.total(spec.draw_cost_weight)
        for i in range(m_side):
            rec = runner(rev_config,
                         _rng_for(spec, method_index, replication, 1, i))
            rev.append(rec)
            cost += rec.cost.total(spec.draw_cost_weight)
        summary = combine_bridged(fwd, rev, _top_bridge(method, seq))
        log_est, se_log = summary.log_r_hat, summary.se_log_r
        r_est = summary.r_hat
        zero_count, m_total = summary.zero_count, summary.M
    else:
        if method.direction == "reverse":
            config = replace(config, direction="reverse")
        records = []
        for i in range(spec.m_runs):
            rec = runner(config, _rng_for(spec, method_index, replication, 0, i))
            records.append(rec)
            cost += rec.cost.total(spec.draw_cost_weight)
        summary = summarize(records)
        zero_count, m_total = summary.zero_count, summary.M
        if method.direction == "reverse":
            # the reverse runs estimate the reciprocal ratio
            log_est = -summary.log_r_hat
            r_est = math.inf if summary.r_hat == 0.0 else 1.0 / summary.r_hat
            log_est = math.inf if summary.r_hat == 0.0 else log_est
        else:
            log_est, r_est = summary.log_r_hat, summary.r_hat
        se_log = summary.se_log_r

    err = log_est - true_log_r
    sq_err = err * err if math.isfinite(log_est) else math.inf
    flagged = (not math.isfinite(log_est)) or (not math.isfinite(se_log)) \
        or abs(err) > 2.0 * se_log
    return ResultRow(
        method=method.label, direction=method.direction,
        bridge=method.bridge_label, n=ladder_n, K=ladder_k, M=m_total,
        replication=replication, r_hat=r_est, log_r_hat=log_est,
        se_log=se_log, zero_count=zero_count,
        squared_error_of_log=sq_err, calibration_flag=bool(flagged),
        cost=cost, seed=_replication_seed(spec, method_index, replication))


def _run_task(args):
    spec, method_index, replication = args
    return run_replication(spec, method_index, replication)


def run_experiment(spec, threads=1):
    """All methods at all replications, rows ordered by (method,
    replication).  ``threads`` > 1 farms replications out to worker
    processes; seeds derive from indices, so parallelism never changes any
    row."""
    spec.validate()
    tasks = [(spec, mi, rep)
             for mi in range(len(spec.methods))
             for rep in range(spec.replications)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_run_task, tasks, chunksize=8))
    else:
        rows = [_run_task(t) for t in tasks]
    return rows


def equal_budget_scan(spec, n_values=None, threads=1):
    """Linked runs at several stage counts under one update budget, plus a
    cost-matched annealed baseline.

    For each n the per-stage chain length is the budget split evenly,
    rounded to nearest with ties down; the annealed baseline uses the full
    budget as its stage count.  Rows are labeled by their n column.
    """
    spec.validate()
    n_values = tuple(n_values) if n_values else spec.scan_n_values
    if not n_values:
        raise ConfigError("scan needs n values (scan_n_values or argument)")
    lis_methods = [m for m in spec.methods if m.algorithm == "lis"]
    if not lis_methods:
        raise ConfigError("scan needs at least one lis method")
    budget = spec.budget()
    rows = []
    for n in n_values:
        m = math.ceil(budget / (n + 1) - 0.5)  # nearest, ties down
        if m < 1:
            raise ConfigError(f"budget {budget} cannot fund n={n}")
        sub = replace(spec, lis_n=int(n), lis_k=int(m),
                      methods=tuple(lis_methods))
        rows.extend(run_experiment(sub, threads=threads))
    baseline = replace(spec, ais_n=budget,
                       methods=(MethodSpec("ais", "forward"),))
    rows.extend(run_experiment(baseline, threads=threads))
    return rows


def calibration_report(rows):
    """Fraction of rows whose log estimate missed the truth by more than
    twice its standard error."""
    if not rows:
        raise ValueError("no rows to report on")
    return sum(1 for r in rows if r.calibration_flag) / len(rows)


@dataclass
class AggregateRow:
    """Per-method aggregate across replications: the figure-facing schema."""

    method: str
    direction: str
    bridge: str
    n: int
    K: int
    M: int
    replications: int
    mse_log: float
    mse_se: float
    zero_fraction: float


def aggregate_rows(rows):
    """Group rows by method and ladder shape; report the mean squared error
    of the log estimates with its own standard error across replications."""
    groups = {}
    for row in rows:
        key = (row.method, row.direction, row.bridge, row.n, row.K, row.M)
        groups.setdefault(key, []).append(row)
    out = []
    for key in sorted(groups):
        bunch = groups[key]
        errs = np.asarray([r.squared_error_of_log for r in bunch])
        reps = len(bunch)
        se = float(errs.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
        zeros = sum(r.zero_count for r in bunch)
        out.append(AggregateRow(
            method=key[0], direction=key[1], bridge=key[2], n=key[3],
            K=key[4], M=key[5], replications=reps,
            mse_log=float(errs.mean()), mse_se=se,
            zero_fraction=zeros / (key[5] * reps)))
    return out


# ---------------------------------------------------------------------------
# CSV emission (UTF-8, LF, header row, columns in schema order)

def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))  # round-trips; plain repr for numpy scalars
    return str(value)


def write_rows(path, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_format_value(getattr(row, c)) for c in CSV_COLUMNS])


def read_rows(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_COLUMNS:
            raise ConfigError(f"unexpected row CSV header: {header}")
        out = []
        for rec in reader:
            vals = dict(zip(CSV_COLUMNS, rec))
            out.append(ResultRow(
                method=vals["method"], direction=vals["direction"],
                bridge=vals["bridge"], n=int(vals["n"]), K=int(vals["K"]),
                M=int(vals["M"]), replication=int(vals["replication"]),
                r_hat=float(vals["r_hat"]),
                log_r_hat=float(vals["log_r_hat"]),
                se_log=float(vals["se_log"]),
                zero_count=int(vals["zero_count"]),
                squared_error_of_log=float(vals["squared_error_of_log"]),
                calibration_flag=vals["calibration_flag"] == "true",
                cost=float(vals["cost"]), seed=int(vals["seed"])))
    return out


def write_aggregate(path, aggregates):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(AGGREGATE_COLUMNS)
        for agg in aggregates:
            writer.writerow([_format_value(getattr(agg, c))
                             for c in AGGREGATE_COLUMNS])


def read_aggregate(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != AGGREGATE_COLUMNS:
            raise ConfigError(f"unexpected aggregate CSV header: {header}")
        out = []
        for rec in reader:
            vals = dict(zip(AGGREGATE_COLUMNS, rec))
            out.append(AggregateRow(
                method=vals["method"], direction=vals["direction"],
                bridge=vals["bridge"], n=int(vals["n"]), K=int(vals["K"]),
                M=int(vals["M"]), replications=int(vals["replications"]),
                mse_log=float(vals["mse_log"]), mse_se=float(vals["mse_se"]),
                zero_fraction=float(vals["zero_fraction"])))
    return out


# ---------------------------------------------------------------------------
# config file: flat typed key = value lines, '#' comments, unknown keys fail

def _parse_methods(text):
    return tuple(MethodSpec.parse(tok) for tok in text.split(",") if tok.strip())


def _parse_int_list(text):
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def _parse_float_list(text):
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def _parse_ais_n(text):
    return 0 if text.strip() == "auto" else int(text)


# key -> (parser, description).  Units: counts are dimensionless, the seed is
# a 64-bit integer, draw_cost_weight is budget units per exact draw.
CONFIG_SCHEMA = {
    "family": (str, "family kind: generalized_normal | nested_uniform | "
                    "shifted_uniform | discrete_table"),
    "s": (float, "scale/shrink factor (families with s)"),
    "t": (float, "total shift (families with t)"),
    "q": (float, "tail power >= 1 (generalized_normal)"),
    "p0": (_parse_float_list, "discrete_table endpoint weights at eta=0"),
    "p1": (_parse_float_list, "discrete_table endpoint weights at eta=1"),
    "kernel": (str, "kernel kind: rwm | independence | metropolis_table"),
    "methods": (_parse_methods, "comma list, e.g. lis:geometric:forward"),
    "lis_n": (int, "linked ladder stage count n"),
    "lis_k": (int, "linked per-stage chain length m"),
    "ais_n": (_parse_ais_n, "annealed stage count, or 'auto' to cost-match"),
    "m_runs": (int, "runs per estimate M"),
    "m_bar_runs": (int, "per-side runs for bridged estimates (0: M/2)"),
    "replications": (int, "independent replications per method"),
    "master_seed": (int, "64-bit master seed"),
    "draw_cost_weight": (float, "budget units charged per exact draw"),
    "scan_n_values": (_parse_int_list, "stage counts for equal-budget scans"),
}


def parse_config_text(text):
    """Parse the flat key = value format into an ExperimentSpec.

    Unknown keys are errors; values are typed per ``CONFIG_SCHEMA``.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in CONFIG_SCHEMA:
            raise ConfigError(f"line {lineno}: unknown config key: {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key: {key!r}")
        parser = CONFIG_SCHEMA[key][0]
        try:
            values[key] = parser(value.strip())
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}")
    return ExperimentSpec(**values).validate()


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())
