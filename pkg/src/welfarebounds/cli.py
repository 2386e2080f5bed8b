"""Command-line surface: ingest CSVs, build intervals, bound welfare, run studies.

Commands: ci, welfare, simulate, mc, diagnose.  All randomness flows from a
single --seed flag (mandatory for simulate/mc).  Exit codes: 0 success,
2 config error, 3 data error, 4 numerical error; empty confidence sets
produce EMPTY rows instead of failures.  Output files are plain CSV with one
leading '#' comment line naming units and levels; given the same config and
seed they are byte-identical across runs.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, fields

import numpy as np

from .confset import (
    DEFAULT_GRID_HI,
    GridSpec,
    bonferroni_share,
    cs_combined,
    cs_xi,
    shape_diagnostic,
    smooth_instrument,
)
from .errors import (
    ConfigError,
    DataError,
    EmptyConfidenceSet,
    NumericalError,
    ParseError,
    SchemaError,
    TooFewObservations,
    WelfareBoundsError,
)
from .regress import GoodSample, Interval
from .simulate import DgpConfig, child_seed, draw_sample, mc_table1, mc_table2
from .welfare import (
    POSITIVITY_FLOOR,
    ConstraintSet,
    WelfareQuery,
    bounds_box,
    max_constrained,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

# Spawn-path purpose codes for CLI-derived seeds (disjoint from simulate's).
_SEED_CS = 9
_SEED_JITTER = 8
_SEED_DIAG = 7


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return ""
    if isinstance(x, float):
        return "%.12g" % x
    return str(x)


@dataclass
class RunConfig:
    """Flat bag of run parameters; round-trips through `key = value` text files."""

    alpha: float = 0.05
    grid_nodes: int = 5000
    grid_lo: float = POSITIVITY_FLOOR
    grid_hi: float = DEFAULT_GRID_HI
    mode: str = "all"
    seed: int | None = None
    jitter: float = 0.0
    sum_to: float | None = None
    floor: float = POSITIVITY_FLOOR
    out: str = "out"
    data: str | None = None
    intervals: str | None = None
    query: str | None = None
    table: int = 1
    reps: int = 500
    k_goods: int = 10
    n_obs: int = 1000
    theta: str = "0.2,0.3,0.5"
    endogeneity: float | None = None
    ls_fit: str = "auto"

    def validate(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie strictly in (0, 1), got {self.alpha}")
        if self.grid_nodes < 2:
            raise ConfigError(f"grid-nodes must be at least 2, got {self.grid_nodes}")
        if self.grid_lo < 0:
            raise ConfigError(f"grid-lo must be nonnegative, got {self.grid_lo}")
        if not self.grid_hi > self.grid_lo:
            raise ConfigError(
                f"grid-hi ({self.grid_hi}) must exceed grid-lo ({self.grid_lo})"
            )
        if self.mode not in ("xi", "ls", "intersect", "all"):
            raise ConfigError(f"mode must be xi, ls, intersect, or all, got {self.mode!r}")
        if self.jitter < 0:
            raise ConfigError(f"jitter must be nonnegative, got {self.jitter}")
        if self.floor <= 0:
            raise ConfigError(f"floor must be positive, got {self.floor}")
        if self.table not in (1, 2):
            raise ConfigError(f"table must be 1 or 2, got {self.table}")
        if self.reps < 1:
            raise ConfigError(f"reps must be at least 1, got {self.reps}")
        if self.k_goods < 1:
            raise ConfigError(f"k must be at least 1, got {self.k_goods}")
        if self.n_obs < 3:
            raise ConfigError(f"n must be at least 3, got {self.n_obs}")
        if self.ls_fit not in ("auto", "ols", "tsls"):
            raise ConfigError(f"ls must be auto, ols, or tsls, got {self.ls_fit!r}")

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        converters = _config_converters()
        cfg = cls()
        try:
            with open(path, encoding="utf-8") as fh:
                lines = fh.readlines()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        for lineno, raw in enumerate(lines, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw.strip()!r}")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if key not in converters:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                setattr(cfg, key, converters[key](value))
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
        return cfg

    def to_file(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# welfarebounds run configuration\n")
            for f in fields(self):
                value = getattr(self, f.name)
                fh.write(f"{f.name} = {'none' if value is None else value}\n")


def _opt(conv):
    def parse(text: str):
        if text.lower() in ("", "none"):
            return None
        return conv(text)

    return parse


def _config_converters() -> dict:
    return {
        "alpha": float,
        "grid_nodes": int,
        "grid_lo": float,
        "grid_hi": float,
        "mode": str,
        "seed": _opt(int),
        "jitter": float,
        "sum_to": _opt(float),
        "floor": float,
        "out": str,
        "data": _opt(str),
        "intervals": _opt(str),
        "query": _opt(str),
        "table": int,
        "reps": int,
        "k_goods": int,
        "n_obs": int,
        "theta": str,
        "endogeneity": _opt(float),
        "ls_fit": str,
    }


def _read_rows(path: str) -> list[tuple[int, list[str]]]:
    """CSV rows with their 1-based line numbers; '#' comment lines skipped."""
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip() or raw.lstrip().startswith("#"):
                continue
            parsed = next(csv.reader([raw]))
            out.append((lineno, [cell.strip() for cell in parsed]))
    return out


def _cell_float(cell: str, lineno: int, col: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise ParseError(
            f"row {lineno}: column {col!r} value {cell!r} is not a number",
            row=lineno,
            col=col,
        ) from None


def ingest_csv(path: str, reject_log: list | None = None) -> list[GoodSample]:
    """Group data rows by good_id into GoodSamples, preserving file order.

    Required columns: good_id, price, quantity; optional: instrument.  Rows
    with nonpositive price or quantity are rejected and their line numbers
    appended to reject_log; a good left with fewer than 3 rows raises
    TooFewObservations.
    """
    rows = _read_rows(path)
    if not rows:
        raise SchemaError(f"{path}: no header row found")
    _, header = rows[0]
    names = [h.lower() for h in header]
    for required in ("good_id", "price", "quantity"):
        if required not in names:
            raise SchemaError(f"{path}: missing required column {required!r}")
    idx = {name: names.index(name) for name in names}
    has_z = "instrument" in names
    groups: dict[str, dict[str, list[float]]] = {}
    for lineno, cells in rows[1:]:
        if len(cells) != len(names):
            raise ParseError(
                f"row {lineno}: expected {len(names)} cells, got {len(cells)}",
                row=lineno,
            )
        gid = cells[idx["good_id"]]
        if not gid:
            raise ParseError(f"row {lineno}: empty good_id", row=lineno, col="good_id")
        price = _cell_float(cells[idx["price"]], lineno, "price")
        quantity = _cell_float(cells[idx["quantity"]], lineno, "quantity")
        if price <= 0 or quantity <= 0:
            if reject_log is not None:
                reject_log.append((lineno, "nonpositive price or quantity"))
            continue
        group = groups.setdefault(gid, {"price": [], "quantity": [], "instrument": []})
        group["price"].append(price)
        group["quantity"].append(quantity)
        if has_z:
            group["instrument"].append(
                _cell_float(cells[idx["instrument"]], lineno, "instrument")
            )
    samples = []
    for gid, cols in groups.items():
        if len(cols["price"]) < 3:
            raise TooFewObservations(
                f"good {gid!r}: only {len(cols['price'])} usable rows (need at least 3)"
            )
        samples.append(
            GoodSample(
                price=np.asarray(cols["price"]),
                quantity=np.asarray(cols["quantity"]),
                instrument=np.asarray(cols["instrument"]) if has_z else None,
                good_id=gid,
            )
        )
    if not samples:
        raise TooFewObservations(f"{path}: no usable data rows")
    return samples


def read_intervals_csv(path: str, mode: str | None) -> dict[str, Interval]:
    """Per-good intervals from a cmd_ci output file, optionally one method only."""
    rows = _read_rows(path)
    if not rows:
        raise SchemaError(f"{path}: no header row found")
    _, header = rows[0]
    names = [h.lower() for h in header]
    for required in ("good_id", "method", "lower", "upper", "level", "status"):
        if required not in names:
            raise SchemaError(f"{path}: missing required column {required!r}")
    idx = {name: names.index(name) for name in names}
    out: dict[str, Interval] = {}
    for lineno, cells in rows[1:]:
        method = cells[idx["method"]]
        if mode is not None and method != mode:
            continue
        gid = cells[idx["good_id"]]
        if gid in out:
            raise ConfigError(
                f"{path}: several rows for good {gid!r}; pass --mode to pick one method"
            )
        level = _cell_float(cells[idx["level"]], lineno, "level")
        if cells[idx["status"]] == "EMPTY":
            out[gid] = Interval.make_empty(level, method.upper())
        else:
            out[gid] = Interval(
                lower=_cell_float(cells[idx["lower"]], lineno, "lower"),
                upper=_cell_float(cells[idx["upper"]], lineno, "upper"),
                level=level,
                source=method.upper(),
            )
    if not out:
        raise DataError(f"{path}: no interval rows matched mode {mode!r}")
    return out


def read_query_csv(path: str, good_ids: list[str]) -> list[tuple[str, np.ndarray, np.ndarray]]:
    """Per-individual (delta, ystar) rows, in long or wide layout.

    Long: columns id, good_id, delta, ystar with one row per (individual,
    good).  Wide: columns id then K (delta, ystar) pairs in the good order
    of the data/intervals file.
    """
    rows = _read_rows(path)
    if not rows:
        raise SchemaError(f"{path}: no header row found")
    _, header = rows[0]
    names = [h.lower() for h in header]
    K = len(good_ids)
    if "good_id" in names:
        for required in ("id", "good_id", "delta", "ystar"):
            if required not in names:
                raise SchemaError(f"{path}: missing required column {required!r}")
        idx = {name: names.index(name) for name in names}
        per: dict[str, dict[str, tuple[float, float]]] = {}
        for lineno, cells in rows[1:]:
            ind = cells[idx["id"]]
            gid = cells[idx["good_id"]]
            if gid not in good_ids:
                raise DataError(f"row {lineno}: unknown good_id {gid!r}")
            per.setdefault(ind, {})[gid] = (
                _cell_float(cells[idx["delta"]], lineno, "delta"),
                _cell_float(cells[idx["ystar"]], lineno, "ystar"),
            )
        out = []
        for ind, entries in per.items():
            missing = [g for g in good_ids if g not in entries]
            if missing:
                raise DataError(f"individual {ind!r}: missing goods {missing}")
            delta = np.array([entries[g][0] for g in good_ids])
            ystar = np.array([entries[g][1] for g in good_ids])
            out.append((ind, delta, ystar))
        return out
    if names[0] != "id" or len(names) != 1 + 2 * K:
        raise SchemaError(
            f"{path}: wide layout needs columns id plus {K} (delta, ystar) pairs"
        )
    out = []
    for lineno, cells in rows[1:]:
        values = [
            _cell_float(cell, lineno, names[j + 1]) for j, cell in enumerate(cells[1:])
        ]
        delta = np.array(values[0::2])
        ystar = np.array(values[1::2])
        out.append((cells[0], delta, ystar))
    return out


def _write_csv(path: str, comment: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {comment}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])


def _apply_jitter(samples: list[GoodSample], cfg: RunConfig) -> list[GoodSample]:
    if cfg.jitter <= 0:
        return samples
    if cfg.seed is None:
        raise ConfigError("--jitter requires --seed for reproducible noise")
    out = []
    for i, s in enumerate(samples):
        if s.instrument is None:
            raise ConfigError("--jitter requires an instrument column")
        z = smooth_instrument(s.instrument, cfg.jitter, child_seed(cfg.seed, _SEED_JITTER, i))
        out.append(GoodSample(s.price, s.quantity, z, s.good_id))
    return out


def _require(value, flag: str):
    if value is None:
        raise ConfigError(f"{flag} is required for this command")
    return value


def _report_rejects(reject_log: list) -> None:
    for lineno, reason in reject_log:
        print(f"rejected row {lineno}: {reason}", file=sys.stderr)


def cmd_ci(cfg: RunConfig) -> int:
    """Per-good intervals in the requested mode(s) plus grid-profile dumps."""
    cfg.validate()
    reject_log: list = []
    samples = _apply_jitter(ingest_csv(_require(cfg.data, "--data"), reject_log), cfg)
    _report_rejects(reject_log)
    if cfg.ls_fit == "tsls" and any(s.instrument is None for s in samples):
        raise SchemaError("column 'instrument' is required for TSLS")
    K = len(samples)
    share = bonferroni_share(cfg.alpha, K)
    modes = ("xi", "ls", "intersect") if cfg.mode == "all" else (cfg.mode,)
    seed = cfg.seed if cfg.seed is not None else 0
    rows = []
    profiles = {}
    for i, s in enumerate(samples):
        s_seed = child_seed(seed, _SEED_CS, i)
        for m in modes:
            try:
                if m == "xi":
                    iv, prof = cs_xi(
                        s, share, GridSpec(cfg.grid_lo, cfg.grid_hi, cfg.grid_nodes), s_seed
                    )
                    profiles[s.good_id] = prof
                else:
                    iv = cs_combined(
                        s,
                        share,
                        grid_nodes=cfg.grid_nodes,
                        mode=m,
                        rng_seed=s_seed,
                        grid_lo=cfg.grid_lo,
                        grid_hi=cfg.grid_hi,
                        floor=cfg.floor,
                        ls_mode=cfg.ls_fit,
                    )
                rows.append([s.good_id, m, iv.lower, iv.upper, iv.level, "OK"])
            except EmptyConfidenceSet as exc:
                if exc.profile is not None:
                    profiles[s.good_id] = exc.profile
                level = exc.level if exc.level is not None else 1.0 - share
                rows.append([s.good_id, m, None, None, level, "EMPTY"])
    out_path = f"{cfg.out}_intervals.csv"
    _write_csv(
        out_path,
        f"theta confidence intervals in nominal price units; joint alpha = {_fmt(cfg.alpha)};"
        " 'level' is the per-good confidence level",
        ["good_id", "method", "lower", "upper", "level", "status"],
        rows,
    )
    print(f"wrote {out_path}")
    for gid, prof in profiles.items():
        prof_path = f"{cfg.out}_profile_{gid}.csv"
        _write_csv(
            prof_path,
            "normalized rank-dependence statistic by theta (nominal price units);"
            f" critical value = {_fmt(prof.critical)}",
            ["theta", "stat"],
            zip(prof.thetas, prof.stats),
        )
        print(f"wrote {prof_path}")
    return EXIT_OK


def _box_from_config(cfg: RunConfig) -> tuple[list[str], list[Interval]]:
    if cfg.intervals is not None:
        mode = None if cfg.mode == "all" else cfg.mode
        box_map = read_intervals_csv(cfg.intervals, mode)
        return list(box_map.keys()), list(box_map.values())
    reject_log: list = []
    samples = _apply_jitter(ingest_csv(_require(cfg.data, "--data or --intervals"), reject_log), cfg)
    _report_rejects(reject_log)
    if cfg.mode == "all":
        raise ConfigError("pick one --mode (xi, ls, or intersect) when computing from raw data")
    K = len(samples)
    share = bonferroni_share(cfg.alpha, K)
    seed = cfg.seed if cfg.seed is not None else 0
    box = []
    for i, s in enumerate(samples):
        try:
            box.append(
                cs_combined(
                    s,
                    share,
                    grid_nodes=cfg.grid_nodes,
                    mode=cfg.mode,
                    rng_seed=child_seed(seed, _SEED_CS, i),
                    grid_lo=cfg.grid_lo,
                    grid_hi=cfg.grid_hi,
                    floor=cfg.floor,
                    ls_mode=cfg.ls_fit,
                )
            )
        except EmptyConfidenceSet as exc:
            level = exc.level if exc.level is not None else 1.0 - share
            box.append(Interval.make_empty(level, "INTERSECT"))
    return [s.good_id for s in samples], box


def cmd_welfare(cfg: RunConfig) -> int:
    """Per-individual welfare-loss bounds, sorted ascending by the upper bound."""
    cfg.validate()
    good_ids, box = _box_from_config(cfg)
    queries = read_query_csv(_require(cfg.query, "--query"), good_ids)
    box_usable = not any(iv.empty for iv in box)
    results = []
    for ind, delta, ystar in queries:
        if not box_usable:
            results.append([ind, None, None, None, "EMPTY"])
            continue
        query = WelfareQuery(delta=delta, y_star=ystar, alpha=cfg.alpha)
        constraints = ConstraintSet(tuple(box), sum_to=cfg.sum_to, positivity_floor=cfg.floor)
        if cfg.sum_to is None:
            wb = bounds_box(constraints, query)
        else:
            wb = max_constrained(constraints, query)
        results.append([ind, wb.wl_min, wb.wl_max, wb.level, "OK"])
    results.sort(key=lambda r: (r[4] != "OK", r[2] if r[2] is not None else 0.0))
    rows = [[rank + 1] + r for rank, r in enumerate(results)]
    out_path = f"{cfg.out}_welfare.csv"
    _write_csv(
        out_path,
        "welfare-loss bounds per individual in units of the numeraire;"
        f" joint alpha = {_fmt(cfg.alpha)}; 'level' is the joint box level",
        ["rank", "id", "wl_min", "wl_max", "level", "status"],
        rows,
    )
    print(f"wrote {out_path}")
    return EXIT_OK


def _parse_theta(text: str) -> np.ndarray:
    try:
        theta = np.array([float(t) for t in text.split(",") if t.strip() != ""])
    except ValueError as exc:
        raise ConfigError(f"bad --theta list {text!r}: {exc}") from exc
    if theta.size == 0:
        raise ConfigError("--theta must list at least one value")
    return theta


def cmd_simulate(cfg: RunConfig) -> int:
    """Write one synthetic draw as an ingestible CSV."""
    cfg.validate()
    seed = _require(cfg.seed, "--seed")
    config = DgpConfig(
        theta=_parse_theta(cfg.theta), n=cfg.n_obs, seed=seed, endogeneity=cfg.endogeneity
    )
    samples = draw_sample(config)
    rows = []
    for s in samples:
        for i in range(s.n):
            rows.append([s.good_id, s.price[i], s.quantity[i], s.instrument[i]])
    out_path = f"{cfg.out}_data.csv"
    _write_csv(
        out_path,
        "synthetic demand draws; price and instrument in nominal units",
        ["good_id", "price", "quantity", "instrument"],
        rows,
    )
    print(f"wrote {out_path}")
    return EXIT_OK


def cmd_mc(cfg: RunConfig) -> int:
    """Run a Monte Carlo study and write its report tables."""
    cfg.validate()
    seed = _require(cfg.seed, "--seed")
    if cfg.table == 1:
        report = mc_table1(cfg.reps, seed)
    else:
        report = mc_table2(cfg.k_goods, cfg.reps, seed)
    iv_path = f"{cfg.out}_mc_intervals.csv"
    _write_csv(
        iv_path,
        "average interval endpoints (theta, nominal price units) over"
        f" {report.reps} replications; joint alpha = 0.1",
        ["n", "good_id", "theta_true", "avg_lower", "avg_upper", "avg_length", "coverage", "n_empty"],
        [
            [r.n, r.good_id, r.theta_true, r.avg_lower, r.avg_upper, r.avg_length, r.coverage, r.n_empty]
            for r in report.intervals
        ],
    )
    wl_path = f"{cfg.out}_mc_welfare.csv"
    wl_rows = [[r.n, r.label, r.value] for r in report.welfare]
    wl_rows += [[n, "joint_coverage", v] for n, v in sorted(report.joint_coverage.items())]
    _write_csv(
        wl_path,
        "welfare-loss figures in units of the numeraire; joint alpha = 0.1;"
        f" true loss = {_fmt(report.true_welfare_loss)}",
        ["n", "label", "value"],
        wl_rows,
    )
    print(f"wrote {iv_path}")
    print(f"wrote {wl_path}")
    print(report.interval_table())
    print(report.welfare_table())
    for stage, seconds in report.timings.items():
        print(f"timing {stage}: {seconds:.2f}s")
    for what, count in report.skipped.items():
        print(f"skipped {what}: {count}")
    return EXIT_OK


def cmd_diagnose(cfg: RunConfig) -> int:
    """Classify each good's confidence-set shape from its endpoint statistics."""
    cfg.validate()
    reject_log: list = []
    samples = _apply_jitter(ingest_csv(_require(cfg.data, "--data"), reject_log), cfg)
    _report_rejects(reject_log)
    seed = cfg.seed if cfg.seed is not None else 0
    rows = []
    for i, s in enumerate(samples):
        diag = shape_diagnostic(s, cfg.alpha, child_seed(seed, _SEED_DIAG, i))
        rows.append([s.good_id, diag.stat_at_zero, diag.stat_at_inf, diag.critical, diag.case_id])
    out_path = f"{cfg.out}_diagnostics.csv"
    _write_csv(
        out_path,
        f"confidence-set shape diagnostics at alpha = {_fmt(cfg.alpha)};"
        " stats are sqrt(n) * xi (dimensionless)",
        ["good_id", "stat_at_zero", "stat_at_inf", "critical", "case_id"],
        rows,
    )
    print(f"wrote {out_path}")
    return EXIT_OK


_COMMANDS = {
    "ci": cmd_ci,
    "welfare": cmd_welfare,
    "simulate": cmd_simulate,
    "mc": cmd_mc,
    "diagnose": cmd_diagnose,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="welfarebounds",
        description="Confidence bounds on individual-level welfare loss from demand data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    def add_common(p):
        p.add_argument("--config", default=None, help="key = value config file")
        p.add_argument("--alpha", type=float, default=S)
        p.add_argument("--seed", type=int, default=S)
        p.add_argument("--out", default=S, help="output path stem")

    def add_grid(p):
        p.add_argument("--grid-nodes", type=int, default=S, dest="grid_nodes")
        p.add_argument("--grid-lo", type=float, default=S, dest="grid_lo")
        p.add_argument("--grid-hi", type=float, default=S, dest="grid_hi")
        p.add_argument("--floor", type=float, default=S)

    p_ci = sub.add_parser("ci", help="per-good confidence intervals")
    add_common(p_ci)
    add_grid(p_ci)
    p_ci.add_argument("--data", default=S, help="input CSV (good_id,price,quantity[,instrument])")
    p_ci.add_argument("--mode", choices=["xi", "ls", "intersect", "all"], default=S)
    p_ci.add_argument("--jitter", type=float, default=S, help="instrument smoothing half-width")
    p_ci.add_argument("--ls", choices=["auto", "ols", "tsls"], default=S, dest="ls_fit")

    p_w = sub.add_parser("welfare", help="per-individual welfare-loss bounds")
    add_common(p_w)
    add_grid(p_w)
    p_w.add_argument("--data", default=S)
    p_w.add_argument("--intervals", default=S, help="intervals CSV written by `ci`")
    p_w.add_argument("--query", default=S, help="per-individual (delta, ystar) CSV")
    p_w.add_argument("--mode", choices=["xi", "ls", "intersect", "all"], default=S)
    p_w.add_argument("--jitter", type=float, default=S)
    p_w.add_argument("--sum-to", type=float, default=S, dest="sum_to")
    p_w.add_argument("--ls", choices=["auto", "ols", "tsls"], default=S, dest="ls_fit")

    p_s = sub.add_parser("simulate", help="write a synthetic demand CSV")
    add_common(p_s)
    p_s.add_argument("--theta", default=S, help="comma-separated true theta values")
    p_s.add_argument("--n", type=int, default=S, dest="n_obs")
    p_s.add_argument("--endogeneity", type=float, default=S)

    p_mc = sub.add_parser("mc", help="run a Monte Carlo study")
    add_common(p_mc)
    p_mc.add_argument("--table", type=int, choices=[1, 2], default=S,
                      help="1 = three-good study, 2 = many-goods study (needs --k)")
    p_mc.add_argument("--reps", type=int, default=S)
    p_mc.add_argument("--k", type=int, default=S, dest="k_goods")

    p_d = sub.add_parser("diagnose", help="confidence-set shape diagnostics")
    add_common(p_d)
    p_d.add_argument("--data", default=S)
    p_d.add_argument("--jitter", type=float, default=S)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.config is not None:
            cfg = RunConfig.from_file(args.config)
        else:
            cfg = RunConfig()
        for key, value in vars(args).items():
            if key in ("command", "config"):
                continue
            setattr(cfg, key, value)
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"OSError: {exc}", file=sys.stderr)
        return EXIT_DATA
    except EmptyConfidenceSet as exc:
        # Empty sets are reported, not fatal; commands normally absorb them.
        print(f"EmptyConfidenceSet: {exc}", file=sys.stderr)
        return EXIT_OK
    except NumericalError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except WelfareBoundsError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
