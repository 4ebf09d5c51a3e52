"""Command-line front end: analytic curves, simulation sweeps, validation.

Subcommands
    analytic   closed-form BER over a (modulation, r, gamma) grid
    simulate   Monte Carlo BER over the full grid, with confidence intervals
    validate   analytic + simulation side by side, coverage/gap/slope summary
    plotdata   split a result CSV into per-curve two-column files

Sweeps are configured from a JSON file (--spec) and/or flags; flags
override the file. All dB-to-linear conversions happen here at the
boundary; the library itself works in linear units. The imbalance
convention is r = (RS-UE SNR) / (BS-UE SNR), so r > 1 means the relay
link is the stronger one; the error-rate analysis is symmetric under
r <-> 1/r.

Exit codes: 0 success, 1 usage error, 2 runtime/numeric error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass

from . import analytic
from .montecarlo import (
    DEFAULT_MAX_BITS,
    DEFAULT_MIN_ERRORS,
    SweepSpec,
    analytic_ber,
    run_sweep,
    sweep_cells,
)
from .ostbc import modulation_by_name

__all__ = [
    "CSV_HEADER",
    "ValidationReport",
    "main",
]

CSV_HEADER = [
    "scheme",
    "modulation",
    "r_db",
    "beta",
    "snr_db",
    "ber_analytic",
    "ber_sim",
    "ci_lo",
    "ci_hi",
    "bits",
    "errors",
    "seed",
]

WORKERS_ENV = "COOP_OSTBC_WORKERS"
ANALYTIC_MODULATIONS = ("BPSK", "QPSK")
GAP_TARGET_BER = 1e-2
GAP_R_DB = (0.0, 10.0)
SLOPE_GAMMA_DB = (40.0, 45.0, 50.0)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse failures to exit code 1
        raise UsageError(message)


def _fmt(v: float) -> str:
    return f"{v:g}"


def _fmt_prob(p: float | None) -> str:
    return "" if p is None else f"{p:.12e}"


def _parse_float_list(text: str) -> list[float]:
    """Comma-separated floats; a start:stop:step token expands inclusively."""
    values: list[float] = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if ":" in token:
            parts = token.split(":")
            if len(parts) != 3:
                raise UsageError(f"bad range {token!r}, expected start:stop:step")
            start, stop, step = (float(p) for p in parts)
            if step <= 0:
                raise UsageError(f"range step must be > 0 in {token!r}")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            if count < 1:
                raise UsageError(f"empty range {token!r}")
            values.extend(start + i * step for i in range(count))
        else:
            values.append(float(token))
    return values


def _load_spec_file(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad JSON in {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"spec file {path} must hold a JSON object")
    return data


def _resolve_workers(args, filedata: dict) -> int:
    if args.workers is not None:
        return args.workers
    if "workers" in filedata:
        return int(filedata["workers"])
    env = os.environ.get(WORKERS_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    return 1


def _build_spec(args, require_gamma: bool = True) -> SweepSpec:
    """Merge JSON file and flags (flags win) into a validated SweepSpec."""
    filedata = _load_spec_file(args.spec) if args.spec else {}

    def pick(flag_value, key, default):
        if flag_value is not None:
            return flag_value
        return filedata.get(key, default)

    schemes = pick(args.scheme, "schemes", ["alamouti_2x1"])
    modulations = pick(args.modulation, "modulations", ["QPSK"])
    gamma_db = [float(g) for g in pick(args.gamma_db, "gamma_db", [])]
    r_db = [float(r) for r in pick(args.r_db, "r_db", [0.0])]
    beta = [float(b) for b in pick(args.beta, "beta", [0.0])]
    seed = int(pick(args.seed, "seed", 1))
    min_errors = int(pick(args.min_errors, "min_errors", DEFAULT_MIN_ERRORS))
    max_bits = int(pick(args.max_bits, "max_bits", DEFAULT_MAX_BITS))
    output = pick(args.output, "output", None)

    if isinstance(schemes, str):
        schemes = [schemes]
    if isinstance(modulations, str):
        modulations = [modulations]
    if require_gamma and not gamma_db:
        raise UsageError("no SNR grid given; set --gamma-db or 'gamma_db' in the spec file")
    if gamma_db != sorted(gamma_db) or len(set(gamma_db)) != len(gamma_db):
        print(
            "warning: SNR grid was not strictly increasing; normalizing",
            file=sys.stderr,
        )
    try:
        return SweepSpec(
            schemes=tuple(schemes),
            modulations=tuple(modulations),
            gamma_db=tuple(gamma_db),
            r_db=tuple(r_db),
            beta=tuple(beta),
            seed=seed,
            min_errors=min_errors,
            max_bits=max_bits,
            workers=_resolve_workers(args, filedata),
            output_path=output,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _write_csv(path: str | None, rows: list[list[str]]) -> None:
    """Write header + rows; on failure remove the partial file."""
    if path is None:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        writer.writerows(rows)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            writer.writerows(rows)
    except OSError:
        try:
            os.remove(path)
        except OSError:
            pass
        raise


# --- analytic ----------------------------------------------------------------


def _check_analytic_grid(spec: SweepSpec) -> None:
    bad_mods = [m for m in spec.modulations if m.upper() not in ANALYTIC_MODULATIONS]
    if bad_mods:
        raise UsageError(
            f"no closed form for {', '.join(bad_mods)}; use 'simulate' for it"
        )
    if any(b != 0.0 for b in spec.beta):
        raise UsageError(
            "no closed form under channel estimation errors (beta > 0); "
            "use 'simulate' for that regime"
        )
    if any(s != "alamouti_2x1" for s in spec.schemes):
        raise UsageError(
            "the closed form covers the alamouti_2x1 scheme only; "
            "use 'simulate' for ostbc_4x2"
        )


def cmd_analytic(args) -> int:
    spec = _build_spec(args)
    _check_analytic_grid(spec)
    rows = []
    for scheme, mod_name, r_db, beta, gamma_db in sweep_cells(spec):
        mod = modulation_by_name(mod_name)
        pe = analytic_ber(scheme, mod, r_db, beta, gamma_db)
        rows.append(
            [
                scheme,
                mod_name,
                _fmt(r_db),
                _fmt(beta),
                _fmt(gamma_db),
                _fmt_prob(pe),
                "",
                "",
                "",
                "",
                "",
                "",
            ]
        )
    _write_csv(spec.output_path, rows)
    return 0


# --- simulate ----------------------------------------------------------------


def _result_rows(result) -> list[list[str]]:
    rows = []
    for row in result.rows:
        est = row.estimate
        rows.append(
            [
                row.scheme,
                row.modulation,
                _fmt(row.r_db),
                _fmt(row.beta),
                _fmt(row.gamma_db),
                _fmt_prob(row.ber_analytic),
                _fmt_prob(est.ber),
                _fmt_prob(est.ci_lo),
                _fmt_prob(est.ci_hi),
                str(est.bits),
                str(est.errors),
                str(est.seed),
            ]
        )
    return rows


def cmd_simulate(args) -> int:
    spec = _build_spec(args)
    result = run_sweep(spec)
    _write_csv(spec.output_path, _result_rows(result))
    return 0


# --- validate ----------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    """Per-point coverage of the closed form plus figure-level summaries."""

    rows: tuple  # SweepRow
    flags: tuple  # bool per row with an analytic value
    coverage: float
    gaps_db: dict  # modulation -> gap in dB at the target BER, or None
    slopes: dict  # (modulation, r_db) -> fitted high-SNR slope

    def render_text(self) -> str:
        lines = ["point-by-point check (analytic value inside the simulated 95% CI):"]
        flag_iter = iter(self.flags)
        for row in self.rows:
            if row.ber_analytic is None:
                continue
            est = row.estimate
            ok = next(flag_iter)
            lines.append(
                f"  {row.modulation:>5s} r={row.r_db:g}dB snr={row.gamma_db:g}dB  "
                f"analytic={row.ber_analytic:.3e}  sim={est.ber:.3e} "
                f"[{est.ci_lo:.3e}, {est.ci_hi:.3e}]  "
                f"{'pass' if ok else 'FAIL'}"
            )
        lines.append(f"coverage: {self.coverage:.3f}")
        for mod, gap in sorted(self.gaps_db.items()):
            target = f"{GAP_TARGET_BER:g}"
            if gap is None:
                lines.append(
                    f"{mod}: SNR gap at BER {target} between "
                    f"r={GAP_R_DB[0]:g} dB and r={GAP_R_DB[1]:g} dB: not computable "
                    "on this grid"
                )
            else:
                lines.append(
                    f"{mod}: SNR gap at BER {target} between "
                    f"r={GAP_R_DB[0]:g} dB and r={GAP_R_DB[1]:g} dB: {gap:.2f} dB"
                )
        for (mod, r_db), slope in sorted(self.slopes.items()):
            lines.append(f"{mod} r={r_db:g} dB: high-SNR diversity slope {slope:.3f}")
        return "\n".join(lines)


def snr_db_at_ber(mod_name: str, r_db: float, target: float, gamma_db_grid) -> float | None:
    """Where the analytic curve crosses ``target``, by log-linear interpolation."""
    mod = modulation_by_name(mod_name)
    grid = sorted(gamma_db_grid)
    pes = [analytic_ber("alamouti_2x1", mod, r_db, 0.0, g) for g in grid]
    for i in range(1, len(grid)):
        hi_pe, lo_pe = pes[i - 1], pes[i]
        if hi_pe >= target >= lo_pe:
            if hi_pe == lo_pe:
                return grid[i]
            frac = (math.log10(hi_pe) - math.log10(target)) / (
                math.log10(hi_pe) - math.log10(lo_pe)
            )
            return grid[i - 1] + frac * (grid[i] - grid[i - 1])
    return None


def imbalance_gap_db(mod_name: str, gamma_db_grid) -> float | None:
    """SNR penalty of r = 10 dB relative to r = 0 dB at the target BER."""
    base = snr_db_at_ber(mod_name, GAP_R_DB[0], GAP_TARGET_BER, gamma_db_grid)
    skew = snr_db_at_ber(mod_name, GAP_R_DB[1], GAP_TARGET_BER, gamma_db_grid)
    if base is None or skew is None:
        return None
    return skew - base


def build_validation_report(result) -> ValidationReport:
    flags = []
    for row in result.rows:
        if row.ber_analytic is None:
            continue
        est = row.estimate
        flags.append(est.ci_lo <= row.ber_analytic <= est.ci_hi)
    coverage = sum(flags) / len(flags) if flags else float("nan")
    gaps = {
        mod: imbalance_gap_db(modulation_by_name(mod).name, result.spec.gamma_db)
        for mod in result.spec.modulations
    }
    slopes = {}
    for mod_name in result.spec.modulations:
        mod = modulation_by_name(mod_name)
        for r_db in result.spec.r_db:
            pts = [
                (10.0 ** (g / 10.0), analytic_ber("alamouti_2x1", mod, r_db, 0.0, g))
                for g in SLOPE_GAMMA_DB
            ]
            slopes[(mod.name, r_db)] = analytic.diversity_slope(pts)
    return ValidationReport(
        rows=result.rows,
        flags=tuple(flags),
        coverage=coverage,
        gaps_db=gaps,
        slopes=slopes,
    )


def cmd_validate(args) -> int:
    spec = _build_spec(args)
    bad_mods = [m for m in spec.modulations if m.upper() not in ANALYTIC_MODULATIONS]
    if bad_mods:
        raise UsageError(
            f"validate compares against the closed form; {', '.join(bad_mods)} "
            "has none (use 'simulate')"
        )
    if 0.0 not in spec.beta:
        raise UsageError("validate needs beta = 0 rows to compare with the closed form")
    if any(s != "alamouti_2x1" for s in spec.schemes):
        raise UsageError("validate covers the alamouti_2x1 scheme only")
    result = run_sweep(spec)
    report = build_validation_report(result)
    _write_csv(spec.output_path, _result_rows(result))
    print(report.render_text())
    return 0


# --- plotdata ----------------------------------------------------------------

_GROUP_COLUMNS = ("scheme", "modulation", "r_db", "beta")


def _parse_result_csv(path: str):
    """Rows of the pinned schema, with line numbers for error reporting."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}:1: empty file, expected a CSV header") from None
        if header != CSV_HEADER:
            raise ValueError(
                f"{path}:1: unexpected header {header!r}; expected {CSV_HEADER!r}"
            )
        for lineno, record in enumerate(reader, start=2):
            if len(record) != len(CSV_HEADER):
                raise ValueError(
                    f"{path}:{lineno}: expected {len(CSV_HEADER)} columns, "
                    f"got {len(record)}"
                )
            row = dict(zip(CSV_HEADER, record))
            if row["ber_sim"] == "" and row["ber_analytic"] == "":
                raise ValueError(
                    f"{path}:{lineno}: row has neither ber_sim nor ber_analytic"
                )
            try:
                float(row["snr_db"])
                float(row["ber_sim"] if row["ber_sim"] != "" else row["ber_analytic"])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric value") from None
            rows.append((lineno, row))
    return rows


def cmd_plotdata(args) -> int:
    group_by = tuple(k.strip() for k in args.group_by.split(",") if k.strip())
    unknown = [k for k in group_by if k not in _GROUP_COLUMNS]
    if unknown:
        raise UsageError(
            f"cannot group by {', '.join(unknown)}; choose from {_GROUP_COLUMNS}"
        )
    if not group_by:
        raise UsageError("empty group-by list")
    rows = _parse_result_csv(args.input)
    if not rows:
        print("warning: no data rows; nothing to write", file=sys.stderr)
        return 0
    os.makedirs(args.outdir, exist_ok=True)
    curves: dict = {}
    for _, row in rows:
        key = tuple(row[k] for k in group_by)
        ber = row["ber_sim"] if row["ber_sim"] != "" else row["ber_analytic"]
        curves.setdefault(key, []).append((row["snr_db"], ber))
    written = []
    for key in sorted(curves):
        parts = [f"{col}{val}" for col, val in zip(group_by, key)]
        name = "curve_" + "_".join(parts).replace("/", "-") + ".dat"
        out_path = os.path.join(args.outdir, name)
        with open(out_path, "w", encoding="utf-8") as fh:
            for snr_db, ber in curves[key]:
                fh.write(f"{snr_db} {ber}\n")
        written.append(out_path)
    for path in written:
        print(path)
    return 0


# --- entry point --------------------------------------------------------------


def _add_grid_options(sub, include_sim: bool) -> None:
    sub.add_argument("--spec", help="JSON sweep spec; flags override its values")
    sub.add_argument(
        "--scheme",
        type=lambda s: [t.strip() for t in s.split(",") if t.strip()],
        help="comma list: alamouti_2x1, ostbc_4x2",
    )
    sub.add_argument(
        "--modulation",
        type=lambda s: [t.strip() for t in s.split(",") if t.strip()],
        help="comma list: BPSK, QPSK, QAM16",
    )
    sub.add_argument(
        "--gamma-db",
        type=_parse_float_list,
        help="total-SNR grid in dB, comma list; start:stop:step expands",
    )
    sub.add_argument(
        "--r-db",
        type=_parse_float_list,
        help="RS-to-BS SNR-ratio grid in dB (0 = balanced)",
    )
    sub.add_argument(
        "--beta", type=_parse_float_list, help="estimation-error variance grid"
    )
    sub.add_argument("--seed", type=int, help="sweep seed (default 1)")
    sub.add_argument("--output", help="CSV output path (default: stdout)")
    if include_sim:
        sub.add_argument("--min-errors", type=int, help="stop after this many bit errors")
        sub.add_argument("--max-bits", type=int, help="hard cap on simulated bits")
    sub.add_argument(
        "--workers",
        type=int,
        help=f"concurrent chunk workers (default ${WORKERS_ENV} or 1)",
    )


def _build_parser() -> _Parser:
    parser = _Parser(prog="coop-ostbc", description=__doc__.split("\n")[0])
    commands = parser.add_subparsers(dest="command", required=True)

    p_analytic = commands.add_parser(
        "analytic", help="closed-form BER grid (BPSK/QPSK, beta = 0)"
    )
    _add_grid_options(p_analytic, include_sim=False)
    p_analytic.set_defaults(func=cmd_analytic, min_errors=None, max_bits=None)

    p_sim = commands.add_parser("simulate", help="Monte Carlo BER grid")
    _add_grid_options(p_sim, include_sim=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_val = commands.add_parser(
        "validate", help="simulate and compare against the closed form"
    )
    _add_grid_options(p_val, include_sim=True)
    p_val.set_defaults(func=cmd_validate)

    p_plot = commands.add_parser(
        "plotdata", help="split a result CSV into per-curve data files"
    )
    p_plot.add_argument("input", help="CSV produced by analytic/simulate/validate")
    p_plot.add_argument("--outdir", default=".", help="directory for curve files")
    p_plot.add_argument(
        "--group-by",
        default=",".join(_GROUP_COLUMNS),
        help=f"comma list of curve keys (default {','.join(_GROUP_COLUMNS)})",
    )
    p_plot.set_defaults(func=cmd_plotdata)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
