"""``gatebudget`` command line: sweep, budget and validate.

Exit codes: 0 success, 1 numerical failure (or failed validation), 2 config error.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

from . import analytic as an
from .config import CHANNEL_NAMES, load_json, parse_budget, parse_sweep
from .errors import ConfigError, GateBudgetError
from .harness import InfidelityRecord, SweepPlan, analytic_value, run_sweep

log = logging.getLogger("gatebudget")

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2

FORMULA_REF = {
    "qubit_shift_1q": "infid_1q_qubit_shift_state",
    "inhomo1_1q": "infid_1q_inhomo1",
    "inhomo2_1q": "infid_1q_inhomo2",
    "cross_kerr_1q": "infid_1q_crosskerr",
    "motional_shift_2q": "infid_2q_static_shift",
    "anharmonic_2q": "infid_2q_anharmonic",
    "grad_inhomo_2q": "infid_2q_grad_inhomo",
    "heating_2q": "infid_2q_heating",
    "dephasing_2q": "infid_2q_dephasing",
}


def fmt(x) -> str:
    """17 significant digits, locale independent."""
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def atomic_write(path, data, mode="w"):
    """Write via a temp file in the target directory so failures leave nothing behind."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({"encoding": "utf-8", "newline": ""} if "b" not in mode else {})) as fh:
            fh.write(data)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_svg(path, records: list[InfidelityRecord]):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "gatebudget"
    fig, ax = plt.subplots(figsize=(6, 4))
    for name in dict.fromkeys(r.channel for r in records):
        rs = [r for r in records if r.channel == name and r.strength > 0]
        if not rs:
            continue
        x = [r.strength for r in rs]
        (line,) = ax.plot(x, [r.analytic for r in rs], "-", label=f"{name} analytic")
        ax.plot(x, [r.numeric for r in rs], "--", color=line.get_color(), label=f"{name} numeric")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("error strength")
    ax.set_ylabel("infidelity")
    ax.legend(fontsize=7)
    fig.tight_layout()
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    atomic_write(path, buf.getvalue())


# ---------------------------------------------------------------- commands


def cmd_sweep(config, out, svg=None, channels=None, strengths=None) -> int:
    cfg = parse_sweep(load_json(config), channels, strengths)
    records = []
    for plan in cfg.plans:
        log.info("sweeping %s over %d strengths", plan.channel.name, len(plan.sweep_values))
        records.extend(run_sweep(plan))
    atomic_write(out, _csv_text(InfidelityRecord.CSV_HEADER, [r.csv_fields() for r in records]))
    if svg:
        write_svg(svg, records)
    return EXIT_OK


def budget_rows(doc) -> list[tuple]:
    """(channel, formula, infidelity, percent, flag) rows followed by the total."""
    inp = parse_budget(doc)
    vals = []
    for ch in inp.channels:
        kind = ch.gate_kind
        plan = SweepPlan(
            ch,
            inp.gates[kind],
            inp.states[kind],
            inp.motional,
            (ch.strength,),
            comparison="time-averaged",
            motional_b=inp.motional_b,
        )
        vals.append((ch.name, analytic_value(plan, ch)))
    total = math.fsum(v for _, v in vals)
    rows = []
    for name, v in vals:
        pct = 100.0 * v / total if total > 0 else 0.0
        rows.append((name, FORMULA_REF[name], v, pct, "nonperturbative" if an.outside_perturbative(v) else ""))
    rows.append(("total", "sum of rows", total, 100.0 if total > 0 else 0.0, ""))
    return rows


BUDGET_HEADER = ("channel", "formula", "infidelity", "percent", "flag")


def cmd_budget(config, csv_out=None, stream=None) -> int:
    rows = budget_rows(load_json(config))
    stream = stream or sys.stdout
    stream.write(f"{'channel':<20} {'formula':<28} {'infidelity':>12} {'% of total':>10}\n")
    for name, ref, v, pct, flag in rows:
        mark = "  * outside perturbative regime" if flag else ""
        stream.write(f"{name:<20} {ref:<28} {v:>12.4e} {pct:>10.2f}{mark}\n")
    if csv_out:
        atomic_write(csv_out, _csv_text(BUDGET_HEADER, rows))
    return EXIT_OK


def cmd_validate(tier="fast", seed=0, report=None, tolerances=None, stream=None) -> int:
    from .validation import run_validation

    stream = stream or sys.stdout
    rep = run_validation(tier, seed, tolerances, echo=lambda s: stream.write(s + "\n"))
    if report:
        atomic_write(report, rep.to_json())
    stream.write("validation " + ("passed" if rep.passed else "FAILED") + "\n")
    return EXIT_OK if rep.passed else EXIT_NUMERIC


# -------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gatebudget", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="analytic vs numeric infidelity over a strength grid")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--svg", nargs="?", const=True, default=None, help="also write an SVG plot (default: OUT with .svg)")
    s.add_argument("--channels", type=lambda v: v.split(","), help=f"comma list or 'all' ({', '.join(CHANNEL_NAMES)})")
    s.add_argument("--strengths", type=lambda v: [float(x) for x in v.split(",")], help="comma list overriding the config")

    b = sub.add_parser("budget", help="error-budget table from the closed-form formulas")
    b.add_argument("--config", required=True)
    b.add_argument("--csv", dest="csv_out")

    v = sub.add_parser("validate", help="run the acceptance suite")
    v.add_argument("--tier", choices=("fast", "full"), default="fast")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--report")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "sweep":
            svg = args.svg
            if svg is True:
                svg = str(Path(args.out).with_suffix(".svg"))
            return cmd_sweep(args.config, args.out, svg, args.channels, args.strengths)
        if args.command == "budget":
            return cmd_budget(args.config, args.csv_out)
        return cmd_validate(args.tier, args.seed, args.report)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GateBudgetError, ArithmeticError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        for note in getattr(exc, "__notes__", ()):
            print(f"  {note}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
