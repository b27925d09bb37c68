"""Machine-readable reports (JSON and CSV) for scenario outcomes."""

from __future__ import annotations

import csv
import io
import json
import math

from . import __version__
from .config import ExperimentConfig
from .scenarios import Outcome
from .verify import check_bound_holds

__all__ = ["CSV_HEADER", "build_report", "overall_status", "to_csv", "to_json"]

CSV_HEADER = ("scenario", "d", "bound", "prob", "ci_low", "ci_high", "status")
SIG_DIGITS = 12
_STATUS_RANK = {"bound_only": 0, "pass": 1, "tight": 2, "violation": 3}


def _round(x):
    """Round floats (recursively) to 12 significant digits; non-finite floats become strings."""
    if isinstance(x, bool) or x is None:
        return x
    if isinstance(x, float):
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.{SIG_DIGITS}g}")
    if isinstance(x, dict):
        return {k: _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    return x


def overall_status(statuses) -> str:
    """Worst status: violation > tight > pass > bound_only."""
    return max(statuses, key=_STATUS_RANK.__getitem__, default="bound_only")


def _verdicts(outcome: Outcome) -> list[dict]:
    out = []
    for bound in outcome.bounds:
        for source, prob in (("exact", outcome.exact_prob), ("estimate", outcome.estimate)):
            if prob is None:
                continue
            v = check_bound_holds(prob, bound)
            out.append(
                {
                    "theorem_id": bound.theorem_id,
                    "source": source,
                    "status": v.status,
                    "bound": bound.value,
                    "prob": v.prob,
                    "margin": v.margin,
                }
            )
    return out


def build_report(cfg: ExperimentConfig, outcome: Outcome, wall_clock_s: float) -> dict:
    """Report dict with a fixed key order; ``wall_clock_s`` is always last."""
    verdicts = _verdicts(outcome)
    computed = _round(
        {
            "bounds": [b.to_record() for b in outcome.bounds],
            "anti_order_reference": outcome.anti_order_reference,
            "exact_prob": outcome.exact_prob,
            "estimate": None if outcome.estimate is None else outcome.estimate.to_record(),
            "verdicts": verdicts,
        }
    )
    factor = outcome.notes.get("anti_order_factor")
    if factor is not None and outcome.anti_order_reference is not None:
        # keep "reference = factor * reported bound" exact after rounding
        computed["anti_order_reference"] = factor * computed["bounds"][0]["value"]
    report = {
        "library_version": __version__,
        "scenario": cfg.scenario,
        "d": cfg.dim,
        "config": cfg.to_dict(),
        **computed,
        "status": overall_status(v["status"] for v in verdicts),
        "notes": _round(outcome.notes),
        "wall_clock_s": round(wall_clock_s, 6),
    }
    return report


def to_json(report: dict | list) -> str:
    return json.dumps(report, indent=2) + "\n"


def csv_rows(report: dict) -> list[tuple]:
    """One row per bound; ``prob`` prefers the exact value over the estimate."""
    est = report["estimate"]
    prob = report["exact_prob"] if report["exact_prob"] is not None else (est["p_hat"] if est else None)
    rows = []
    for b in report["bounds"]:
        statuses = [v["status"] for v in report["verdicts"] if v["theorem_id"] == b["theorem_id"]]
        rows.append(
            (
                report["scenario"],
                report["d"],
                b["value"],
                "" if prob is None else prob,
                "" if est is None else est["ci_low"],
                "" if est is None else est["ci_high"],
                overall_status(statuses),
            )
        )
    return rows


def to_csv(reports: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in reports:
        writer.writerows(csv_rows(r))
    return buf.getvalue()
