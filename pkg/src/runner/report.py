#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Result files and summaries

Runs are written as one tidy CSV row per (run, step) and summarised into
a JSON document: final-regret statistics, #Best shares, regret curves,
compositional-versus-plain pairings and timings.
"""

import csv
import json
import logging
import os
from collections import OrderedDict, defaultdict

import numpy as np

import config
from src.runner.sweep import RecordRow, RunRecord
from src.utils.constants import COMPOSITIONAL_COUNTERPARTS, CSV_HEADER, STATUS_OK
from src.utils.errors import BenchIOError
from src.utils.helpers import format_regret

logger = logging.getLogger(__name__)


def optimiser_key(record):
    """Summary key of a record: optimiser/form"""
    return f"{record.optimizer}/{record.form}"


def _task_key(record):
    return (record.task, record.dim, record.acq)


def _mean_or_none(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def _best_shares(records):
    """
    #Best percentage per optimiser key

    Within every (task, dim, acq) group the key with the lowest mean final
    regret over seeds wins; ties split the win.
    """
    groups = defaultdict(lambda: defaultdict(list))
    for record in records:
        groups[_task_key(record)][optimiser_key(record)].append(record.final_regret)
    wins, entered = defaultdict(float), defaultdict(int)
    for group in groups.values():
        means = {key: float(np.mean(v)) for key, v in group.items()}
        lowest = min(means.values())
        winners = [key for key, value in means.items() if value == lowest]
        for key in means:
            entered[key] += 1
        for key in winners:
            wins[key] += 1.0 / len(winners)
    return {key: 100.0 * wins[key] / entered[key] for key in entered}


def _marginals(records):
    by_key = defaultdict(list)
    for record in records:
        by_key[optimiser_key(record)].append(record)
    shares = _best_shares(records)
    out = OrderedDict()
    for key in sorted(by_key):
        group = by_key[key]
        finals = [r.final_regret for r in group]
        length = max(len(r.rows) for r in group)
        curve = [float(np.mean([r.rows[t].regret for r in group if t < len(r.rows)])) for t in range(length)]
        out[key] = OrderedDict([
            ("runs", len(group)),
            ("mean_final_regret", float(np.mean(finals))),
            ("median_final_regret", float(np.median(finals))),
            ("best_pct", shares[key]),
            ("curve", curve),
        ])
    return out


def _paired(records):
    """Share of task groups where each compositional counterpart beats its plain optimiser"""
    groups = defaultdict(lambda: defaultdict(list))
    for record in records:
        groups[_task_key(record)][record.optimizer].append(record.final_regret)
    out = OrderedDict()
    for plain, comp in sorted(COMPOSITIONAL_COUNTERPARTS.items()):
        wins, tasks = 0.0, 0
        for group in groups.values():
            if plain in group and comp in group:
                tasks += 1
                a, b = np.mean(group[plain]), np.mean(group[comp])
                wins += 1.0 if b < a else 0.5 if b == a else 0.0
        if tasks:
            out[f"{plain}->{comp}"] = OrderedDict([("tasks", tasks), ("comp_share", wins / tasks)])
    return out


def _timing(records):
    by_key = defaultdict(lambda: ([], []))
    for record in records:
        opt, fit = by_key[optimiser_key(record)]
        for row in record.rows[1:]:
            opt.append(row.opt_ms)
            fit.append(row.fit_ms)
    return OrderedDict((key, OrderedDict([("opt_ms", _mean_or_none(by_key[key][0])),
                                          ("fit_ms", _mean_or_none(by_key[key][1]))]))
                       for key in sorted(by_key))


def summarise(records):
    """
    Aggregate run records

    Args:
        records (list): RunRecord entries

    Returns:
        OrderedDict: JSON-ready summary; regret statistics use finished runs only
    """
    finished = [r for r in records if r.ok and r.rows]
    summary = OrderedDict()
    summary["runs"] = len(records)
    summary["failed"] = len(records) - len(finished)
    summary["by_optimiser"] = _marginals(finished)
    by_acq = OrderedDict()
    for acq in sorted({r.acq for r in finished}):
        by_acq[acq] = _marginals([r for r in finished if r.acq == acq])
    summary["by_acq"] = by_acq
    summary["paired"] = _paired(finished)
    summary["timing"] = _timing(finished)
    return summary


def _fmt(value):
    return "" if value is None else format_regret(value)


def emit(records, out_dir, include_timing=True):
    """
    Write the CSV and the JSON summary

    Args:
        records (list): RunRecord entries
        out_dir (str): Output directory, created if missing
        include_timing (bool): Write opt_ms and fit_ms; leave them empty otherwise

    Returns:
        tuple: (csv path, summary path)

    Raises:
        BenchIOError: If the files cannot be written
    """
    csv_path = os.path.join(out_dir, config.CSV_NAME)
    summary_path = os.path.join(out_dir, config.SUMMARY_NAME)
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(csv_path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for record in records:
                head = [record.tuple_id, record.task, record.dim, record.acq, record.form,
                        record.optimizer, record.seed]
                if not record.rows:
                    writer.writerow(head + ["", "", "", "", "", record.status])
                for row in record.rows:
                    timing = [_fmt(row.opt_ms), _fmt(row.fit_ms)] if include_timing else ["", ""]
                    writer.writerow(head + [row.step, _fmt(row.incumbent), _fmt(row.regret)]
                                    + timing + [record.status])
        summary = summarise(records)
        if not include_timing:
            summary.pop("timing")
        with open(summary_path, "w", encoding="utf-8", newline="") as handle:
            json.dump(summary, handle, indent=2)
            handle.write("\n")
    except OSError as exc:
        raise BenchIOError(f"cannot write results to {out_dir}: {exc}") from exc
    logger.info("wrote %d records to %s", len(records), csv_path)
    return csv_path, summary_path


def _parse_float(text):
    return float(text) if text != "" else None


def load_records(csv_path):
    """
    Read records back from an emitted CSV

    Args:
        csv_path (str): Path written by emit

    Returns:
        list: RunRecord entries in file order

    Raises:
        BenchIOError: If the file is missing or has the wrong header
    """
    records = OrderedDict()
    try:
        with open(csv_path, "r", encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header != CSV_HEADER:
                raise BenchIOError(f"{csv_path} does not start with the expected header")
            for line in reader:
                fields = dict(zip(CSV_HEADER, line))
                key = (fields["tuple_id"], int(fields["seed"]))
                if key not in records:
                    records[key] = RunRecord(fields["tuple_id"], fields["task"], int(fields["dim"]),
                                             fields["acq"], fields["form"], fields["optimizer"],
                                             int(fields["seed"]), [], fields["status"])
                if fields["step"] != "":
                    records[key].rows.append(RecordRow(int(fields["step"]), _parse_float(fields["incumbent"]),
                                                       _parse_float(fields["regret"]),
                                                       _parse_float(fields["opt_ms"]),
                                                       _parse_float(fields["fit_ms"])))
    except OSError as exc:
        raise BenchIOError(f"cannot read {csv_path}: {exc}") from exc
    return list(records.values())


def all_ok(records):
    """True when every record finished with status ok"""
    return all(record.status == STATUS_OK for record in records)
