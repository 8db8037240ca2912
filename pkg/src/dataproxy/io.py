"""File formats: manifests, outcomes, features, importance, selections, tables.

Every format is versioned, UTF-8 with LF line endings where textual, and
written atomically (temp file and rename). Writers are deterministic: the
same values produce the same bytes, so reruns can be compared with a plain
diff. Floats are serialized with ``repr`` and parse back exactly.
"""

from __future__ import annotations

import csv
import io as _stdio
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .datamodel import (
    DatasetManifest,
    FeatureMatrix,
    ImportanceTable,
    ProbeOutcomeSet,
)
from .exceptions import DegenerateInput, FormatError
from .ranking import (
    FLIPPED,
    PRESERVED,
    TIED,
    AccuracyTable,
    ConfigAccuracy,
    RankingReport,
)
from .sampling import ProxySelection

MANIFEST_FORMAT = "dpx-manifest"
SELECTION_FORMAT = "dpx-selection"
REPORT_FORMAT = "dpx-report"
SUMMARY_FORMAT = "dpx-summary"
FORMAT_VERSION = 1

_FEATURE_MAGIC = b"DPXFEAT "
_GRID_TO_CODE = {".": PRESERVED, "x": FLIPPED, "=": TIED}
_CODE_TO_GRID = {v: k for k, v in _GRID_TO_CODE.items()}


def _atomic_write_bytes(path, payload: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_text(path, text: str) -> None:
    _atomic_write_bytes(path, text.encode("utf-8"))


def write_text_file(path, text: str) -> None:
    """Write UTF-8 text atomically (temp file and rename)."""
    _atomic_write_text(path, text)


def _fail(path, message: str) -> FormatError:
    return FormatError(f"{path}: {message}")


def _parse_float(path, field: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise _fail(path, f"field {field!r} is not a number: {raw!r}") from None


def _check_header(path, line: str, expected: str) -> list[str]:
    """Validate a ``# <format> v<version> key=value...`` header line."""
    parts = line.rstrip("\n").split(" ")
    if len(parts) < 2 or parts[0] != "#" or parts[1] != expected:
        raise _fail(path, f"expected a '# {expected} v{FORMAT_VERSION}' header, got {line!r}")
    if parts[2] != f"v{FORMAT_VERSION}":
        raise _fail(path, f"unsupported {expected} version {parts[2]!r}")
    extras = {}
    for item in parts[3:]:
        if "=" not in item:
            raise _fail(path, f"malformed header attribute {item!r}")
        key, value = item.split("=", 1)
        extras[key] = value
    return extras


# ---------------------------------------------------------------------------
# Manifest: line-delimited JSON records.


def write_manifest(path, manifest: DatasetManifest) -> None:
    lines = [
        json.dumps(
            {"format": MANIFEST_FORMAT, "version": FORMAT_VERSION, "num_labels": manifest.num_labels}
        )
    ]
    for split, ids in (("train", manifest.train_ids), ("test", manifest.test_ids)):
        for sid in ids:
            lines.append(json.dumps({"id": sid, "split": split, "label": manifest.labels[sid]}))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def read_manifest(path) -> DatasetManifest:
    with open(path, encoding="utf-8") as handle:
        raw_lines = [line for line in handle.read().split("\n") if line.strip()]
    if not raw_lines:
        raise _fail(path, "empty manifest file")
    try:
        header = json.loads(raw_lines[0])
    except json.JSONDecodeError as err:
        raise _fail(path, f"header is not valid JSON: {err}") from None
    if not isinstance(header, dict) or header.get("format") != MANIFEST_FORMAT:
        raise _fail(path, f"not a {MANIFEST_FORMAT} file")
    if header.get("version") != FORMAT_VERSION:
        raise _fail(path, f"unsupported manifest version {header.get('version')!r}")
    if not isinstance(header.get("num_labels"), int):
        raise _fail(path, "header field 'num_labels' must be an integer")

    train, test, labels = [], [], {}
    for lineno, line in enumerate(raw_lines[1:], start=2):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as err:
            raise _fail(path, f"line {lineno} is not valid JSON: {err}") from None
        for field in ("id", "split", "label"):
            if field not in record:
                raise _fail(path, f"line {lineno} misses field {field!r}")
        if record["split"] == "train":
            train.append(record["id"])
        elif record["split"] == "test":
            test.append(record["id"])
        else:
            raise _fail(path, f"line {lineno}: field 'split' must be train or test")
        if not isinstance(record["label"], int):
            raise _fail(path, f"line {lineno}: field 'label' must be an integer")
        labels[record["id"]] = record["label"]
    try:
        return DatasetManifest(
            train_ids=tuple(train),
            test_ids=tuple(test),
            labels=labels,
            num_labels=header["num_labels"],
        )
    except DegenerateInput as err:
        raise _fail(path, str(err)) from None


# ---------------------------------------------------------------------------
# Outcomes: probe header lines, then one 0/1 flag row per test id.


def write_outcomes(path, outcomes: ProbeOutcomeSet) -> None:
    role = {outcomes.lower_id: "lower", outcomes.upper_id: "upper"}
    lines = [f"# dpx-outcomes v{FORMAT_VERSION}"]
    for pid in outcomes.probe_ids:
        lines.append(f"# probe\t{pid}\t{role.get(pid, 'aux')}\t{outcomes.accuracy[pid]!r}")
    lines.append("id\t" + "\t".join(outcomes.probe_ids))
    for i, sid in enumerate(outcomes.test_ids):
        flags = "\t".join(str(int(outcomes.correct[pid][i])) for pid in outcomes.probe_ids)
        lines.append(f"{sid}\t{flags}")
    _atomic_write_text(path, "\n".join(lines) + "\n")


def read_outcomes(path) -> ProbeOutcomeSet:
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().split("\n")
    if not lines:
        raise _fail(path, "empty outcomes file")
    _check_header(path, lines[0], "dpx-outcomes")

    probes, roles = [], {}
    accuracy = {}
    body_start = None
    for lineno, line in enumerate(lines[1:], start=2):
        if line.startswith("# probe\t"):
            parts = line.split("\t")
            if len(parts) != 4:
                raise _fail(path, f"line {lineno}: probe declaration needs id, role, accuracy")
            _, pid, role, acc = parts
            if role not in ("lower", "upper", "aux"):
                raise _fail(path, f"line {lineno}: unknown probe role {role!r}")
            probes.append(pid)
            roles.setdefault(role, []).append(pid)
            accuracy[pid] = _parse_float(path, f"accuracy of {pid}", acc)
        else:
            body_start = lineno
            break
    for role in ("lower", "upper"):
        if len(roles.get(role, [])) != 1:
            raise _fail(path, f"exactly one probe must have role {role!r}")
    if body_start is None:
        raise _fail(path, "missing flag rows")
    header_row = lines[body_start - 1].split("\t")
    if header_row != ["id"] + probes:
        raise _fail(path, f"flag table header must be 'id' plus probe ids {probes}")

    test_ids, rows = [], []
    for lineno, line in enumerate(lines[body_start:], start=body_start + 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 1 + len(probes):
            raise _fail(path, f"line {lineno}: expected {1 + len(probes)} columns")
        test_ids.append(parts[0])
        flag_row = []
        for pid, raw in zip(probes, parts[1:]):
            if raw not in ("0", "1"):
                raise _fail(path, f"line {lineno}: flag for {pid!r} must be 0 or 1, got {raw!r}")
            flag_row.append(raw == "1")
        rows.append(flag_row)
    flags = np.array(rows, dtype=bool) if rows else np.zeros((0, len(probes)), dtype=bool)
    try:
        return ProbeOutcomeSet(
            probe_ids=tuple(probes),
            lower_id=roles["lower"][0],
            upper_id=roles["upper"][0],
            test_ids=tuple(test_ids),
            accuracy=accuracy,
            correct={pid: flags[:, i] for i, pid in enumerate(probes)},
        )
    except (DegenerateInput, FormatError) as err:
        raise _fail(path, str(err)) from None


# ---------------------------------------------------------------------------
# Features: binary (magic + JSON header + little-endian float32 rows) or text.


def write_features(path, features: FeatureMatrix, binary: bool = True) -> None:
    if binary:
        header = json.dumps(
            {
                "version": FORMAT_VERSION,
                "rows": len(features.sample_ids),
                "dim": features.dim,
                "ids": list(features.sample_ids),
            }
        )
        payload = (
            _FEATURE_MAGIC
            + f"v{FORMAT_VERSION}\n".encode()
            + header.encode("utf-8")
            + b"\n"
            + np.ascontiguousarray(features.data, dtype="<f4").tobytes()
        )
        _atomic_write_bytes(path, payload)
    else:
        lines = [f"# dpx-features v{FORMAT_VERSION}"]
        for sid, row in zip(features.sample_ids, features.data):
            lines.append(sid + "\t" + "\t".join(repr(float(v)) for v in row))
        _atomic_write_text(path, "\n".join(lines) + "\n")


def _read_features_binary(path, raw: bytes) -> FeatureMatrix:
    newline = raw.find(b"\n")
    if newline < 0:
        raise _fail(path, "truncated feature header")
    magic_line = raw[:newline]
    if magic_line != _FEATURE_MAGIC + f"v{FORMAT_VERSION}".encode():
        raise _fail(path, f"unsupported feature file version {magic_line[len(_FEATURE_MAGIC):]!r}")
    header_end = raw.find(b"\n", newline + 1)
    if header_end < 0:
        raise _fail(path, "truncated feature header")
    try:
        header = json.loads(raw[newline + 1 : header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise _fail(path, f"feature header is not valid JSON: {err}") from None
    for field in ("rows", "dim", "ids"):
        if field not in header:
            raise _fail(path, f"feature header misses field {field!r}")
    rows, dim, ids = header["rows"], header["dim"], header["ids"]
    if not (isinstance(rows, int) and isinstance(dim, int) and isinstance(ids, list)):
        raise _fail(path, "feature header fields have wrong types")
    if len(ids) != rows:
        raise _fail(path, f"header declares {rows} rows but lists {len(ids)} ids")
    body = raw[header_end + 1 :]
    expected = rows * dim * 4
    if len(body) != expected:
        raise _fail(path, f"expected {expected} data bytes, found {len(body)}")
    data = np.frombuffer(body, dtype="<f4").reshape(rows, dim).astype(float)
    try:
        return FeatureMatrix(sample_ids=tuple(ids), data=data)
    except DegenerateInput as err:
        raise _fail(path, str(err)) from None


def _read_features_text(path, text: str) -> FeatureMatrix:
    lines = [line for line in text.split("\n") if line.strip()]
    if not lines:
        raise _fail(path, "empty feature file")
    _check_header(path, lines[0], "dpx-features")
    ids, rows = [], []
    dim = None
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split("\t")
        if dim is None:
            dim = len(parts) - 1
            if dim < 1:
                raise _fail(path, f"line {lineno}: no feature columns")
        if len(parts) != dim + 1:
            raise _fail(path, f"line {lineno}: expected {dim + 1} columns, got {len(parts)}")
        ids.append(parts[0])
        rows.append([_parse_float(path, f"feature of {parts[0]}", v) for v in parts[1:]])
    try:
        return FeatureMatrix(sample_ids=tuple(ids), data=np.array(rows, dtype=float))
    except DegenerateInput as err:
        raise _fail(path, str(err)) from None


def read_features(path) -> FeatureMatrix:
    with open(path, "rb") as handle:
        raw = handle.read()
    if raw.startswith(_FEATURE_MAGIC):
        return _read_features_binary(path, raw)
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise _fail(path, "neither a binary feature file nor UTF-8 text") from None
    return _read_features_text(path, text)


# ---------------------------------------------------------------------------
# Importance tables: id, value, keep probability ('-' when absent).


def write_importance(path, table: ImportanceTable) -> None:
    lines = [f"# dpx-importance v{FORMAT_VERSION} split={table.split}"]
    lines.append("id\tvalue\tkeep_prob")
    for sid, value in table.values.items():
        kp = "-" if table.keep_prob is None else repr(table.keep_prob[sid])
        lines.append(f"{sid}\t{value!r}\t{kp}")
    _atomic_write_text(path, "\n".join(lines) + "\n")


def read_importance(path) -> ImportanceTable:
    with open(path, encoding="utf-8") as handle:
        lines = [line for line in handle.read().split("\n") if line.strip()]
    if not lines:
        raise _fail(path, "empty importance file")
    extras = _check_header(path, lines[0], "dpx-importance")
    split = extras.get("split")
    if split not in ("train", "test"):
        raise _fail(path, "header must carry split=train or split=test")
    if len(lines) < 2 or lines[1] != "id\tvalue\tkeep_prob":
        raise _fail(path, "second line must be the 'id\\tvalue\\tkeep_prob' column header")
    values, keep = {}, {}
    for lineno, line in enumerate(lines[2:], start=3):
        parts = line.split("\t")
        if len(parts) != 3:
            raise _fail(path, f"line {lineno}: expected 3 columns")
        sid, value, kp = parts
        values[sid] = _parse_float(path, f"value of {sid}", value)
        if kp != "-":
            keep[sid] = _parse_float(path, f"keep_prob of {sid}", kp)
    if keep and set(keep) != set(values):
        raise _fail(path, "keep_prob must be present for every sample or for none")
    try:
        return ImportanceTable(split=split, values=values, keep_prob=keep or None)
    except DegenerateInput as err:
        raise _fail(path, str(err)) from None


# ---------------------------------------------------------------------------
# Proxy selections: JSON document with provenance.


def write_selection(path, selection: ProxySelection) -> None:
    document = {
        "format": SELECTION_FORMAT,
        "version": FORMAT_VERSION,
        "kept_train_ids": list(selection.kept_train_ids),
        "kept_labels": sorted(selection.kept_labels),
        "provenance": selection.provenance,
    }
    _atomic_write_text(path, json.dumps(document, indent=1) + "\n")


def read_selection(path) -> ProxySelection:
    with open(path, encoding="utf-8") as handle:
        try:
            document = json.load(handle)
        except json.JSONDecodeError as err:
            raise _fail(path, f"not valid JSON: {err}") from None
    if not isinstance(document, dict) or document.get("format") != SELECTION_FORMAT:
        raise _fail(path, f"not a {SELECTION_FORMAT} file")
    if document.get("version") != FORMAT_VERSION:
        raise _fail(path, f"unsupported selection version {document.get('version')!r}")
    for field in ("kept_train_ids", "kept_labels", "provenance"):
        if field not in document:
            raise _fail(path, f"missing field {field!r}")
    try:
        return ProxySelection(
            kept_train_ids=tuple(document["kept_train_ids"]),
            kept_labels=frozenset(int(label) for label in document["kept_labels"]),
            provenance=document["provenance"],
        )
    except (DegenerateInput, TypeError, ValueError) as err:
        raise _fail(path, str(err)) from None


# ---------------------------------------------------------------------------
# Accuracy tables: CSV with a variant header comment.


def write_accuracy_table(path, table: AccuracyTable) -> None:
    param_keys = list(table.entries[0].params)
    for entry in table.entries:
        if list(entry.params) != param_keys:
            raise DegenerateInput(
                f"entry {entry.config_id!r} has param columns {list(entry.params)}, "
                f"expected {param_keys}"
            )
    buffer = _stdio.StringIO()
    buffer.write(f"# dpx-accuracy v{FORMAT_VERSION} variant={table.variant_name}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["config_id", *param_keys, "accuracy"])
    for entry in table.entries:
        writer.writerow(
            [entry.config_id, *[entry.params[k] for k in param_keys], repr(entry.accuracy)]
        )
    _atomic_write_text(path, buffer.getvalue())


def read_accuracy_table(path) -> AccuracyTable:
    with open(path, encoding="utf-8", newline="") as handle:
        first = handle.readline()
        parts = first.rstrip("\n").split(" ", 3)
        if len(parts) < 3 or parts[0] != "#" or parts[1] != "dpx-accuracy":
            raise _fail(path, "expected a '# dpx-accuracy v1 variant=...' header")
        if parts[2] != f"v{FORMAT_VERSION}":
            raise _fail(path, f"unsupported accuracy-table version {parts[2]!r}")
        if len(parts) < 4 or not parts[3].startswith("variant="):
            raise _fail(path, "header misses the variant= attribute")
        variant = parts[3][len("variant=") :]
        rows = list(csv.reader(handle))
    if not rows:
        raise _fail(path, "missing column header row")
    header = rows[0]
    if len(header) < 2 or header[0] != "config_id" or header[-1] != "accuracy":
        raise _fail(path, "columns must be config_id, params..., accuracy")
    param_keys = header[1:-1]
    entries = []
    for lineno, row in enumerate(rows[1:], start=3):
        if not row:
            continue
        if len(row) != len(header):
            raise _fail(path, f"line {lineno}: expected {len(header)} columns, got {len(row)}")
        accuracy = _parse_float(path, f"accuracy of {row[0]}", row[-1])
        try:
            entries.append(
                ConfigAccuracy(
                    config_id=row[0],
                    accuracy=accuracy,
                    params=dict(zip(param_keys, row[1:-1])),
                )
            )
        except DegenerateInput as err:
            raise _fail(path, f"line {lineno}: {err}") from None
    try:
        return AccuracyTable(variant_name=variant, entries=tuple(entries))
    except DegenerateInput as err:
        raise _fail(path, str(err)) from None


# ---------------------------------------------------------------------------
# Ranking reports: JSON document embedding the agreement grid.


def write_report(path, report: RankingReport) -> None:
    grid_rows = [
        "".join(_CODE_TO_GRID[int(cell)] for cell in row) for row in report.agreement
    ]
    document = {
        "format": REPORT_FORMAT,
        "version": FORMAT_VERSION,
        "reference": report.reference_name,
        "candidate": report.candidate_name,
        "config_ids": list(report.config_ids),
        "correlation_pearson": report.correlation_pearson,
        "correlation_spearman": report.correlation_spearman,
        "best_preserved": report.best_preserved,
        "reference_best_id": report.reference_best_id,
        "candidate_best_id": report.candidate_best_id,
        "flipped_pair_count": report.flipped_pair_count,
        "agreement_grid": grid_rows,
    }
    _atomic_write_text(path, json.dumps(document, indent=1) + "\n")


def read_report(path) -> RankingReport:
    with open(path, encoding="utf-8") as handle:
        try:
            document = json.load(handle)
        except json.JSONDecodeError as err:
            raise _fail(path, f"not valid JSON: {err}") from None
    if not isinstance(document, dict) or document.get("format") != REPORT_FORMAT:
        raise _fail(path, f"not a {REPORT_FORMAT} file")
    if document.get("version") != FORMAT_VERSION:
        raise _fail(path, f"unsupported report version {document.get('version')!r}")
    ids = tuple(document["config_ids"])
    grid = document["agreement_grid"]
    if len(grid) != len(ids) or any(len(row) != len(ids) for row in grid):
        raise _fail(path, "agreement grid shape does not match config ids")
    try:
        matrix = np.array(
            [[_GRID_TO_CODE[ch] for ch in row] for row in grid], dtype=np.int8
        )
    except KeyError as err:
        raise _fail(path, f"unknown agreement grid character {err}") from None
    return RankingReport(
        reference_name=document["reference"],
        candidate_name=document["candidate"],
        config_ids=ids,
        agreement=matrix,
        correlation_pearson=float(document["correlation_pearson"]),
        correlation_spearman=float(document["correlation_spearman"]),
        best_preserved=bool(document["best_preserved"]),
        reference_best_id=document["reference_best_id"],
        candidate_best_id=document["candidate_best_id"],
        flipped_pair_count=int(document["flipped_pair_count"]),
    )
