import io
import json
import math
import re
import shlex
import sys

import numpy as np
import pandas as pd

from config import Config
from errors import TimestampParseError
from models import TimestampSet

TIMESTAMP_COLUMNS = ['i', 'T1', 'T2', 'T3', 'T4']
MSE_COLUMNS = ['mode', 'N', 'alpha', 'n_trials', 'mse', 'mean_beta1', 'ci_half_width', 'correlation_free', 'crb']


def _render(value):
    if isinstance(value, float):
        return repr(value)
    text = str(value.value) if hasattr(value, 'value') else str(value)
    # Values with blanks or quotes are shell-quoted so the line still splits into key=value tokens
    if not text or any(c.isspace() or c in "'\"\\" for c in text):
        return shlex.quote(text)
    return text


def header_line(command, **fields):
    """'#'-prefixed provenance line: tool, version, command and every parameter"""
    parts = [f"{key}={_render(value)}" for key, value in fields.items() if value is not None]
    return f"# {Config.TOOL_NAME} {Config.VERSION} {command} " + " ".join(parts)


def parse_header_line(line):
    """Inverse of header_line for the key=value part"""
    fields = {}
    body = line.lstrip('#')
    try:
        tokens = shlex.split(body)
    except ValueError:
        tokens = body.split()
    for token in tokens:
        if '=' in token:
            key, value = token.split('=', 1)
            fields[key] = value
    return fields


def timestamps_frame(ts):
    return pd.DataFrame({
        'i': np.arange(1, ts.n_rounds + 1),
        'T1': ts.t1,
        'T2': ts.t2,
        'T3': ts.t3,
        'T4': ts.t4,
    })


def estimate_frame(estimates):
    return pd.DataFrame([{
        'alpha': est.alpha,
        'n_pairs': est.n_pairs,
        'beta1_hat': est.beta1_hat,
        'theta1_hat': est.theta1_hat,
        'correlation_free': est.correlation_free,
    } for est in estimates])


def bound_frame(points):
    return pd.DataFrame({
        'alpha': [p.alpha for p in points],
        'crb_beta1': [p.crb_beta1 for p in points],
    })


def pairs_frame(report):
    return pd.DataFrame(list(report.pairs), columns=['m', 'n'])


def covariance_frame(cov):
    return pd.DataFrame(np.asarray(cov, dtype=float))


def mse_report_frame(report):
    return pd.DataFrame([{
        'mode': row.mode.value,
        'N': row.n_rounds,
        'alpha': row.alpha,
        'n_trials': row.n_trials,
        'mse': row.mse,
        'mean_beta1': row.mean_beta1,
        'ci_half_width': row.ci_half_width,
        'correlation_free': row.correlation_free,
        'crb': row.crb,
    } for row in report.rows], columns=MSE_COLUMNS)


def render_csv(frame, header, include_columns=True):
    """Header line plus the table with round-trip-exact floats"""
    body = frame.to_csv(
        index=False,
        header=include_columns,
        float_format=Config.CSV_FLOAT_FORMAT,
        na_rep='nan',
        lineterminator='\n',
    )
    return header + '\n' + body


def _json_value(value):
    if hasattr(value, 'item'):
        value = value.item()
    # NaN and infinities have no JSON literal
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def render_json(frame, header):
    payload = {
        'meta': parse_header_line(header),
        'tool': Config.TOOL_NAME,
        'version': Config.VERSION,
        'rows': [
            {key: _json_value(value) for key, value in record.items()}
            for record in frame.to_dict(orient='records')
        ],
    }
    return json.dumps(payload, indent=2, allow_nan=False) + '\n'


def write_output(text, path=None):
    """Write to a file, or stdout when path is None or '-'"""
    if path is None or path == '-':
        sys.stdout.write(text)
        return
    with open(path, 'w', newline='') as f:
        f.write(text)


def _to_float(value):
    try:
        return float(value)
    except (TypeError, ValueError):
        return np.nan


def read_timestamps(path):
    """
    Load a timestamp CSV written by the gen command.

    Args:
        path: file with optional '#' header lines followed by an i,T1,T2,T3,T4 table

    Returns:
        Tuple of (TimestampSet, header dictionary)
    """
    try:
        with open(path, 'r') as f:
            lines = f.read().splitlines()
    except OSError as e:
        raise TimestampParseError(f"cannot read {path}: {e.strerror}") from e

    header = {}
    skip = 0
    while skip < len(lines) and lines[skip].startswith('#'):
        header.update(parse_header_line(lines[skip]))
        skip += 1
    if skip == len(lines):
        raise TimestampParseError("no timestamp table found", line=skip + 1)

    try:
        frame = pd.read_csv(io.StringIO('\n'.join(lines[skip:])), dtype=str,
                            keep_default_na=False, skip_blank_lines=False)
    except pd.errors.ParserError as e:
        match = re.search(r'line (\d+)', str(e))
        line = skip + int(match.group(1)) if match else None
        raise TimestampParseError(f"malformed row: {str(e)}", line=line) from None
    except pd.errors.EmptyDataError:
        raise TimestampParseError("empty timestamp table", line=skip + 1) from None

    columns = [c.strip() for c in frame.columns]
    frame.columns = columns
    missing = [c for c in TIMESTAMP_COLUMNS if c not in columns]
    if missing:
        raise TimestampParseError(f"Missing required columns: {', '.join(missing)}", line=skip + 1)

    # First data row sits one line below the column header
    first_data_line = skip + 2
    numeric = frame[TIMESTAMP_COLUMNS].apply(lambda column: column.map(_to_float))
    bad = numeric.isna().any(axis=1) | ~np.isfinite(numeric.to_numpy(dtype=float)).all(axis=1)
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise TimestampParseError("missing or non-numeric value", line=first_data_line + row)

    index = numeric['i'].to_numpy()
    expected = np.arange(1, len(index) + 1)
    mismatch = np.flatnonzero(index != expected)
    if len(mismatch):
        row = int(mismatch[0])
        raise TimestampParseError(f"round index {index[row]:g}, expected {row + 1}",
                                  line=first_data_line + row)
    if len(index) < 2:
        raise TimestampParseError(f"need at least 2 rounds, found {len(index)}",
                                  line=first_data_line + len(index))

    t1, t2, t3, t4 = (numeric[c].to_numpy(dtype=float) for c in TIMESTAMP_COLUMNS[1:])
    for name, column in (('T1', t1), ('T4', t4)):
        stalled = np.flatnonzero(np.diff(column) <= 0)
        if len(stalled):
            row = int(stalled[0]) + 1
            raise TimestampParseError(
                f"{name} must be strictly increasing: {column[row]!r} follows {column[row - 1]!r}",
                line=first_data_line + row,
            )
    ts = TimestampSet(t1=t1, t2=t2, t3=t3, t4=t4, acausal_count=int(np.count_nonzero(t3 < t2)))
    return ts, header
