"""
CSV and JSON writers for experiment results
"""

import csv
import io
import json
import logging
import math
import os
import sys

from .constants import APP_NAME, APP_VERSION, CSV_SIGNIFICANT_DIGITS, NATS_PER_BIT

logger = logging.getLogger(APP_NAME)


def format_number(value):
    """Render a cell with CSV_SIGNIFICANT_DIGITS significant digits; None is empty"""
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return f"{value:.{CSV_SIGNIFICANT_DIGITS}g}"
    return str(value)


def with_bits(row, *names):
    """Add <name>_bits next to every <name>_nats present in the row"""
    out = dict(row)
    for name in names:
        nats = out.get(f"{name}_nats")
        out[f"{name}_bits"] = None if nats is None else nats / NATS_PER_BIT
    return out


def header_comment(seeds, config_hash):
    return f"# {APP_NAME} {APP_VERSION} seeds={','.join(str(s) for s in seeds)} config={config_hash}"


def render_csv(rows, columns, seeds, config_hash):
    """
    CSV text with a header comment line

    Args:
        rows: list of dicts
        columns: Column order; missing cells are left empty
        seeds: Seed list for the header comment
        config_hash: Configuration hash for the header comment

    Returns:
        str
    """
    buffer = io.StringIO()
    buffer.write(header_comment(seeds, config_hash) + '\n')
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_number(row.get(column)) for column in columns])
    return buffer.getvalue()


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return format_number(value)
    return value


def render_json(rows, columns, seeds, config_hash):
    document = {
        'version': APP_VERSION,
        'seeds': list(seeds),
        'config_hash': config_hash,
        'columns': list(columns),
        'rows': [{column: _json_value(row.get(column)) for column in columns} for row in rows],
    }
    return json.dumps(document, indent=2, sort_keys=True) + '\n'


def write_results(rows, columns, seeds, config_hash, fmt='csv', out=None):
    """
    Write rows to a file, or to stdout when out is empty

    Returns:
        str: The rendered text
    """
    render = render_json if fmt == 'json' else render_csv
    text = render(rows, columns, seeds, config_hash)
    if out:
        directory = os.path.dirname(os.path.abspath(out))
        os.makedirs(directory, exist_ok=True)
        with open(out, 'w', newline='') as f:
            f.write(text)
        logger.info(f"Wrote {len(rows)} rows to {out}")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()
    return text


def read_csv(path):
    """Parse a results CSV back into (header comment, list of dict rows)"""
    with open(path, 'r', newline='') as f:
        comment = f.readline().rstrip('\n')
        reader = csv.DictReader(f)
        return comment, list(reader)
