"""CSV input and output: numeric matrices, price panels, '#'-commented reports."""

import csv
import io
import math
from dataclasses import dataclass
from datetime import date

import numpy as np

from ..errors import DataError, DegenerateSeries, SeriesTooShort


def _parse_float(text, lineno, col):
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"line {lineno}, column {col}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise DataError(f"line {lineno}, column {col}: NaN/Inf entries are not allowed")
    return value


def read_matrix_csv(path):
    """Read an n x p numeric matrix (rows are observations).

    A first row that does not parse as numbers is taken as a header.  Blank
    lines and '#' comment lines are skipped.
    """
    rows, width = [], None
    with open(path, newline="") as fh:
        for lineno, fields in enumerate(csv.reader(fh), start=1):
            if not fields or all(not f.strip() for f in fields) or fields[0].lstrip().startswith("#"):
                continue
            if not rows and width is None and not _is_numeric_row(fields):
                width = len(fields)
                continue
            if width is None:
                width = len(fields)
            if len(fields) != width:
                raise DataError(
                    f"line {lineno}: expected {width} fields, found {len(fields)}"
                )
            rows.append([_parse_float(f.strip(), lineno, c + 1) for c, f in enumerate(fields)])
    if not rows:
        raise DataError(f"{path}: no rows of data")
    return np.array(rows, dtype=float)


def _is_numeric_row(fields):
    try:
        [float(f) for f in fields]
    except ValueError:
        return False
    return True


def write_matrix_csv(path, X, header=True):
    X = np.asarray(X, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow([f"x{j + 1}" for j in range(X.shape[1])])
        for row in X:
            w.writerow([repr(float(v)) for v in row])


def format_cell(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_report(metadata, header, rows):
    """'#'-prefixed ``key=value`` metadata, a header row, then data rows."""
    buf = io.StringIO()
    for key, value in metadata.items():
        buf.write(f"# {key}={value}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def write_report(path, metadata, header, rows):
    text = render_report(metadata, header, rows)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return text


@dataclass(frozen=True, eq=False)
class PricePanel:
    """Closing prices, ticker x date, NaN where a ticker has no quote."""

    tickers: tuple
    dates: tuple
    close: np.ndarray

    @property
    def missing(self):
        return np.isnan(self.close)

    def series(self, ticker):
        try:
            return self.close[self.tickers.index(ticker)]
        except ValueError:
            raise DataError(f"unknown ticker {ticker!r}") from None

    def __eq__(self, other):
        return (
            isinstance(other, PricePanel)
            and self.tickers == other.tickers
            and self.dates == other.dates
            and np.array_equal(self.close, other.close, equal_nan=True)
        )


def _parse_date(text, lineno):
    try:
        return date.fromisoformat(text.strip())
    except ValueError:
        raise DataError(f"line {lineno}: bad ISO-8601 date {text!r}") from None


def _parse_price(text, lineno):
    value = _parse_float(text.strip(), lineno, "close")
    if value <= 0:
        raise DataError(f"line {lineno}: non-positive price {value}")
    return value


def load_price_panel(path) -> PricePanel:
    """Load daily closing prices from long or wide CSV.

    Long format has a header ``date,ticker,close`` (any order, any case).
    Otherwise the file is read as wide format: the first column is the date
    and every other column is one ticker.  Empty cells are missing quotes.
    """
    with open(path, newline="") as fh:
        lines = [(i, row) for i, row in enumerate(csv.reader(fh), start=1)
                 if row and any(f.strip() for f in row) and not row[0].lstrip().startswith("#")]
    if not lines:
        raise DataError(f"{path}: no rows of data")
    header_line, header = lines[0]
    names = [h.strip().lower() for h in header]
    if sorted(names) == ["close", "date", "ticker"]:
        return _load_long(lines[1:], names)
    return _load_wide(lines[1:], [h.strip() for h in header], header_line)


def _assemble(quotes, tickers):
    dates = sorted({d for d, _ in quotes})
    tickers = list(tickers)
    close = np.full((len(tickers), len(dates)), np.nan)
    d_index = {d: j for j, d in enumerate(dates)}
    t_index = {t: i for i, t in enumerate(tickers)}
    for (d, t), v in quotes.items():
        close[t_index[t], d_index[d]] = v
    return PricePanel(tuple(tickers), tuple(dates), close)


def _load_long(lines, names):
    i_date, i_tick, i_close = names.index("date"), names.index("ticker"), names.index("close")
    quotes, seen_tickers = {}, {}
    for lineno, row in lines:
        if len(row) != len(names):
            raise DataError(f"line {lineno}: expected {len(names)} fields, found {len(row)}")
        d = _parse_date(row[i_date], lineno)
        t = row[i_tick].strip()
        if not t:
            raise DataError(f"line {lineno}: empty ticker")
        if (d, t) in quotes:
            raise DataError(f"line {lineno}: duplicate row for date {d} and ticker {t!r}")
        quotes[(d, t)] = _parse_price(row[i_close], lineno)
        seen_tickers.setdefault(t, None)
    if not quotes:
        raise DataError("no rows of data")
    return _assemble(quotes, sorted(seen_tickers))


def _load_wide(lines, header, header_line):
    tickers = header[1:]
    if not tickers or any(not t for t in tickers):
        raise DataError(f"line {header_line}: wide format needs a date column and named ticker columns")
    if len(set(tickers)) != len(tickers):
        raise DataError(f"line {header_line}: duplicate ticker column")
    quotes = {}
    for lineno, row in lines:
        if len(row) != len(header):
            raise DataError(f"line {lineno}: expected {len(header)} fields, found {len(row)}")
        d = _parse_date(row[0], lineno)
        for t, cell in zip(tickers, row[1:]):
            if not cell.strip():
                continue
            if (d, t) in quotes:
                raise DataError(f"line {lineno}: duplicate row for date {d}")
            quotes[(d, t)] = _parse_price(cell, lineno)
    if not quotes:
        raise DataError("no rows of data")
    return _assemble(quotes, sorted(tickers))


def required_length(n, stride, start=0):
    return start + 1 + stride * (n - 1)


def subsample_series(panel: PricePanel, ticker, n, stride=50, start=0, standardize=True):
    """Every ``stride``-th closing price of ``ticker``, n values from ``start``.

    With ``standardize`` the values are centred and divided by their sample
    standard deviation.
    """
    if n < 1 or stride < 1:
        raise ValueError("n and stride must be positive")
    s = panel.series(ticker)
    need = required_length(n, stride, start)
    if s.size < need:
        raise SeriesTooShort(ticker, need, s.size)
    x = s[start:need:stride]
    if np.any(np.isnan(x)):
        raise DataError(f"ticker {ticker!r} has missing prices at sampled dates")
    if not standardize:
        return x.copy()
    sd = x.std(ddof=1) if x.size > 1 else 0.0
    if not sd > 0:
        raise DegenerateSeries(f"ticker {ticker!r} is constant over the sampled dates")
    return (x - x.mean()) / sd
