"""Tick-event and reference-data types, CSV ingestion and session clipping.

Trades and quotes travel through the package as pandas DataFrames with the
columns listed in ``TRADE_COLUMNS`` / ``QUOTE_COLUMNS`` (quotes also carry a
boolean ``crossed`` flag).  The record dataclasses below describe one row and
are what ``iter_trades`` / ``iter_quotes`` yield.
"""
from __future__ import annotations

import csv
import datetime as dt
import logging
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np
import pandas as pd

from ._fmt import fmt_float

log = logging.getLogger(__name__)

NS_PER_SECOND = 1_000_000_000
SESSION_OPEN_NS = (9 * 3600 + 30 * 60) * NS_PER_SECOND
SESSION_CLOSE_NS = 16 * 3600 * NS_PER_SECOND
DEFAULT_SESSION = (SESSION_OPEN_NS, SESSION_CLOSE_NS)

TRADE_COLUMNS = ("timestamp_ns", "symbol", "price", "size", "exchange")
QUOTE_COLUMNS = (
    "timestamp_ns", "symbol", "bid_price", "bid_size",
    "ask_price", "ask_size", "exchange", "is_nbbo",
)
DAILY_COLUMNS = ("symbol", "date", "share_volume", "ask_high", "bid_low")

_TRUE = {"1", "true", "t", "y", "yes"}
_FALSE = {"0", "false", "f", "n", "no"}


class SchemaError(ValueError):
    """Input file header does not match the expected CSV schema."""


class RejectedRow(NamedTuple):
    line: int
    reason: str


@dataclass(frozen=True)
class TradeRecord:
    timestamp: int
    symbol: str
    price: float
    size: int
    exchange: str


@dataclass(frozen=True)
class QuoteRecord:
    timestamp: int
    symbol: str
    bid_price: float
    bid_size: int
    ask_price: float
    ask_size: int
    exchange: str
    is_nbbo: bool
    crossed: bool = False

    @property
    def mid(self) -> float:
        return (self.bid_price + self.ask_price) / 2


@dataclass(frozen=True)
class DailyReference:
    """Prevailing-month normalizers for one symbol.

    ``adtv`` is the mean daily share volume and ``adrv`` the mean of
    (daily ask high - daily bid low) over ``[month_start, month_end]``.
    """

    symbol: str
    adtv: float
    adrv: float
    month_start: dt.date
    month_end: dt.date

    def __post_init__(self):
        if not self.adtv > 0:
            raise ValueError(f"{self.symbol}: adtv must be positive, got {self.adtv}")
        if not self.adrv > 0:
            raise ValueError(f"{self.symbol}: adrv must be positive, got {self.adrv}")
        if self.month_end < self.month_start:
            raise ValueError(f"{self.symbol}: reference window is reversed")

    def check_precedes(self, day: dt.date) -> None:
        if self.month_end >= day:
            raise ValueError(
                f"{self.symbol}: reference window ends {self.month_end}, "
                f"not before analysis day {day}"
            )


# ---------------------------------------------------------------------------
# CSV parsing
# ---------------------------------------------------------------------------


def _read_raw(path, columns: Sequence[str], text: Sequence[str] | None = None) -> pd.DataFrame:
    """Read a CSV after checking its header.

    Columns in ``text`` (all, if None) stay strings.  The rest are left to the
    C parser: clean numeric columns come back typed, and any column holding a
    malformed field falls back to strings for ``_numeric`` to sort out.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    if os.path.getsize(path) == 0:
        return pd.DataFrame({c: pd.Series(dtype=str) for c in columns})
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), None)
    header = [h.strip() for h in header or []]
    if header != list(columns):
        raise SchemaError(
            f"{path}: header {','.join(header)!r} does not match {','.join(columns)!r}"
        )
    return pd.read_csv(
        path, dtype=str if text is None else {c: str for c in text},
        keep_default_na=False, skip_blank_lines=False, encoding="utf-8",
        float_precision="round_trip",
    )


def _numeric(raw: pd.Series) -> pd.Series:
    if raw.dtype != object:
        return raw.astype(float)
    values = pd.to_numeric(raw, errors="coerce")
    retry = values.isna()
    if retry.any():  # padded fields are rare; only strip those
        values[retry] = pd.to_numeric(raw[retry].str.strip(), errors="coerce")
    return values


def _stripped(raw: pd.Series) -> pd.Series:
    # few distinct values (symbols, exchange codes): strip the categories only
    cat = raw.astype("category")
    cat = cat.cat.rename_categories(cat.cat.categories.str.strip()) \
        if cat.cat.categories.str.strip().is_unique else raw.str.strip().astype("category")
    return cat.astype(str)


def _integral(values: pd.Series) -> pd.Series:
    # NaN for anything that is not a whole number
    return values.where(np.isfinite(values) & (values == np.floor(values)))


def _collect_rejects(bad: dict[str, pd.Series], n: int) -> tuple[np.ndarray, list[RejectedRow]]:
    keep = np.ones(n, dtype=bool)
    reasons: dict[int, str] = {}
    for reason, mask in bad.items():
        for i in np.flatnonzero(mask.to_numpy()):
            reasons.setdefault(int(i), reason)
        keep &= ~mask.to_numpy()
    rejects = [RejectedRow(i + 2, reasons[i]) for i in sorted(reasons)]
    return keep, rejects


def _sort_stable(frame: pd.DataFrame) -> pd.DataFrame:
    frame = frame.assign(_row=np.arange(len(frame)))
    frame = frame.sort_values(["symbol", "timestamp_ns", "_row"], kind="mergesort")
    return frame.drop(columns="_row").reset_index(drop=True)


def parse_trades(path) -> tuple[pd.DataFrame, list[RejectedRow]]:
    """Read a trades CSV.

    Returns the valid rows sorted by (symbol, timestamp) with file order kept
    for equal timestamps, plus one ``RejectedRow`` per malformed line.
    """
    raw = _read_raw(path, TRADE_COLUMNS, text=("symbol", "exchange"))
    ts = _integral(_numeric(raw["timestamp_ns"]))
    price = _numeric(raw["price"])
    size = _integral(_numeric(raw["size"]))
    symbol = _stripped(raw["symbol"])
    exchange = _stripped(raw["exchange"])
    keep, rejects = _collect_rejects({
        "bad timestamp": ts.isna(),
        "empty symbol": symbol == "",
        "bad price": price.isna() | ~np.isfinite(price),
        "non-positive price": price <= 0,
        "bad size": size.isna(),
        "non-positive size": size <= 0,
        "bad exchange": exchange.str.len() != 1,
    }, len(raw))
    frame = pd.DataFrame({
        "timestamp_ns": ts[keep].astype(np.int64),
        "symbol": symbol[keep],
        "price": price[keep].astype(float),
        "size": size[keep].astype(np.int64),
        "exchange": exchange[keep],
    })
    if rejects:
        log.warning("%s: rejected %d trade rows", path, len(rejects))
    return _sort_stable(frame), rejects


def _parse_flag(raw: pd.Series) -> pd.Series:
    cat = raw.astype("category")
    low = cat.cat.categories.str.strip().str.lower()
    value = np.where(low.isin(_TRUE), 1.0, np.where(low.isin(_FALSE), 0.0, np.nan))
    codes = cat.cat.codes.to_numpy()
    out = np.where(codes >= 0, value[codes] if len(value) else np.nan, np.nan)
    return pd.Series(out, index=raw.index).map({1.0: True, 0.0: False})


def parse_quotes(path) -> tuple[pd.DataFrame, list[RejectedRow]]:
    """Read a quotes CSV; as ``parse_trades`` plus a ``crossed`` column.

    Crossed quotes (bid > ask) are kept but flagged; the measure engine and the
    classifiers drop them.  Locked quotes (bid == ask) are ordinary rows.
    """
    raw = _read_raw(path, QUOTE_COLUMNS, text=("symbol", "exchange", "is_nbbo"))
    ts = _integral(_numeric(raw["timestamp_ns"]))
    bid = _numeric(raw["bid_price"])
    ask = _numeric(raw["ask_price"])
    bsz = _integral(_numeric(raw["bid_size"]))
    asz = _integral(_numeric(raw["ask_size"]))
    symbol = _stripped(raw["symbol"])
    exchange = _stripped(raw["exchange"])
    nbbo = _parse_flag(raw["is_nbbo"])
    keep, rejects = _collect_rejects({
        "bad timestamp": ts.isna(),
        "empty symbol": symbol == "",
        "bad bid price": bid.isna() | ~np.isfinite(bid),
        "non-positive bid price": bid <= 0,
        "bad ask price": ask.isna() | ~np.isfinite(ask),
        "non-positive ask price": ask <= 0,
        "bad bid size": bsz.isna() | (bsz < 0),
        "bad ask size": asz.isna() | (asz < 0),
        "bad exchange": exchange.str.len() != 1,
        "bad is_nbbo flag": nbbo.isna(),
    }, len(raw))
    frame = pd.DataFrame({
        "timestamp_ns": ts[keep].astype(np.int64),
        "symbol": symbol[keep],
        "bid_price": bid[keep].astype(float),
        "bid_size": bsz[keep].astype(np.int64),
        "ask_price": ask[keep].astype(float),
        "ask_size": asz[keep].astype(np.int64),
        "exchange": exchange[keep],
        "is_nbbo": nbbo[keep].astype(bool),
    })
    frame["crossed"] = frame["bid_price"] > frame["ask_price"]
    if rejects:
        log.warning("%s: rejected %d quote rows", path, len(rejects))
    n_crossed = int(frame["crossed"].sum())
    if n_crossed:
        log.info("%s: %d crossed quotes flagged", path, n_crossed)
    return _sort_stable(frame), rejects


def concat_streams(frames: Iterable[pd.DataFrame]) -> pd.DataFrame:
    """Merge separately parsed chunks of one stream back into sorted order."""
    return _sort_stable(pd.concat(list(frames), ignore_index=True))


def write_trades(frame: pd.DataFrame, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRADE_COLUMNS)
        for row in frame.itertuples(index=False):
            w.writerow([row.timestamp_ns, row.symbol, fmt_float(row.price), row.size, row.exchange])


def write_quotes(frame: pd.DataFrame, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(QUOTE_COLUMNS)
        for row in frame.itertuples(index=False):
            w.writerow([
                row.timestamp_ns, row.symbol, fmt_float(row.bid_price), row.bid_size,
                fmt_float(row.ask_price), row.ask_size, row.exchange, int(row.is_nbbo),
            ])


def iter_trades(frame: pd.DataFrame) -> Iterator[TradeRecord]:
    for row in frame.itertuples(index=False):
        yield TradeRecord(int(row.timestamp_ns), row.symbol, float(row.price),
                          int(row.size), row.exchange)


def iter_quotes(frame: pd.DataFrame) -> Iterator[QuoteRecord]:
    crossed = "crossed" in frame.columns
    for row in frame.itertuples(index=False):
        yield QuoteRecord(
            int(row.timestamp_ns), row.symbol, float(row.bid_price), int(row.bid_size),
            float(row.ask_price), int(row.ask_size), row.exchange, bool(row.is_nbbo),
            bool(row.crossed) if crossed else row.bid_price > row.ask_price,
        )


# ---------------------------------------------------------------------------
# Daily reference
# ---------------------------------------------------------------------------


class DailyRow(NamedTuple):
    date: dt.date
    share_volume: float
    ask_high: float
    bid_low: float


def compute_daily_reference(symbol: str, daily_rows: Iterable, window=None) -> DailyReference:
    """Average the prevailing-month rows of one symbol into a ``DailyReference``.

    ``window`` is an inclusive ``(start, end)`` date pair; ``None`` keeps every
    row.  Rows with ``ask_high < bid_low`` are rejected with a warning.
    """
    days = []
    for row in daily_rows:
        row = DailyRow(*row)
        if window is not None and not (window[0] <= row.date <= window[1]):
            continue
        if row.ask_high < row.bid_low:
            log.warning("%s %s: ask_high < bid_low, row rejected", symbol, row.date)
            continue
        days.append(row)
    if not days:
        raise ValueError(f"{symbol}: no reference days")
    volumes = np.array([r.share_volume for r in days], dtype=float)
    ranges = np.array([r.ask_high - r.bid_low for r in days], dtype=float)
    dates = [r.date for r in days]
    return DailyReference(
        symbol=symbol,
        adtv=float(volumes.mean()),
        adrv=float(ranges.mean()),
        month_start=window[0] if window is not None else min(dates),
        month_end=window[1] if window is not None else max(dates),
    )


def parse_daily(path) -> tuple[dict[str, list[DailyRow]], list[RejectedRow]]:
    """Read the daily reference CSV into per-symbol row lists."""
    raw = _read_raw(path, DAILY_COLUMNS)
    out: dict[str, list[DailyRow]] = {}
    rejects = []
    for i, rec in enumerate(raw.itertuples(index=False)):
        try:
            symbol = rec.symbol.strip()
            if not symbol:
                raise ValueError("empty symbol")
            row = DailyRow(
                dt.date.fromisoformat(rec.date.strip()),
                float(rec.share_volume), float(rec.ask_high), float(rec.bid_low),
            )
            if not row.share_volume >= 0 or not np.isfinite(row.share_volume):
                raise ValueError("bad share_volume")
        except (ValueError, AttributeError) as exc:
            rejects.append(RejectedRow(i + 2, str(exc)))
            continue
        out.setdefault(symbol, []).append(row)
    return out, rejects


def load_daily_references(path, window=None) -> tuple[dict[str, DailyReference], list[RejectedRow]]:
    rows, rejects = parse_daily(path)
    refs = {}
    for symbol in sorted(rows):
        try:
            refs[symbol] = compute_daily_reference(symbol, rows[symbol], window)
        except ValueError as exc:
            log.warning("daily reference skipped: %s", exc)
    return refs, rejects


# ---------------------------------------------------------------------------
# Session handling
# ---------------------------------------------------------------------------


def parse_clock(text: str) -> int:
    """``"09:30"`` or ``"09:30:00.250"`` -> nanoseconds since midnight."""
    parts = text.strip().split(":")
    if len(parts) not in (2, 3):
        raise ValueError(f"bad clock time {text!r}")
    hours, minutes = int(parts[0]), int(parts[1])
    seconds = float(parts[2]) if len(parts) == 3 else 0.0
    if not (0 <= hours <= 24 and 0 <= minutes < 60 and 0 <= seconds < 60):
        raise ValueError(f"bad clock time {text!r}")
    return (hours * 3600 + minutes * 60) * NS_PER_SECOND + round(seconds * NS_PER_SECOND)


def _stream_key(frame: pd.DataFrame) -> list[str]:
    # NBBO rows form one stream per symbol; exchange rows one per venue
    return ["symbol", "is_nbbo", "exchange"]


def session_clip(records: pd.DataFrame, session=DEFAULT_SESSION) -> pd.DataFrame:
    """Keep records with ``open <= t < close``.

    For quotes the last non-crossed pre-open record of every stream (the NBBO
    stream, and each exchange's stream) is kept as the opening prevailing
    state; it keeps its pre-open timestamp so the engine never counts it as an
    in-session event.
    """
    open_ns, close_ns = session
    if open_ns >= close_ns:
        raise ValueError("session open must precede close")
    t = records["timestamp_ns"].to_numpy()
    inside = (t >= open_ns) & (t < close_ns)
    if "bid_price" not in records.columns:
        return records[inside].reset_index(drop=True)
    pre = records[(t < open_ns) & ~records["crossed"].to_numpy()]
    seeds = pre.groupby(_stream_key(pre), sort=False).tail(1)
    keep = inside.copy()
    keep[records.index.get_indexer(seeds.index)] = True
    return records[keep].reset_index(drop=True)


def nbbo_stream(quotes: pd.DataFrame) -> pd.DataFrame:
    """Non-crossed NBBO rows, or a best-quote stream built from exchange rows
    when the input carries no NBBO records."""
    clean = quotes[~quotes["crossed"].to_numpy(dtype=bool)]
    nbbo = clean[clean["is_nbbo"].to_numpy(dtype=bool)]
    if len(nbbo) or not len(clean):
        return nbbo.reset_index(drop=True)
    return consolidate_nbbo(clean)


def consolidate_nbbo(quotes: pd.DataFrame) -> pd.DataFrame:
    """Best bid/offer across exchanges after every exchange update.

    Size at the best price is the sum over exchanges quoting that price.
    Consolidated states that come out crossed are flagged like parsed ones.
    """
    rows = []
    for symbol, group in quotes.groupby("symbol", sort=True):
        state: dict[str, tuple[float, int, float, int]] = {}
        last = None
        for r in group.itertuples(index=False):
            state[r.exchange] = (r.bid_price, r.bid_size, r.ask_price, r.ask_size)
            bb = max(s[0] for s in state.values())
            ba = min(s[2] for s in state.values())
            bsz = sum(s[1] for s in state.values() if s[0] == bb)
            asz = sum(s[3] for s in state.values() if s[2] == ba)
            cur = (bb, bsz, ba, asz)
            if cur != last:
                rows.append((r.timestamp_ns, symbol, bb, bsz, ba, asz, "*", True))
                last = cur
    frame = pd.DataFrame(rows, columns=list(QUOTE_COLUMNS))
    frame = frame.astype({"timestamp_ns": np.int64, "bid_size": np.int64,
                          "ask_size": np.int64, "bid_price": float,
                          "ask_price": float, "is_nbbo": bool})
    frame["crossed"] = frame["bid_price"] > frame["ask_price"]
    return frame
