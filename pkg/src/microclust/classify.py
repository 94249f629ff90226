"""Buyer/seller-initiated trade classification: CLNV (default), LR and EMO.

Every algorithm uses the NBBO quote prevailing strictly before the trade and
falls back to the tick test, which compares a trade with the most recent prior
trade of the same symbol at a different price.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from typing import Iterator

import numpy as np
import pandas as pd

from .ingest import TradeRecord, iter_trades, nbbo_stream

# Relative tolerance for "price equals bid/ask/mid" comparisons.
PRICE_RTOL = 1e-9
CLNV_BAND = 0.3


class Direction(enum.IntEnum):
    SELL = -1
    UNCLASSIFIED = 0
    BUY = 1


class Rule(enum.IntEnum):
    TICK = 0
    QUOTE = 1


@dataclass(frozen=True)
class ClassifiedTrade:
    trade: TradeRecord
    direction: Direction
    rule_used: Rule
    prevailing_bid: float
    prevailing_ask: float


def tick_test(prices: np.ndarray) -> np.ndarray:
    """+1/-1 against the last differing prior price, 0 when there is none."""
    prices = np.asarray(prices, dtype=float)
    ticks = np.zeros(len(prices), dtype=np.int8)
    if len(prices) > 1:
        ticks[1:] = np.sign(np.diff(prices))
    # carry the last non-zero tick forward over zero ticks
    idx = np.where(ticks != 0, np.arange(len(ticks)), 0)
    np.maximum.accumulate(idx, out=idx)
    return ticks[idx]


def prevailing_index(quote_times: np.ndarray, trade_times: np.ndarray) -> np.ndarray:
    """Index of the last quote strictly before each trade (-1 if none)."""
    return np.searchsorted(quote_times, trade_times, side="left") - 1


def _quote_rule(method: str, price, bid, ask):
    tol = PRICE_RTOL * np.maximum(np.abs(ask), np.abs(bid))
    if method == "clnv":
        band = CLNV_BAND * (ask - bid)
        buy = (price >= ask - band - tol) & (price <= ask + tol)
        sell = (price <= bid + band + tol) & (price >= bid - tol)
    elif method == "lr":
        mid = (bid + ask) / 2
        buy = price > mid + tol
        sell = price < mid - tol
    elif method == "emo":
        buy = np.abs(price - ask) <= tol
        sell = np.abs(price - bid) <= tol
    else:
        raise ValueError(f"unknown classifier {method!r}")
    sell &= ~buy  # locked quotes: the ask test wins
    return buy, sell


def _classify_symbol(method: str, trades: pd.DataFrame, nbbo: pd.DataFrame) -> pd.DataFrame:
    price = trades["price"].to_numpy(dtype=float)
    idx = prevailing_index(nbbo["timestamp_ns"].to_numpy(), trades["timestamp_ns"].to_numpy())
    has_quote = idx >= 0
    bid = np.full(len(price), np.nan)
    ask = np.full(len(price), np.nan)
    bid[has_quote] = nbbo["bid_price"].to_numpy()[idx[has_quote]]
    ask[has_quote] = nbbo["ask_price"].to_numpy()[idx[has_quote]]

    with np.errstate(invalid="ignore"):
        buy, sell = _quote_rule(method, price, bid, ask)
    buy &= has_quote
    sell &= has_quote
    by_quote = buy | sell
    direction = np.where(by_quote, np.where(buy, 1, -1), tick_test(price)).astype(np.int8)
    out = trades.copy()
    out["direction"] = direction
    out["rule"] = np.where(by_quote, int(Rule.QUOTE), int(Rule.TICK)).astype(np.int8)
    out["prevailing_bid"] = bid
    out["prevailing_ask"] = ask
    return out


def classify(trades: pd.DataFrame, quotes: pd.DataFrame, method: str = "clnv") -> pd.DataFrame:
    """Classify every trade; symbols are handled independently.

    Adds ``direction`` (+1 buy, -1 sell, 0 unclassified), ``rule`` (1 quote
    rule, 0 tick test), ``prevailing_bid`` and ``prevailing_ask`` columns.
    ``quotes`` must already be time-sorted (as ``parse_quotes`` returns them).
    """
    method = method.lower()
    if method not in ("clnv", "lr", "emo"):
        raise ValueError(f"unknown classifier {method!r}")
    parts = []
    quote_groups = dict(tuple(quotes.groupby("symbol", sort=False)))
    empty = quotes.iloc[:0]
    for symbol, group in trades.groupby("symbol", sort=False):
        nbbo = nbbo_stream(quote_groups.get(symbol, empty))
        parts.append(_classify_symbol(method, group, nbbo))
    if not parts:
        out = trades.copy()
        for col, dtype in (("direction", np.int8), ("rule", np.int8),
                           ("prevailing_bid", float), ("prevailing_ask", float)):
            out[col] = pd.Series(dtype=dtype)
        return out
    return pd.concat(parts).loc[trades.index]


def classify_clnv(trades, quotes):
    """Upper 30% of the spread (ask inclusive) buys, lower 30% sells, rest tick test."""
    return classify(trades, quotes, "clnv")


def classify_lr(trades, quotes):
    """Above the midpoint buys, below sells, at the midpoint tick test."""
    return classify(trades, quotes, "lr")


def classify_emo(trades, quotes):
    """At the ask buys, at the bid sells, anything else tick test."""
    return classify(trades, quotes, "emo")


def iter_classified(frame: pd.DataFrame) -> Iterator[ClassifiedTrade]:
    for rec, d, r, b, a in zip(iter_trades(frame), frame["direction"], frame["rule"],
                               frame["prevailing_bid"], frame["prevailing_ask"]):
        yield ClassifiedTrade(rec, Direction(int(d)), Rule(int(r)), float(b), float(a))


def write_debug_csv(frame: pd.DataFrame, path) -> None:
    """Dump ``timestamp_ns,price,direction,rule_used`` for inspection."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp_ns", "price", "direction", "rule_used"])
        for t, p, d, r in zip(frame["timestamp_ns"], frame["price"],
                              frame["direction"], frame["rule"]):
            w.writerow([t, repr(float(p)), Direction(int(d)).name.lower(),
                        Rule(int(r)).name.lower()])
