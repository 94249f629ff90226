"""Per-symbol aggregation of classified trades and quotes into 10-second measures.

All families are computed for every interval at once.  Intervals are
half-open ``[t0, t0 + step)``; an event stamped exactly on a boundary belongs
to the later interval.  Quote-derived series are right-continuous step
functions seeded by the last pre-open quote.  Missing values are NaN.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .classify import classify, prevailing_index
from .ingest import (DEFAULT_SESSION, NS_PER_SECOND, DailyReference,
                     nbbo_stream, session_clip)
from .panel import MeasurePanel
from .registry import Family, MeasureId, resolve_registry
from .stepseries import IntervalPieces

log = logging.getLogger(__name__)

DEFAULT_INTERVAL_NS = 10 * NS_PER_SECOND


@dataclass
class SymbolDay:
    """Session-clipped events of one symbol plus its daily normalizers."""

    symbol: str
    trades: pd.DataFrame
    quotes: pd.DataFrame
    reference: DailyReference


def split_by_symbol(trades, quotes, references, session=DEFAULT_SESSION, symbols=None):
    """Group parsed streams into clipped ``SymbolDay`` objects, sorted by symbol.

    Symbols without a daily reference are skipped with a warning.
    """
    trades = session_clip(trades, session)
    quotes = session_clip(quotes, session)
    tg = dict(tuple(trades.groupby("symbol", sort=False)))
    qg = dict(tuple(quotes.groupby("symbol", sort=False)))
    names = sorted(set(tg) | set(qg))
    if symbols is not None:
        names = [s for s in names if s in set(symbols)]
    days = []
    for sym in names:
        if sym not in references:
            log.warning("%s: no daily reference, symbol skipped", sym)
            continue
        days.append(SymbolDay(sym, tg.get(sym, trades.iloc[:0]).reset_index(drop=True),
                              qg.get(sym, quotes.iloc[:0]).reset_index(drop=True),
                              references[sym]))
    return days


def hhi(values) -> float:
    """Sum of squared shares of the total; NaN when the total is zero."""
    v = np.asarray(values, dtype=float)
    total = v.sum()
    if not total > 0:
        return float("nan")
    return float(np.sum((v / total) ** 2))


def _hhi_rows(matrix: np.ndarray) -> np.ndarray:
    """Column-wise HHI of an (exchanges x intervals) matrix."""
    total = matrix.sum(axis=0)
    out = np.full(matrix.shape[1], np.nan)
    pos = total > 0
    out[pos] = np.sum((matrix[:, pos] / total[pos]) ** 2, axis=0)
    return out


def imbalance(a, b) -> np.ndarray:
    """(a - b) / (a + b); NaN where the denominator is zero or missing."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    den = a + b
    out = np.full(np.broadcast(a, b).shape, np.nan)
    ok = den > 0
    out[ok] = (a - b)[ok] / den[ok]
    return out


@dataclass
class _Stream:
    """Time-sorted event arrays; ``ids`` is the interval index or -1 outside."""

    t: np.ndarray
    ids: np.ndarray
    cols: dict

    def __getitem__(self, key):
        return self.cols[key]

    def where(self, mask) -> "_Stream":
        return _Stream(self.t[mask], self.ids[mask], {k: v[mask] for k, v in self.cols.items()})

    @property
    def live(self) -> np.ndarray:
        return self.ids >= 0


@dataclass
class IntervalContext:
    """Everything one symbol's measures need, shared across families."""

    symbol: str
    edges: np.ndarray
    reference: DailyReference
    nbbo: _Stream
    venues: dict
    trades: _Stream
    shares_normalizer: float
    _memo: dict = field(default_factory=dict, repr=False)

    @property
    def n_intervals(self) -> int:
        return len(self.edges) - 1

    def interval_ids(self, t: np.ndarray) -> np.ndarray:
        step = self.edges[1] - self.edges[0]
        ids = (t - self.edges[0]) // step
        ids[(t < self.edges[0]) | (t >= self.edges[-1])] = -1
        return ids

    def pieces(self, key, times, values) -> IntervalPieces:
        if key not in self._memo:
            self._memo[key] = IntervalPieces(times, values, self.edges)
        return self._memo[key]

    def count(self, ids) -> np.ndarray:
        return np.bincount(ids[ids >= 0], minlength=self.n_intervals).astype(float)

    def total(self, ids, weights) -> np.ndarray:
        live = ids >= 0
        return np.bincount(ids[live], weights=weights[live], minlength=self.n_intervals)

    def reduce(self, ids, values, ufunc) -> np.ndarray:
        """``ufunc.reduceat`` over each interval's events (ids sorted); NaN when empty."""
        live = ids >= 0
        ids, values = ids[live], values[live]
        out = np.full(self.n_intervals, np.nan)
        if not len(ids):
            return out
        k = np.arange(self.n_intervals)
        lo = np.searchsorted(ids, k, side="left")
        hi = np.searchsorted(ids, k, side="right")
        full = hi > lo
        out[full] = ufunc.reduceat(values, lo[full])
        return out

    def last_event(self, ids, values) -> np.ndarray:
        live = ids >= 0
        ids, values = ids[live], values[live]
        out = np.full(self.n_intervals, np.nan)
        if len(ids):
            hi = np.searchsorted(ids, np.arange(self.n_intervals), side="right")
            full = hi > np.searchsorted(ids, np.arange(self.n_intervals), side="left")
            out[full] = values[hi[full] - 1]
        return out

    def avg_gap(self, ids, t) -> np.ndarray:
        """Mean spacing (seconds) between an interval's events; needs two."""
        n = self.count(ids)
        first = self.reduce(ids, t.astype(float), np.minimum)
        last = self.reduce(ids, t.astype(float), np.maximum)
        out = np.full(self.n_intervals, np.nan)
        ok = n >= 2
        out[ok] = (last[ok] - first[ok]) / (n[ok] - 1) / NS_PER_SECOND
        return out


def _stream(ctx_ids, t, **cols) -> _Stream:
    return _Stream(np.asarray(t, dtype=np.int64), ctx_ids(np.asarray(t, dtype=np.int64)),
                   {k: np.asarray(v) for k, v in cols.items()})


def _changes(values: np.ndarray) -> np.ndarray:
    """True for every record whose value differs from the previous record's."""
    out = np.ones(len(values), dtype=bool)
    out[1:] = values[1:] != values[:-1]
    return out


def make_context(day: SymbolDay, *, session=DEFAULT_SESSION, interval_ns=DEFAULT_INTERVAL_NS,
                 classifier="clnv", shares_normalizer="adtv") -> IntervalContext:
    open_ns, close_ns = session
    if interval_ns <= 0:
        raise ValueError("interval length must be positive")
    if (close_ns - open_ns) % interval_ns:
        raise ValueError("session length must be a whole number of intervals")
    edges = np.arange(open_ns, close_ns + 1, interval_ns, dtype=np.int64)
    ref = day.reference
    if shares_normalizer == "adtv":
        norm = ref.adtv
    elif shares_normalizer == "adrv":
        norm = ref.adrv
    else:
        raise ValueError(f"unknown shares normalizer {shares_normalizer!r}")

    trades = day.trades
    if "direction" not in trades.columns:
        trades = classify(trades, day.quotes, classifier) if len(trades) else trades.assign(
            direction=np.zeros(0, np.int8))
    quotes = day.quotes[~day.quotes["crossed"]] if len(day.quotes) else day.quotes
    nbbo = nbbo_stream(quotes) if len(quotes) else quotes

    ctx = IntervalContext(day.symbol, edges, ref, None, {}, None, float(norm))
    nb = _stream(ctx.interval_ids, nbbo["timestamp_ns"].to_numpy() if len(nbbo) else [],
                 bid=nbbo["bid_price"].to_numpy(float) if len(nbbo) else np.zeros(0),
                 ask=nbbo["ask_price"].to_numpy(float) if len(nbbo) else np.zeros(0),
                 bid_size=nbbo["bid_size"].to_numpy(float) if len(nbbo) else np.zeros(0),
                 ask_size=nbbo["ask_size"].to_numpy(float) if len(nbbo) else np.zeros(0))
    ctx.nbbo = nb

    venue_rows = quotes[~quotes["is_nbbo"]] if len(quotes) else quotes
    for ex, g in (venue_rows.groupby("exchange", sort=True) if len(venue_rows) else []):
        ctx.venues[ex] = _stream(ctx.interval_ids, g["timestamp_ns"].to_numpy(),
                                 bid=g["bid_price"].to_numpy(float),
                                 ask=g["ask_price"].to_numpy(float),
                                 bid_size=g["bid_size"].to_numpy(float),
                                 ask_size=g["ask_size"].to_numpy(float))

    t = trades["timestamp_ns"].to_numpy() if len(trades) else np.zeros(0, np.int64)
    price = trades["price"].to_numpy(float) if len(trades) else np.zeros(0)
    mid = np.full(len(t), np.nan)
    if len(t) and len(nb.t):
        idx = prevailing_index(nb.t, t)
        ok = idx >= 0
        mid[ok] = (nb["bid"][idx[ok]] + nb["ask"][idx[ok]]) / 2
    ctx.trades = _stream(
        ctx.interval_ids, t, price=price,
        size=trades["size"].to_numpy(float) if len(trades) else np.zeros(0),
        exchange=trades["exchange"].to_numpy(object) if len(trades) else np.zeros(0, object),
        direction=trades["direction"].to_numpy(np.int8) if len(trades) else np.zeros(0, np.int8),
        mid=mid,
    )
    # trades only count inside the session; pre-open trades never seed state
    ctx.trades = ctx.trades.where(ctx.trades.live)
    return ctx


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------


def _nbbo_pieces(ctx, name, func):
    nb = ctx.nbbo
    return ctx.pieces(("nbbo", name), nb.t, func(nb))


def compute_return(ctx: IntervalContext) -> dict:
    nb = ctx.nbbo
    mid = (nb["bid"] + nb["ask"]) / 2
    idx = np.searchsorted(nb.t, ctx.edges - 1, side="right") - 1
    q = np.full(len(ctx.edges), np.nan)
    q[idx >= 0] = mid[idx[idx >= 0]]
    with np.errstate(invalid="ignore", divide="ignore"):
        r = q[1:] / q[:-1] - 1
    return {"return": r}


def compute_spreads(ctx: IntervalContext) -> dict:
    dollar = _nbbo_pieces(ctx, "spread", lambda s: s["ask"] - s["bid"])
    prop = _nbbo_pieces(ctx, "prop.spread",
                        lambda s: 100 * (s["ask"] - s["bid"]) / ((s["ask"] + s["bid"]) / 2))
    tr = ctx.trades
    eff = 2 * np.abs(tr["price"] - tr["mid"])
    prop_eff = 100 * eff / tr["mid"]
    ok = ~np.isnan(eff)
    ids, size = tr.ids[ok], tr["size"][ok]
    den = ctx.total(ids, size)
    out = {
        "last.bid.ask.spread": dollar.last(),
        "weighted.bid.ask.spread": dollar.mean(),
        "last.prop.bid.ask.spread": prop.last(),
        "weighted.prop.bid.ask.spread": prop.mean(),
        "last.eff.spread": ctx.last_event(ids, eff[ok]),
        "last.prop.eff.spread": ctx.last_event(ids, prop_eff[ok]),
    }
    with np.errstate(invalid="ignore", divide="ignore"):
        out["weighted.eff.spread"] = np.where(den > 0, ctx.total(ids, size * eff[ok]) / den, np.nan)
        out["weighted.prop.eff.spread"] = np.where(
            den > 0, ctx.total(ids, size * prop_eff[ok]) / den, np.nan)
    return out


def compute_volatility(ctx: IntervalContext) -> dict:
    adrv = ctx.reference.adrv
    if not adrv > 0:
        raise ValueError("adrv must be positive")
    out = {}
    for name, func in (("bid", lambda s: s["bid"]), ("ask", lambda s: s["ask"]),
                       ("mid.quote", lambda s: (s["bid"] + s["ask"]) / 2)):
        p = _nbbo_pieces(ctx, name, func)
        out[f"{name}.volatility"] = (p.max() - p.min()) / adrv
    tr = ctx.trades
    hi = ctx.reduce(tr.ids, tr["price"], np.maximum)
    lo = ctx.reduce(tr.ids, tr["price"], np.minimum)
    out["trade.price.volatility"] = (hi - lo) / adrv
    return out


def _trade_pieces(ctx, key, trades: _Stream, values):
    return ctx.pieces(("trades",) + key, trades.t, values)


def compute_trade_activity(ctx: IntervalContext) -> dict:
    tr = ctx.trades
    out = {
        "num.trades": ctx.count(tr.ids),
        "avg.time.between.trades": ctx.avg_gap(tr.ids, tr.t),
    }
    dollar = tr["price"] * tr["size"]
    for unit, values in (("dollar", dollar), ("shares", tr["size"])):
        p = _trade_pieces(ctx, ("all", unit), tr, values)
        out[f"last.trade.{unit}"] = p.last()
        out[f"weighted.trade.{unit}"] = p.mean()
        out[f"total.trade.{unit}"] = ctx.total(tr.ids, values)
    for agg in ("last", "weighted", "total"):
        out[f"{agg}.trade.shares.norm"] = out[f"{agg}.trade.shares"] / ctx.shares_normalizer
    return out


def compute_trade_imbalance(ctx: IntervalContext) -> dict:
    tr = ctx.trades
    buys = tr.where(tr["direction"] == 1)
    sells = tr.where(tr["direction"] == -1)
    pairs = {"num.buy.sell": (ctx.count(buys.ids), ctx.count(sells.ids))}
    for unit, suffix in (("shares", "vol"), ("dollar", "dollar")):
        sides = []
        for label, s in (("buy", buys), ("sell", sells)):
            values = s["size"] if unit == "shares" else s["price"] * s["size"]
            p = _trade_pieces(ctx, (label, unit), s, values)
            sides.append((p.last(), p.mean(), ctx.total(s.ids, values)))
        for i, agg in enumerate(("last", "weighted", "total")):
            pairs[f"{agg}.buy.sell.{suffix}"] = (sides[0][i], sides[1][i])
    out = {}
    for base, (b, s) in pairs.items():
        d = imbalance(b, s)
        out[f"directional.{base}"] = d
        out[f"undirectional.{base}"] = np.abs(d)
    return out


def _quote_changes(s: _Stream):
    return _changes(s["bid"]), _changes(s["ask"])


def compute_quote_activity(ctx: IntervalContext) -> dict:
    nb = ctx.nbbo
    bid_chg, ask_chg = _quote_changes(nb)
    return {
        "num.records": ctx.count(nb.ids),
        "num.bid.changes": ctx.count(nb.ids[bid_chg]),
        "num.ask.changes": ctx.count(nb.ids[ask_chg]),
        "avg.time.between.records": ctx.avg_gap(nb.ids, nb.t),
        "avg.time.between.bid.changes": ctx.avg_gap(nb.ids[bid_chg], nb.t[bid_chg]),
        "avg.time.between.ask.changes": ctx.avg_gap(nb.ids[ask_chg], nb.t[ask_chg]),
    }


_DEPTH_SERIES = {
    ("ask", "shares"): lambda s: s["ask_size"],
    ("bid", "shares"): lambda s: s["bid_size"],
    ("diff", "shares"): lambda s: s["ask_size"] - s["bid_size"],
    ("abs.diff", "shares"): lambda s: np.abs(s["ask_size"] - s["bid_size"]),
    ("ask", "dollar"): lambda s: s["ask"] * s["ask_size"],
    ("bid", "dollar"): lambda s: s["bid"] * s["bid_size"],
    ("diff", "dollar"): lambda s: s["ask"] * s["ask_size"] - s["bid"] * s["bid_size"],
    ("abs.diff", "dollar"): lambda s: np.abs(s["ask"] * s["ask_size"] - s["bid"] * s["bid_size"]),
}


def compute_depth(ctx: IntervalContext) -> dict:
    adtv = ctx.reference.adtv
    out = {}
    for (side, unit), func in _DEPTH_SERIES.items():
        p = _nbbo_pieces(ctx, f"depth.{side}.{unit}", func)
        out[f"last.{side}.{unit}"] = p.last()
        out[f"weighted.{side}.{unit}"] = p.mean()
        if unit == "shares":
            out[f"last.{side}.shares.norm"] = out[f"last.{side}.shares"] / adtv
            out[f"weighted.{side}.shares.norm"] = out[f"weighted.{side}.shares"] / adtv
    return out


def compute_quote_imbalance(ctx: IntervalContext) -> dict:
    nb = ctx.nbbo
    bid_chg, ask_chg = _quote_changes(nb)
    ask = _nbbo_pieces(ctx, "depth.ask.shares", _DEPTH_SERIES[("ask", "shares")])
    bid = _nbbo_pieces(ctx, "depth.bid.shares", _DEPTH_SERIES[("bid", "shares")])
    pairs = {
        "num.bid.ask.changes": (ctx.count(nb.ids[ask_chg]), ctx.count(nb.ids[bid_chg])),
        "last.bid.ask.shares": (ask.last(), bid.last()),
        "weighted.bid.ask.shares": (ask.mean(), bid.mean()),
    }
    out = {}
    for base, (a, b) in pairs.items():
        d = imbalance(a, b)
        out[f"directional.{base}"] = d
        out[f"undirectional.{base}"] = np.abs(d)
    frac = _nbbo_pieces(ctx, "quote.fraction",
                        lambda s: imbalance(s["ask_size"], s["bid_size"]))
    out["directional.integrated.bid.ask.shares"] = frac.mean()
    out["integrated.abs.bid.ask.shares"] = frac.map(np.abs).mean()
    return out


def _exchanges(ctx) -> list:
    return sorted(set(ctx.venues) | set(ctx.trades["exchange"].tolist()))


def compute_hhi(ctx: IntervalContext, base: str | None = None) -> dict:
    """HHI across exchanges of every base quantity (or only ``base``).

    Exchanges with no prevailing value yet contribute zero.
    """
    exchanges = _exchanges(ctx)
    tr = ctx.trades
    rows: dict[str, list] = {}

    def push(name, row):
        rows.setdefault(name, []).append(row)

    for ex in exchanges:
        on_ex = tr.where(tr["exchange"] == ex)
        push("num.trades", ctx.count(on_ex.ids))
        push("total.trade.shares", ctx.total(on_ex.ids, on_ex["size"]))
        for label, s in (("trade", on_ex), ("buy", on_ex.where(on_ex["direction"] == 1)),
                         ("sell", on_ex.where(on_ex["direction"] == -1))):
            p = IntervalPieces(s.t, s["size"], ctx.edges)
            push(f"last.{label}.shares", np.nan_to_num(p.last(), nan=0.0))
            push(f"weighted.{label}.shares", p.integral(undefined_as_zero=True))
        q = ctx.venues.get(ex)
        if q is None:
            zeros = np.zeros(ctx.n_intervals)
            for name in ("num.records", "bid.change.count", "ask.change.count",
                         "last.ask.shares", "last.bid.shares",
                         "weighted.ask.shares", "weighted.bid.shares"):
                push(name, zeros)
            continue
        bid_chg, ask_chg = _quote_changes(q)
        push("num.records", ctx.count(q.ids))
        push("bid.change.count", ctx.count(q.ids[bid_chg]))
        push("ask.change.count", ctx.count(q.ids[ask_chg]))
        for side in ("ask", "bid"):
            p = IntervalPieces(q.t, q[f"{side}_size"], ctx.edges)
            push(f"last.{side}.shares", np.nan_to_num(p.last(), nan=0.0))
            push(f"weighted.{side}.shares", p.integral(undefined_as_zero=True))

    out = {}
    for name, matrix in rows.items():
        if base is not None and name != base:
            continue
        out[f"HHI.{name}"] = _hhi_rows(np.vstack(matrix))
    if not exchanges:
        names = [base] if base else HHI_BASES
        out = {f"HHI.{n}": np.full(ctx.n_intervals, np.nan) for n in names}
    return out


HHI_BASES = [
    "num.trades", "total.trade.shares", "last.trade.shares", "weighted.trade.shares",
    "last.buy.shares", "last.sell.shares", "weighted.buy.shares", "weighted.sell.shares",
    "num.records", "bid.change.count", "ask.change.count", "last.ask.shares",
    "last.bid.shares", "weighted.ask.shares", "weighted.bid.shares",
]

FAMILY_FUNCS = {
    Family.RETURN: compute_return,
    Family.SPREAD: compute_spreads,
    Family.VOLATILITY: compute_volatility,
    Family.TRADE_FREQ: compute_trade_activity,
    Family.TRADE_VOL: compute_trade_activity,
    Family.TRADE_IMBALANCE: compute_trade_imbalance,
    Family.QUOTE_FREQ: compute_quote_activity,
    Family.DEPTH: compute_depth,
    Family.QUOTE_IMBALANCE: compute_quote_imbalance,
    Family.HHI: compute_hhi,
}


def build_panel(day: SymbolDay, registry=None, *, session=DEFAULT_SESSION,
                interval_ns=DEFAULT_INTERVAL_NS, classifier="clnv",
                shares_normalizer="adtv") -> MeasurePanel:
    """Compute every registry measure for every interval of the session."""
    registry: list[MeasureId] = resolve_registry(registry)
    ctx = make_context(day, session=session, interval_ns=interval_ns,
                       classifier=classifier, shares_normalizer=shares_normalizer)
    results: dict[str, np.ndarray] = {}
    for func in dict.fromkeys(FAMILY_FUNCS[m.family] for m in registry):
        results.update(func(ctx))
    values = np.column_stack([results[m.name] for m in registry]) if registry else \
        np.zeros((ctx.n_intervals, 0))
    return MeasurePanel(day.symbol, ctx.edges[:-1], values, [m.name for m in registry])
