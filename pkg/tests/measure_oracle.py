"""Brute-force recomputation of single panel cells.

Works from plain Python lists of the parsed rows and shares no code with the
engine: its own prevailing-quote lookups, its own CLNV loop with tick test,
and time-weighted values as 1-ms Riemann sums (left endpoints).  On inputs
stamped on a millisecond grid the Riemann sums are exact integrals.
"""
from __future__ import annotations

import bisect
import math

MS = 1_000_000
NAN = float("nan")


def _mean(values):
    vals = [v for v in values if v == v]
    return sum(vals) / len(vals) if vals else NAN


def _imb(a, b):
    if a != a or b != b or a + b <= 0:
        return NAN
    return (a - b) / (a + b)


def _hhi(parts):
    total = sum(parts)
    if not total > 0:
        return NAN
    return sum((p / total) ** 2 for p in parts)


class _Step:
    """Right-continuous step function from (time, value) events, last event wins."""

    def __init__(self, events):
        self.t = [t for t, _ in events]
        self.v = [v for _, v in events]

    def at(self, t):
        i = bisect.bisect_right(self.t, t) - 1
        return self.v[i] if i >= 0 else NAN

    def samples(self, t0, t1):
        """Value at every millisecond of [t0, t1)."""
        out = []
        i = bisect.bisect_right(self.t, t0) - 1
        n = len(self.t)
        for t in range(t0, t1, MS):
            while i + 1 < n and self.t[i + 1] <= t:
                i += 1
            out.append(self.v[i] if i >= 0 else NAN)
        return out


def oracle_clnv(trades, nbbo):
    """Direction per trade: +1, -1 or 0.  trades: (t, price, ...) in order."""
    qt = [q[0] for q in nbbo]
    out = []
    last_diff_dir = 0
    prev_price = None
    for tr in trades:
        t, price = tr[0], tr[1]
        # tick test state first, it depends only on earlier trades
        if prev_price is not None and price != prev_price:
            tick = 1 if price > prev_price else -1
        else:
            tick = last_diff_dir
        i = bisect.bisect_left(qt, t) - 1
        d = None
        if i >= 0:
            bid, ask = nbbo[i][1], nbbo[i][3]
            s = ask - bid
            tol = 1e-9 * max(abs(bid), abs(ask))
            if ask - 0.3 * s - tol <= price <= ask + tol:
                d = 1
            elif bid - tol <= price <= bid + 0.3 * s + tol:
                d = -1
        out.append(d if d is not None else tick)
        last_diff_dir = tick
        prev_price = price
    return out


class SymbolOracle:
    def __init__(self, trades, quotes, reference, session, interval_ns):
        """``trades``/``quotes``: DataFrames of one symbol as parsed (unclipped)."""
        self.open, self.close = session
        self.step = interval_ns
        self.adtv = reference.adtv
        self.adrv = reference.adrv
        q = quotes[~quotes["crossed"]]
        q = q[q["timestamp_ns"] < self.close]
        rows = list(zip(q["timestamp_ns"].tolist(), q["bid_price"].tolist(),
                        q["bid_size"].tolist(), q["ask_price"].tolist(),
                        q["ask_size"].tolist(), q["exchange"].tolist(), q["is_nbbo"].tolist()))
        self.nbbo = [r for r in rows if r[6]]
        self.venues = {}
        for r in rows:
            if not r[6]:
                self.venues.setdefault(r[5], []).append(r)
        tr = trades[(trades["timestamp_ns"] >= self.open) & (trades["timestamp_ns"] < self.close)]
        self.trades = list(zip(tr["timestamp_ns"].tolist(), tr["price"].tolist(),
                               tr["size"].tolist(), tr["exchange"].tolist()))
        self.direction = oracle_clnv(self.trades, self.nbbo)
        self.exchanges = sorted(set(self.venues) | {t[3] for t in self.trades})
        self._memo = {}
        self.bid_chg = self._changes(self.nbbo, 1)
        self.ask_chg = self._changes(self.nbbo, 3)

    # -- helpers --------------------------------------------------------
    def _bounds(self, k):
        t0 = self.open + k * self.step
        return t0, t0 + self.step

    def _nbbo_step(self, f, key=None):
        if key is None:
            return _Step([(r[0], f(r)) for r in self.nbbo])
        if key not in self._memo:
            self._memo[key] = _Step([(r[0], f(r)) for r in self.nbbo])
        return self._memo[key]

    def _in(self, events, t0, t1):
        return [e for e in events if t0 <= e[0] < t1]

    def _changes(self, records, col):
        out = []
        prev = None
        for r in records:
            if prev is None or r[col] != prev[col]:
                out.append(r)
            prev = r
        return out

    def _gap(self, events, t0, t1):
        ts = [e[0] for e in events if t0 <= e[0] < t1]
        if len(ts) < 2:
            return NAN
        gaps = [(b - a) / 1e9 for a, b in zip(ts, ts[1:])]
        return sum(gaps) / len(gaps)

    def _weighted(self, step, t0, t1):
        return _mean(step.samples(t0, t1))

    def _trade_step(self, f, pred=lambda i: True):
        return _Step([(tr[0], f(tr)) for i, tr in enumerate(self.trades) if pred(i)])

    # -- cells ----------------------------------------------------------
    def cell(self, k, name):
        t0, t1 = self._bounds(k)
        end = t1 - 1  # state at the close of the interval

        mid = self._nbbo_step(lambda r: (r[1] + r[3]) / 2, "mid")
        if name == "return":
            return mid.at(t1 - 1) / mid.at(t0 - 1) - 1

        spread = self._nbbo_step(lambda r: r[3] - r[1], "spread")
        prop = self._nbbo_step(lambda r: 100 * (r[3] - r[1]) / ((r[3] + r[1]) / 2), "prop")
        quoted = {"bid.ask.spread": spread, "prop.bid.ask.spread": prop}
        for base, s in quoted.items():
            if name == f"last.{base}":
                return s.at(end)
            if name == f"weighted.{base}":
                return self._weighted(s, t0, t1)

        if name.endswith("eff.spread"):
            vals = []
            for tr in self._in(self.trades, t0, t1):
                m = mid.at(tr[0] - 1)
                if m != m:
                    continue
                eff = 2 * abs(tr[1] - m)
                vals.append((tr[2], 100 * eff / m if ".prop." in name else eff))
            if not vals:
                return NAN
            if name.startswith("last."):
                return vals[-1][1]
            return sum(s * v for s, v in vals) / sum(s for s, _ in vals)

        if name.endswith(".volatility"):
            if name == "trade.price.volatility":
                prices = [tr[1] for tr in self._in(self.trades, t0, t1)]
                return (max(prices) - min(prices)) / self.adrv if prices else NAN
            f = {"bid": lambda r: r[1], "ask": lambda r: r[3],
                 "mid.quote": lambda r: (r[1] + r[3]) / 2}[name[:-len(".volatility")]]
            vals = [v for v in self._nbbo_step(f).samples(t0, t1) if v == v]
            return (max(vals) - min(vals)) / self.adrv if vals else NAN

        if name == "num.trades":
            return float(len(self._in(self.trades, t0, t1)))
        if name == "avg.time.between.trades":
            return self._gap(self.trades, t0, t1)

        if ".trade." in name and not name.startswith("HHI."):
            agg, _, unit = name.split(".")[:3]
            norm = name.endswith(".norm")
            f = (lambda tr: tr[1] * tr[2]) if unit == "dollar" else (lambda tr: float(tr[2]))
            if agg == "total":
                v = float(sum(f(tr) for tr in self._in(self.trades, t0, t1)))
            else:
                step = self._trade_step(f)
                v = step.at(end) if agg == "last" else self._weighted(step, t0, t1)
            return v / self.adtv if norm else v

        if name.endswith("buy.sell") or ".buy.sell." in name:
            kind, rest = name.split(".", 1)
            buys = [i for i, d in enumerate(self.direction) if d == 1]
            sells = [i for i, d in enumerate(self.direction) if d == -1]
            if rest == "num.buy.sell":
                nb = sum(1 for i in buys if t0 <= self.trades[i][0] < t1)
                ns = sum(1 for i in sells if t0 <= self.trades[i][0] < t1)
                v = _imb(nb, ns)
            else:
                parts = rest.split(".")
                agg, unit = parts[0], parts[-1]
                f = (lambda tr: tr[1] * tr[2]) if unit == "dollar" else (lambda tr: float(tr[2]))

                def side(idx):
                    if agg == "total":
                        return sum(f(self.trades[i]) for i in idx if t0 <= self.trades[i][0] < t1)
                    ids = set(idx)
                    step = self._trade_step(f, lambda i: i in ids)
                    return step.at(end) if agg == "last" else self._weighted(step, t0, t1)

                v = _imb(side(buys), side(sells))
            return abs(v) if kind == "undirectional" else v

        bid_chg, ask_chg = self.bid_chg, self.ask_chg
        if name == "num.records":
            return float(len(self._in(self.nbbo, t0, t1)))
        if name == "num.bid.changes":
            return float(len(self._in(bid_chg, t0, t1)))
        if name == "num.ask.changes":
            return float(len(self._in(ask_chg, t0, t1)))
        if name == "avg.time.between.records":
            return self._gap(self.nbbo, t0, t1)
        if name == "avg.time.between.bid.changes":
            return self._gap(bid_chg, t0, t1)
        if name == "avg.time.between.ask.changes":
            return self._gap(ask_chg, t0, t1)

        depth = {
            ("ask", "shares"): lambda r: float(r[4]),
            ("bid", "shares"): lambda r: float(r[2]),
            ("diff", "shares"): lambda r: float(r[4] - r[2]),
            ("abs.diff", "shares"): lambda r: float(abs(r[4] - r[2])),
            ("ask", "dollar"): lambda r: r[3] * r[4],
            ("bid", "dollar"): lambda r: r[1] * r[2],
            ("diff", "dollar"): lambda r: r[3] * r[4] - r[1] * r[2],
            ("abs.diff", "dollar"): lambda r: abs(r[3] * r[4] - r[1] * r[2]),
        }
        for (side_, unit), f in depth.items():
            for agg in ("last", "weighted"):
                base = f"{agg}.{side_}.{unit}"
                if name == base or (unit == "shares" and name == base + ".norm"):
                    step = self._nbbo_step(f)
                    v = step.at(end) if agg == "last" else self._weighted(step, t0, t1)
                    return v / self.adtv if name.endswith(".norm") else v

        if name.endswith("bid.ask.changes") or name.endswith("bid.ask.shares"):
            if name.startswith("integrated.abs."):
                frac = self._nbbo_step(lambda r: abs(_imb(r[4], r[2])))
                return _mean(frac.samples(t0, t1))
            kind, rest = name.split(".", 1)
            if rest == "integrated.bid.ask.shares":
                return _mean(self._nbbo_step(lambda r: _imb(r[4], r[2])).samples(t0, t1))
            if rest == "num.bid.ask.changes":
                v = _imb(len(self._in(ask_chg, t0, t1)), len(self._in(bid_chg, t0, t1)))
            else:
                agg = rest.split(".")[0]
                a = self._nbbo_step(lambda r: float(r[4]))
                b = self._nbbo_step(lambda r: float(r[2]))
                if agg == "last":
                    v = _imb(a.at(end), b.at(end))
                else:
                    v = _imb(self._weighted(a, t0, t1), self._weighted(b, t0, t1))
            return abs(v) if kind == "undirectional" else v

        if name.startswith("HHI."):
            return _hhi([self._hhi_part(ex, name[4:], t0, t1) for ex in self.exchanges])

        raise KeyError(name)

    def _hhi_part(self, ex, base, t0, t1):
        """One exchange's share of an HHI base; undefined counts as zero."""
        on_ex = [i for i, tr in enumerate(self.trades) if tr[3] == ex]
        end = t1 - 1

        def integral(step):
            return sum(v for v in step.samples(t0, t1) if v == v) * MS

        def zero_nan(v):
            return 0.0 if v != v else v

        if base == "num.trades":
            return float(sum(1 for i in on_ex if t0 <= self.trades[i][0] < t1))
        if base == "total.trade.shares":
            return float(sum(self.trades[i][2] for i in on_ex if t0 <= self.trades[i][0] < t1))
        for label, want in (("trade", None), ("buy", 1), ("sell", -1)):
            for agg in ("last", "weighted"):
                if base == f"{agg}.{label}.shares":
                    ids = {i for i in on_ex if want is None or self.direction[i] == want}
                    step = self._trade_step(lambda tr: float(tr[2]), lambda i: i in ids)
                    return zero_nan(step.at(end)) if agg == "last" else integral(step)
        recs = self.venues.get(ex, [])
        if base == "num.records":
            return float(len(self._in(recs, t0, t1)))
        if base == "bid.change.count":
            return float(len(self._in(self._changes(recs, 1), t0, t1)))
        if base == "ask.change.count":
            return float(len(self._in(self._changes(recs, 3), t0, t1)))
        for side_, col in (("ask", 4), ("bid", 2)):
            step = _Step([(r[0], float(r[col])) for r in recs])
            if base == f"last.{side_}.shares":
                return zero_nan(step.at(end))
            if base == f"weighted.{side_}.shares":
                return integral(step)
        raise KeyError(base)


def is_time_weighted(name: str) -> bool:
    """Cells whose oracle value is a Riemann sum."""
    return (".weighted." in name or name.startswith("weighted.") or "integrated" in name
            or (name.endswith(".volatility") and not name.startswith("trade.")))


def close_enough(got, want, rtol, floor=1e-12):
    if want != want or got != got:
        return (want != want) and (got != got)
    return math.isclose(got, want, rel_tol=rtol, abs_tol=floor)
