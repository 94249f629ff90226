"""Deterministic synthetic trading days and planted-correlation panels.

Random numbers come from numpy's PCG64 bit generator, whose raw 64-bit
output stream is fixed for a given seed.  Everything above the raw bits is
defined here, not borrowed from numpy's distribution methods:

* uniform:      ``(raw >> 11) * 2**-53``
* normal:       Box-Muller on two uniforms, both outputs used
* exponential:  ``-log(1 - u)``

Symbol ``i`` draws from ``PCG64(sha256("<seed>/<i>")[:8])``, so a symbol's
events do not depend on how many symbols are generated or on worker count.

Prices are simulated in integer units of $0.0001 and timestamps on a 1 ms
grid; every record of a symbol (trades and quotes together) gets a distinct,
strictly increasing timestamp.
"""
from __future__ import annotations

import dataclasses
import datetime as dt
import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .ingest import DAILY_COLUMNS, NS_PER_SECOND, QUOTE_COLUMNS, TRADE_COLUMNS, parse_clock
from .panel import MeasurePanel

PRICE_UNIT = 10_000  # integer price units per dollar
MS = 1_000_000
DRIVERS = ("activity", "volatility", "spread", "depth", "flow")


class SynthRandom:
    def __init__(self, seed: int):
        self._bits = np.random.PCG64(seed)
        self._buf: list[int] = []
        self._pos = 0
        self._spare: float | None = None

    def uniform(self) -> float:
        if self._pos >= len(self._buf):
            self._buf = self._bits.random_raw(4096).tolist()
            self._pos = 0
        raw = self._buf[self._pos]
        self._pos += 1
        return (raw >> 11) * (1.0 / 9007199254740992.0)

    def normal(self) -> float:
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        u1 = 1.0 - self.uniform()  # (0, 1]
        u2 = self.uniform()
        rad = math.sqrt(-2.0 * math.log(u1))
        self._spare = rad * math.sin(2 * math.pi * u2)
        return rad * math.cos(2 * math.pi * u2)

    def exponential(self) -> float:
        return -math.log(1.0 - self.uniform())

    def pick(self, cumulative) -> int:
        u = self.uniform()
        for i, c in enumerate(cumulative):
            if u < c:
                return i
        return len(cumulative) - 1


def symbol_seed(seed: int, index: int) -> int:
    digest = hashlib.sha256(f"{seed}/{index}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass(frozen=True)
class SynthSpec:
    """Knobs of a synthetic day.

    ``drivers`` maps each latent driver to the log-scale strength of its
    slow AR(1) path: activity scales event rates, volatility the mid-price
    noise, spread the quoted spread, depth the quote sizes, and flow tilts
    trades toward buys or sells.  Each group in ``planted_blocks`` makes the
    listed drivers share one latent path, which forces the measures they
    drive to move together.
    """

    seed: int = 0
    n_symbols: int = 5
    date: str = "2018-04-03"
    session_open: str = "09:30:00"
    session_close: str = "16:00:00"
    quote_rate: float = 0.6
    trade_rate: float = 0.3
    volatility: float = 0.0002
    mean_reversion: float = 0.02
    max_deviation: float = 0.004
    spread_mean: float = 0.02
    spread_jitter: float = 0.2
    exchanges: tuple[str, ...] = ("N", "P", "Q", "Z")
    routing_weights: tuple[float, ...] = (0.4, 0.3, 0.2, 0.1)
    at_quote_fraction: float = 0.6
    trade_size_mean: float = 300.0
    quote_size_mean: float = 500.0
    driver_timescale: float = 120.0
    drivers: dict = field(default_factory=lambda: {
        "activity": 0.6, "volatility": 0.4, "spread": 0.3, "depth": 0.5, "flow": 0.8})
    planted_blocks: tuple[tuple[str, ...], ...] = ()
    reference_days: int = 21

    def __post_init__(self):
        if self.n_symbols < 1:
            raise ValueError("n_symbols must be positive")
        if not (self.quote_rate > 0 and self.trade_rate > 0):
            raise ValueError("event rates must be positive")
        if len(self.exchanges) != len(self.routing_weights) or not self.exchanges:
            raise ValueError("one routing weight per exchange")
        if any(len(e) != 1 for e in self.exchanges) or len(set(self.exchanges)) != len(self.exchanges):
            raise ValueError("exchange codes must be distinct single characters")
        if any(w < 0 for w in self.routing_weights) or abs(sum(self.routing_weights) - 1) > 1e-9:
            raise ValueError("routing weights must be non-negative and sum to 1")
        if not 0 <= self.at_quote_fraction <= 1:
            raise ValueError("at_quote_fraction must be in [0, 1]")
        if self.spread_mean < 0 or self.volatility < 0 or self.mean_reversion <= 0:
            raise ValueError("spread/volatility must be >= 0 and mean_reversion > 0")
        unknown = set(self.drivers) - set(DRIVERS)
        if unknown:
            raise ValueError(f"unknown drivers {sorted(unknown)}")
        seen = set()
        for group in self.planted_blocks:
            for name in group:
                if name not in DRIVERS or name in seen:
                    raise ValueError(f"bad planted block driver {name!r}")
                seen.add(name)
        if parse_clock(self.session_open) >= parse_clock(self.session_close):
            raise ValueError("session open must precede close")

    @classmethod
    def from_dict(cls, data: dict) -> "SynthSpec":
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown synth spec keys {sorted(extra)}")
        data = dict(data)
        for key in ("exchanges", "routing_weights"):
            if key in data:
                data[key] = tuple(data[key])
        if "planted_blocks" in data:
            data["planted_blocks"] = tuple(tuple(g) for g in data["planted_blocks"])
        if "drivers" in data:
            data["drivers"] = {**cls().drivers, **data["drivers"]}
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "SynthSpec":
        from ._toml import load_toml
        return cls.from_dict(load_toml(path))

    def symbols(self) -> list[str]:
        width = max(3, len(str(self.n_symbols - 1)))
        return [f"SYM{i:0{width}d}" for i in range(self.n_symbols)]


def _driver_paths(spec: SynthSpec, rng: SynthRandom, n: int) -> dict[str, list[float]]:
    """One standardized AR(1) path per driver (shared within planted blocks)."""
    phi = math.exp(-1.0 / spec.driver_timescale)
    scale = math.sqrt(1 - phi * phi)
    groups = [tuple(g) for g in spec.planted_blocks]
    grouped = {d for g in groups for d in g}
    groups += [(d,) for d in DRIVERS if d not in grouped]
    paths = {}
    for group in groups:
        x = rng.normal()
        path = []
        for _ in range(n):
            path.append(x)
            x = phi * x + scale * rng.normal()
        for d in group:
            paths[d] = path
    return paths


def _multipliers(spec, paths, name) -> list[float]:
    s = spec.drivers.get(name, 0.0)
    return [math.exp(s * x - s * s / 2) for x in paths[name]]


def _arrivals(rate: float, mult, rng: SynthRandom) -> list[float]:
    """Event times (seconds) of a Poisson process with per-second intensity rate*mult[s]."""
    out = []
    need = rng.exponential()
    for s, m in enumerate(mult):
        lam = rate * m
        left = 1.0
        pos = 0.0
        while need < lam * left:
            step = need / lam
            pos += step
            left -= step
            out.append(s + pos)
            need = rng.exponential()
        need -= lam * left
    return out


def _fmt_price(units: int) -> str:
    return f"{units // PRICE_UNIT}.{units % PRICE_UNIT:04d}"


def _lots(rng: SynthRandom, mean: float) -> int:
    return 100 * max(1, round(mean / 100 * rng.exponential()))


def simulate_symbol(spec: SynthSpec, index: int):
    """Return (trade rows, quote rows, daily rows) of one symbol as CSV lines."""
    rng = SynthRandom(symbol_seed(spec.seed, index))
    symbol = spec.symbols()[index]
    open_ns = parse_clock(spec.session_open)
    n_sec = (parse_clock(spec.session_close) - open_ns) // NS_PER_SECOND
    end_ms = n_sec * 1000

    p0 = round((20 + 80 * rng.uniform()) * 100) * 100  # whole cents, in price units
    paths = _driver_paths(spec, rng, n_sec + 1)
    activity = _multipliers(spec, paths, "activity")
    vol_m = _multipliers(spec, paths, "volatility")
    spread_m = _multipliers(spec, paths, "spread")
    depth_m = _multipliers(spec, paths, "depth")
    flow = [spec.drivers.get("flow", 0.0) * x for x in paths["flow"]]

    cum, acc = [], 0.0
    for w in spec.routing_weights:
        acc += w
        cum.append(acc)
    exchanges = spec.exchanges

    events = [(t, 0) for t in _arrivals(spec.quote_rate, activity[:n_sec], rng)]
    events += [(t, 1) for t in _arrivals(spec.trade_rate, activity[:n_sec], rng)]
    events.sort()

    trades, quotes = [], []
    clock = -1001  # ms relative to open; pre-open seeds start at -1000

    def stamp(ms_wanted):
        nonlocal clock
        clock = max(ms_wanted, clock + 1)
        return open_ns + clock * MS

    def half_spread(sec):
        if spec.spread_mean == 0:
            return 0
        s = spec.spread_mean * spread_m[sec] * math.exp(spec.spread_jitter * rng.normal())
        return max(1, round(s * PRICE_UNIT / 2))

    def quote_line(ts, ex, q, nbbo):
        quotes.append(f"{ts},{symbol},{_fmt_price(q[0])},{q[1]},{_fmt_price(q[2])},{q[3]},"
                      f"{ex},{1 if nbbo else 0}")

    def nbbo_of(book):
        bb = max(q[0] for q in book.values())
        ba = min(q[2] for q in book.values())
        return (bb, sum(q[1] for q in book.values() if q[0] == bb),
                ba, sum(q[3] for q in book.values() if q[2] == ba))

    # opening book, stamped just before the open
    y = 0.0
    mid = p0
    hs = half_spread(0)
    book = {}
    for ex in exchanges:
        off_b = hs * int(3 * rng.uniform())
        off_a = hs * int(3 * rng.uniform())
        book[ex] = [mid - hs - off_b, _lots(rng, spec.quote_size_mean),
                    mid + hs + off_a, _lots(rng, spec.quote_size_mean)]
    book[exchanges[0]][0] = mid - hs
    book[exchanges[0]][2] = mid + hs
    for ex in exchanges:
        quote_line(stamp(-1000), ex, book[ex], False)
    nbbo = nbbo_of(book)
    quote_line(stamp(-1000), "*", nbbo, True)

    kappa = spec.mean_reversion
    last_q = 0.0
    for t, kind in events:
        ms = int(t * 1000)
        if ms >= end_ms or clock + 1 >= end_ms:
            break
        sec = int(t)
        if kind == 0:
            dt_s = max(t - last_q, 1e-3)
            last_q = t
            decay = math.exp(-kappa * dt_s)
            sd = spec.volatility * vol_m[sec] * math.sqrt((1 - decay * decay) / (2 * kappa))
            y = min(max(y * decay + sd * rng.normal(), -spec.max_deviation), spec.max_deviation)
            mid = round(p0 * math.exp(y))
            hs = half_spread(sec)
            nb, no = mid - hs, mid + hs
            ex = exchanges[rng.pick(cum)]
            book[ex] = [nb, _lots(rng, spec.quote_size_mean * depth_m[sec]),
                        no, _lots(rng, spec.quote_size_mean * depth_m[sec])]
            touched = [ex]
            for other in exchanges:
                q = book[other]
                if other == ex:
                    continue
                moved = False
                if q[0] > nb:
                    q[0] = nb - hs * int(3 * rng.uniform())
                    moved = True
                if q[2] < no:
                    q[2] = no + hs * int(3 * rng.uniform())
                    moved = True
                if moved:
                    touched.append(other)
            for name in touched:
                if clock + 1 >= end_ms:
                    break
                quote_line(stamp(ms), name, book[name], False)
            new = nbbo_of(book)
            if new != nbbo and clock + 1 < end_ms:
                nbbo = new
                quote_line(stamp(ms), "*", nbbo, True)
        else:
            nb, _, no, _ = nbbo
            p_buy = 0.5 + 0.45 * math.tanh(flow[sec])
            buy = rng.uniform() < p_buy
            if rng.uniform() < spec.at_quote_fraction:
                price = no if buy else nb
            else:
                price = nb + int((no - nb + 1) * rng.uniform())
            size = _lots(rng, spec.trade_size_mean)
            ex = exchanges[rng.pick(cum)]
            trades.append(f"{stamp(ms)},{symbol},{_fmt_price(price)},{size},{ex}")

    day = dt.date.fromisoformat(spec.date)
    expected = spec.trade_rate * n_sec * spec.trade_size_mean
    daily = []
    d = day
    rows = []
    while len(rows) < spec.reference_days:
        d -= dt.timedelta(days=1)
        if d.weekday() >= 5:
            continue
        vol = round(expected * math.exp(0.25 * rng.normal()))
        frac = 0.01 * math.exp(0.3 * rng.normal())
        hi = round(p0 * (1 + frac / 2))
        lo = round(p0 * (1 - frac / 2))
        rows.append((d, vol, hi, lo))
    for d, vol, hi, lo in sorted(rows):
        daily.append(f"{symbol},{d.isoformat()},{vol},{_fmt_price(hi)},{_fmt_price(lo)}")
    return trades, quotes, daily


class SynthFiles(NamedTuple):
    trades: Path
    quotes: Path
    daily: Path


def generate_day(spec: SynthSpec, out_dir, workers: int = 1) -> SynthFiles:
    """Write trades.csv, quotes.csv and daily.csv for ``spec`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    idx = range(spec.n_symbols)
    if workers > 1 and spec.n_symbols > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(simulate_symbol, [spec] * spec.n_symbols, idx))
    else:
        parts = [simulate_symbol(spec, i) for i in idx]
    files = SynthFiles(out / "trades.csv", out / "quotes.csv", out / "daily.csv")
    for path, header, k in ((files.trades, TRADE_COLUMNS, 0), (files.quotes, QUOTE_COLUMNS, 1),
                            (files.daily, DAILY_COLUMNS, 2)):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for part in parts:
                if part[k]:
                    fh.write("\n".join(part[k]) + "\n")
    return files


def generate_planted_blocks(k: int, within_corr: float, between_corr: float, length: int,
                            block_size: int = 4, seed: int = 0) -> MeasurePanel:
    """Panel of ``k`` blocks of ``block_size`` columns with exact sample correlations.

    Column ``x = a*g + b*f_block + c*e`` built from mutually orthonormal,
    centred latent columns, with ``a^2 = between``, ``b^2 = within - between``,
    ``c^2 = 1 - within``.  Every other column is negated, so half the planted
    correlations are negative.
    """
    if not 0 <= between_corr < within_corr <= 1:
        raise ValueError("need 0 <= between_corr < within_corr <= 1")
    if k < 1 or block_size < 1:
        raise ValueError("k and block_size must be positive")
    p = k * block_size
    n_latent = 1 + k + p
    if length < n_latent + 1:
        raise ValueError(f"length must be at least {n_latent + 1}")
    rng = SynthRandom(symbol_seed(seed, -1))
    raw = np.array([[rng.normal() for _ in range(n_latent)] for _ in range(length)])
    raw -= raw.mean(axis=0)
    q, _ = np.linalg.qr(raw)
    q *= math.sqrt(length)
    g, blocks, noise = q[:, 0], q[:, 1:1 + k], q[:, 1 + k:]
    a = math.sqrt(between_corr)
    b = math.sqrt(within_corr - between_corr)
    c = math.sqrt(1 - within_corr)
    cols, names = [], []
    for blk in range(k):
        for j in range(block_size):
            col = a * g + b * blocks[:, blk] + c * noise[:, blk * block_size + j]
            cols.append(-col if j % 2 else col)
            names.append(f"b{blk}.m{j}")
    starts = parse_clock("09:30:00") + np.arange(length, dtype=np.int64) * 10 * NS_PER_SECOND
    return MeasurePanel(f"planted{k}", starts, np.column_stack(cols), names)
