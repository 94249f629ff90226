"""The catalog of 10-second measures.

Names follow a dotted lowercase scheme (``last.prop.eff.spread``,
``HHI.weighted.bid.shares``).  Prefix conventions:

* ``last.``      value prevailing at the end of the interval
* ``weighted.``  time-weighted average over the interval
* ``total.``     sum over the interval's trades
* ``num.``       event count in the interval
* ``.norm``      shares divided by the average daily trading volume
* ``directional.`` / ``undirectional.``  signed / absolute imbalance
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path


class Family(enum.Enum):
    RETURN = "Return"
    SPREAD = "Spread"
    VOLATILITY = "Volatility"
    TRADE_FREQ = "TradeFreq"
    TRADE_VOL = "TradeVol"
    TRADE_IMBALANCE = "TradeImbalance"
    QUOTE_FREQ = "QuoteFreq"
    DEPTH = "Depth"
    QUOTE_IMBALANCE = "QuoteImbalance"
    HHI = "HHI"


class Aggregation(enum.Enum):
    LAST_PREVAILING = "LastPrevailing"
    TIME_WEIGHTED = "TimeWeighted"
    COUNT = "Count"
    AVG_GAP = "AvgGap"
    INTEGRAL = "Integral"
    TOTAL = "Total"
    RANGE = "Range"


class Normalizer(enum.Enum):
    NONE = "None"
    ADTV = "ADTV"
    ADRV = "ADRV"
    SELF = "SelfNormalized"


@dataclass(frozen=True)
class MeasureId:
    name: str
    family: Family
    aggregation: Aggregation
    normalizer: Normalizer
    description: str

    def __str__(self):
        return self.name


_AGG_WORD = {
    "last": ("The last prevailing", Aggregation.LAST_PREVAILING),
    "weighted": ("The time-weighted", Aggregation.TIME_WEIGHTED),
    "total": ("The interval total", Aggregation.TOTAL),
}


def _build() -> list[MeasureId]:
    F, A, N = Family, Aggregation, Normalizer
    out: list[MeasureId] = []

    def add(name, family, agg, norm, desc):
        out.append(MeasureId(name, family, agg, norm, desc))

    add("return", F.RETURN, A.LAST_PREVAILING, N.SELF,
        "Return of the last prevailing mid-quote over the interval")

    for agg in ("last", "weighted"):
        word, a = _AGG_WORD[agg]
        add(f"{agg}.bid.ask.spread", F.SPREAD, a, N.NONE, f"{word} bid-ask spread (ask - bid)")
        add(f"{agg}.prop.bid.ask.spread", F.SPREAD, a, N.SELF,
            f"{word} proportional bid-ask spread, percent of mid-quote")
    add("last.eff.spread", F.SPREAD, A.LAST_PREVAILING, N.NONE,
        "The last trade's dollar effective spread 2|price - mid|")
    add("weighted.eff.spread", F.SPREAD, A.TIME_WEIGHTED, N.NONE,
        "Share-weighted mean dollar effective spread of the interval's trades")
    add("last.prop.eff.spread", F.SPREAD, A.LAST_PREVAILING, N.SELF,
        "The last prevailing proportional effective spread")
    add("weighted.prop.eff.spread", F.SPREAD, A.TIME_WEIGHTED, N.SELF,
        "Share-weighted mean proportional effective spread of the interval's trades")

    for price, label in (("bid", "bid price"), ("ask", "ask price"),
                         ("mid.quote", "mid-quote"), ("trade.price", "trade price")):
        add(f"{price}.volatility", F.VOLATILITY, A.RANGE, N.ADRV,
            f"Volatility based on {label}: (high - low) / ADRV")

    add("num.trades", F.TRADE_FREQ, A.COUNT, N.NONE, "The number of trades")
    add("avg.time.between.trades", F.TRADE_FREQ, A.AVG_GAP, N.NONE,
        "The average time between trades (seconds)")

    for agg in ("last", "weighted", "total"):
        word, a = _AGG_WORD[agg]
        add(f"{agg}.trade.dollar", F.TRADE_VOL, a, N.NONE, f"{word} trade dollar volume")
        add(f"{agg}.trade.shares", F.TRADE_VOL, a, N.NONE, f"{word} trade shares")
        add(f"{agg}.trade.shares.norm", F.TRADE_VOL, a, N.ADTV,
            f"{word} trade shares normalized by the average daily trading shares")

    bases = [("num.buy.sell", A.COUNT, "the number of buy (sell) trades")]
    for agg in ("last", "weighted", "total"):
        word, a = _AGG_WORD[agg]
        bases.append((f"{agg}.buy.sell.vol", a, f"{word.lower()} shares of buy (sell) trades"))
        bases.append((f"{agg}.buy.sell.dollar", a, f"{word.lower()} dollar volume of buy (sell) trades"))
    for base, a, what in bases:
        add(f"directional.{base}", F.TRADE_IMBALANCE, a, N.SELF,
            f"(buy - sell) / (buy + sell) where buy (sell) means {what}")
        add(f"undirectional.{base}", F.TRADE_IMBALANCE, a, N.SELF,
            f"|buy - sell| / (buy + sell) where buy (sell) means {what}")

    add("num.records", F.QUOTE_FREQ, A.COUNT, N.NONE, "The number of quote records")
    add("num.bid.changes", F.QUOTE_FREQ, A.COUNT, N.NONE, "The number of bid changes")
    add("num.ask.changes", F.QUOTE_FREQ, A.COUNT, N.NONE, "The number of ask changes")
    add("avg.time.between.records", F.QUOTE_FREQ, A.AVG_GAP, N.NONE,
        "The average time between quote records (seconds)")
    add("avg.time.between.bid.changes", F.QUOTE_FREQ, A.AVG_GAP, N.NONE,
        "The average time between bid changes (seconds)")
    add("avg.time.between.ask.changes", F.QUOTE_FREQ, A.AVG_GAP, N.NONE,
        "The average time between ask changes (seconds)")

    sides = (("ask", "ask"), ("bid", "bid"), ("diff", "(ask - bid)"), ("abs.diff", "|ask - bid|"))
    for agg in ("last", "weighted"):
        word, a = _AGG_WORD[agg]
        for side, label in sides:
            add(f"{agg}.{side}.dollar", F.DEPTH, a, N.NONE, f"{word} {label} depth in dollars")
            add(f"{agg}.{side}.shares", F.DEPTH, a, N.NONE, f"{word} {label} depth in shares")
            add(f"{agg}.{side}.shares.norm", F.DEPTH, a, N.ADTV,
                f"{word} {label} depth in shares normalized by the average daily trading shares")

    qbases = [
        ("num.bid.ask.changes", A.COUNT, "the number of ask (bid) changes"),
        ("last.bid.ask.shares", A.LAST_PREVAILING, "the last prevailing ask (bid) shares"),
        ("weighted.bid.ask.shares", A.TIME_WEIGHTED, "the time-weighted ask (bid) shares"),
    ]
    for base, a, what in qbases:
        add(f"directional.{base}", F.QUOTE_IMBALANCE, a, N.SELF,
            f"(ask - bid) / (ask + bid) where ask (bid) means {what}")
        add(f"undirectional.{base}", F.QUOTE_IMBALANCE, a, N.SELF,
            f"|ask - bid| / (ask + bid) where ask (bid) means {what}")
    add("directional.integrated.bid.ask.shares", F.QUOTE_IMBALANCE, A.INTEGRAL, N.SELF,
        "Time average of (ask size - bid size) / (ask size + bid size)")
    add("integrated.abs.bid.ask.shares", F.QUOTE_IMBALANCE, A.INTEGRAL, N.SELF,
        "Time average of |ask size - bid size| / (ask size + bid size)")

    hhi = [
        ("num.trades", A.COUNT, "count of trades"),
        ("total.trade.shares", A.TOTAL, "interval total trade shares"),
        ("last.trade.shares", A.LAST_PREVAILING, "last prevailing trade shares"),
        ("weighted.trade.shares", A.TIME_WEIGHTED, "time-weighted trade shares"),
        ("last.buy.shares", A.LAST_PREVAILING, "last prevailing buy shares"),
        ("last.sell.shares", A.LAST_PREVAILING, "last prevailing sell shares"),
        ("weighted.buy.shares", A.TIME_WEIGHTED, "time-weighted buy shares"),
        ("weighted.sell.shares", A.TIME_WEIGHTED, "time-weighted sell shares"),
        ("num.records", A.COUNT, "count of quote records"),
        ("bid.change.count", A.COUNT, "count of bid changes"),
        ("ask.change.count", A.COUNT, "count of ask changes"),
        ("last.ask.shares", A.LAST_PREVAILING, "last prevailing ask shares"),
        ("last.bid.shares", A.LAST_PREVAILING, "last prevailing bid shares"),
        ("weighted.ask.shares", A.TIME_WEIGHTED, "time-weighted ask shares"),
        ("weighted.bid.shares", A.TIME_WEIGHTED, "time-weighted bid shares"),
    ]
    for base, a, what in hhi:
        add(f"HHI.{base}", F.HHI, a, N.SELF, f"HHI across exchanges of {what}")
    return out


FULL_REGISTRY: tuple[MeasureId, ...] = tuple(_build())
_BY_NAME = {m.name: m for m in FULL_REGISTRY}
assert len(_BY_NAME) == len(FULL_REGISTRY) == 91


def full_registry() -> list[MeasureId]:
    return list(FULL_REGISTRY)


def get_measure(name: str) -> MeasureId:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise KeyError(f"unknown measure {name!r}") from None


def measure_names(registry=None) -> list[str]:
    return [m.name for m in (FULL_REGISTRY if registry is None else registry)]


def _normalized_twin(name: str, names) -> str | None:
    if name + ".norm" in names:
        return name + ".norm"
    return None


def _share_twin(name: str, names) -> str | None:
    """Share-based counterpart of a dollar measure, if one is present."""
    if "dollar" not in name.split("."):
        return None
    for repl in ("shares", "vol"):
        twin = name.replace(".dollar", "." + repl)
        if twin in names or twin + ".norm" in names:
            return twin if twin in names else twin + ".norm"
    return None


_EFFECTIVE_TWINS = {
    "last.eff.spread": "last.prop.eff.spread",
    "weighted.eff.spread": "weighted.prop.eff.spread",
}


def redundant_twins(names) -> dict[str, str]:
    """Map each redundant measure to the twin that replaces it.

    Three rules, applied to the given set of names:
    dollar-volume measures give way to their share-volume twins, dollar
    effective spreads to proportional ones, and raw share measures to their
    ADTV-normalized versions.
    """
    names = set(names)
    out = {}
    for name in sorted(names):
        twin = (_share_twin(name, names)
                or (_EFFECTIVE_TWINS.get(name) if _EFFECTIVE_TWINS.get(name) in names else None)
                or _normalized_twin(name, names))
        if twin is not None:
            out[name] = twin
    return out


def reduced_registry(registry=None) -> list[MeasureId]:
    registry = FULL_REGISTRY if registry is None else registry
    drop = redundant_twins(m.name for m in registry)
    return [m for m in registry if m.name not in drop]


def load_registry(path) -> list[MeasureId]:
    """One measure name per line; blank lines and ``#`` comments ignored."""
    names = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            names.append(line)
    if len(set(names)) != len(names):
        raise ValueError(f"{path}: duplicate measure names")
    return [get_measure(n) for n in names]


def resolve_registry(spec) -> list[MeasureId]:
    """``"full"``, ``"reduced"``, a file path, or an explicit list of names."""
    if spec is None or spec == "full":
        return full_registry()
    if spec == "reduced":
        return reduced_registry()
    if isinstance(spec, (list, tuple)):
        return [m if isinstance(m, MeasureId) else get_measure(m) for m in spec]
    return load_registry(spec)
