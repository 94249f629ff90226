import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from microclust.ingest import DailyReference, parse_clock  # noqa: E402
from microclust.pipeline import PipelineConfig, run_pipeline  # noqa: E402
from microclust.synth import SynthSpec, generate_day  # noqa: E402

OPEN = parse_clock("09:30:00")
SEC = 1_000_000_000


def at(seconds: float) -> int:
    """Session-relative seconds to absolute ns."""
    return OPEN + round(seconds * SEC)


def trades_frame(rows, symbol="AAA"):
    """rows: (t_seconds, price, size, exchange)"""
    return pd.DataFrame({
        "timestamp_ns": np.array([at(r[0]) for r in rows], dtype=np.int64),
        "symbol": symbol,
        "price": [float(r[1]) for r in rows],
        "size": np.array([r[2] for r in rows], dtype=np.int64),
        "exchange": [r[3] for r in rows],
    })


def quotes_frame(rows, symbol="AAA"):
    """rows: (t_seconds, bid, bid_size, ask, ask_size, exchange, is_nbbo)"""
    frame = pd.DataFrame({
        "timestamp_ns": np.array([at(r[0]) for r in rows], dtype=np.int64),
        "symbol": symbol,
        "bid_price": [float(r[1]) for r in rows],
        "bid_size": np.array([r[2] for r in rows], dtype=np.int64),
        "ask_price": [float(r[3]) for r in rows],
        "ask_size": np.array([r[4] for r in rows], dtype=np.int64),
        "exchange": [r[5] for r in rows],
        "is_nbbo": [bool(r[6]) for r in rows],
    })
    frame["crossed"] = frame["bid_price"] > frame["ask_price"]
    return frame


def reference(symbol="AAA", adtv=1e6, adrv=0.5):
    import datetime as dt
    return DailyReference(symbol, adtv, adrv, dt.date(2018, 3, 1), dt.date(2018, 3, 30))


@pytest.fixture(scope="session")
def small_synth(tmp_path_factory):
    """Three-symbol generated day."""
    out = tmp_path_factory.mktemp("synth3")
    files = generate_day(SynthSpec(seed=11, n_symbols=3), out)
    return files


@pytest.fixture(scope="session")
def big_synth(tmp_path_factory):
    """Fifty-symbol generated day (the acceptance-scale input)."""
    out = tmp_path_factory.mktemp("synth50")
    return generate_day(SynthSpec(seed=2018, n_symbols=50), out)


@pytest.fixture(scope="session")
def big_runs(big_synth, tmp_path_factory):
    """Two identical full-pipeline runs over the fifty-symbol day, with wall times."""
    import time
    runs = []
    for tag in ("a", "b"):
        out = tmp_path_factory.mktemp(f"run50{tag}")
        cfg = PipelineConfig(trades=big_synth.trades, quotes=big_synth.quotes,
                             daily=big_synth.daily, out=out)
        t0 = time.perf_counter()
        report = run_pipeline(cfg)
        runs.append((out, report, time.perf_counter() - t0))
    return runs
