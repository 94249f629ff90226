"""MeasurePanel: one symbol's interval-by-measure matrix, plus its file formats.

Binary cache layout (little-endian)::

    8 bytes   magic  b"MCPANEL\\0"
    2 bytes   uint16 format version (1)
    4 bytes   uint32 length of the JSON header
    N bytes   UTF-8 JSON header {"symbol", "measures", "n_rows"}
    8*R bytes int64 interval starts
    8*R*C     float64 values, row-major, NaN for missing
"""
from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass

import numpy as np
import pandas as pd


PANEL_MAGIC = b"MCPANEL\0"
PANEL_VERSION = 1


def _fast_fmt(v: float) -> str:
    # same text as fmt_float, for plain Python floats
    return "" if v != v else ("0.0" if v == 0 else repr(v))


@dataclass
class MeasurePanel:
    symbol: str
    interval_start: np.ndarray
    values: np.ndarray
    measures: tuple[str, ...]

    def __post_init__(self):
        self.interval_start = np.asarray(self.interval_start, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=float)
        self.measures = tuple(self.measures)
        if self.values.shape != (len(self.interval_start), len(self.measures)):
            raise ValueError(
                f"values shape {self.values.shape} does not match "
                f"{len(self.interval_start)} rows x {len(self.measures)} measures"
            )
        if len(set(self.measures)) != len(self.measures):
            raise ValueError("duplicate measure names")
        steps = np.diff(self.interval_start)
        if len(steps) and not np.all(steps == steps[0]):
            raise ValueError("interval grid is not evenly spaced")
        if len(steps) and steps[0] <= 0:
            raise ValueError("interval grid must increase")

    @property
    def shape(self):
        return self.values.shape

    @property
    def interval_ns(self) -> int | None:
        return int(self.interval_start[1] - self.interval_start[0]) if len(self.interval_start) > 1 else None

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.measures.index(name)]

    def select(self, names) -> "MeasurePanel":
        idx = [self.measures.index(n) for n in names]
        return MeasurePanel(self.symbol, self.interval_start, self.values[:, idx], tuple(names))

    def coverage(self) -> np.ndarray:
        """Fraction of non-missing intervals per measure."""
        if not len(self.values):
            return np.zeros(len(self.measures))
        return (~np.isnan(self.values)).mean(axis=0)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values, columns=list(self.measures))
        frame.insert(0, "interval_start_ns", self.interval_start)
        return frame

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["interval_start_ns", *self.measures])
            fmt = _fast_fmt
            for t, row in zip(self.interval_start.tolist(), self.values.tolist()):
                fh.write(f"{t},{','.join(map(fmt, row))}\n")

    @classmethod
    def read_csv(cls, path, symbol: str | None = None) -> "MeasurePanel":
        frame = pd.read_csv(path, dtype={"interval_start_ns": np.int64},
                            float_precision="round_trip")
        if frame.columns[0] != "interval_start_ns":
            raise ValueError(f"{path}: first column must be interval_start_ns")
        measures = tuple(frame.columns[1:])
        return cls(
            symbol or "",
            frame["interval_start_ns"].to_numpy(),
            frame[list(measures)].to_numpy(dtype=float),
            measures,
        )

    def save(self, path) -> None:
        header = json.dumps({"symbol": self.symbol, "measures": list(self.measures),
                             "n_rows": len(self.interval_start)}).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(PANEL_MAGIC)
            fh.write(struct.pack("<HI", PANEL_VERSION, len(header)))
            fh.write(header)
            fh.write(self.interval_start.astype("<i8").tobytes())
            fh.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "MeasurePanel":
        with open(path, "rb") as fh:
            data = fh.read()
        if data[:8] != PANEL_MAGIC:
            raise ValueError(f"{path}: not a panel cache file")
        version, hlen = struct.unpack_from("<HI", data, 8)
        if version != PANEL_VERSION:
            raise ValueError(f"{path}: unsupported panel cache version {version}")
        pos = 14
        header = json.loads(data[pos:pos + hlen].decode("utf-8"))
        pos += hlen
        n, m = header["n_rows"], len(header["measures"])
        starts = np.frombuffer(data, dtype="<i8", count=n, offset=pos)
        pos += 8 * n
        values = np.frombuffer(data, dtype="<f8", count=n * m, offset=pos).reshape(n, m)
        return cls(header["symbol"], starts.copy(), values.copy(), tuple(header["measures"]))
