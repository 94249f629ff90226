import math


def fmt_float(x) -> str:
    """Shortest round-trip text for a float; empty string for missing."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return ""
    if x == 0:
        return "0.0"  # drop the sign of -0.0
    return repr(x)
