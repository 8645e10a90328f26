import logging
import re

import numpy as np
import sympy

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

_NUMBER = re.compile(r"\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?")
_ALLOWED = re.compile(r"^[\s\d.+\-*/()]*$")


def setup_logging(level="INFO"):
    """
    Configure the root logger once for command-line use.

    Calling it again only changes the level.
    """
    root = logging.getLogger()
    if isinstance(level, str):
        level = level.upper()
    if not root.handlers:
        logging.basicConfig(level=level, format=LOG_FORMAT)
    root.setLevel(level)


def parse_angle(value):
    """
    Evaluate a number or an arithmetic expression over ``pi``.

    Accepts e.g. ``0.5``, ``"pi/4"``, ``"2*pi"``, ``"-3*pi/8"``.

    Raises:
        ValueError: If the expression uses anything but numbers, ``pi``,
            parentheses and + - * /.
    """
    if isinstance(value, bool):
        raise ValueError(f"expected a number or an expression over pi, got {value!r}")
    if isinstance(value, (int, float, np.integer, np.floating)):
        return float(value)
    if not isinstance(value, str) or not value.strip():
        raise ValueError(f"expected a number or an expression over pi, got {value!r}")

    # Only numbers and the symbol pi may appear between operators
    stripped = _NUMBER.sub(" ", value).replace("pi", " ")
    if not _ALLOWED.match(stripped):
        raise ValueError(f"unsupported characters in expression {value!r}")
    try:
        expr = sympy.sympify(value, locals={"pi": sympy.pi})
        result = float(expr.evalf(30))
    except (sympy.SympifyError, TypeError, ZeroDivisionError) as e:
        raise ValueError(f"cannot evaluate {value!r}.\nDetails: {e}") from e
    if not np.isfinite(result):
        raise ValueError(f"expression {value!r} is not finite")
    return result


def fd_steps(lam, step):
    """Central-difference steps h_μ = step·max(1, |λ_μ|)."""
    return step * np.maximum(1.0, np.abs(np.asarray(lam, dtype=float)))


def to_jsonable(value):
    """
    Convert numpy scalars and arrays to plain Python, NaN and inf to None.
    """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if np.isfinite(value) else None
    return value


def format_float(value, digits=6):
    """Short human-readable rendering for log lines."""
    if value is None or not np.isfinite(value):
        return "nan"
    return f"{value:.{digits}g}"
