import re
from fractions import Fraction
from typing import Optional

import numpy as np
import sympy as sp
from sympy.core.function import AppliedUndef

from src.lib.errors import SchemaError

CSV_DIGITS = 17
SUMMARY_DIGITS = 6

# 17 significant digits round-trip every double exactly

def format_value(value, digits: int = CSV_DIGITS) -> str:
  if value is None:
    return "N/A"
  arr = np.atleast_1d(np.asarray(value, dtype=float))
  text = " ".join(f"{v:.{digits}g}" for v in arr)
  return text

def format_summary(value) -> str:
  return format_value(value, SUMMARY_DIGITS)

def parse_number(text) -> Optional[float]:
  """
  Parse strings like:
    - "0.5", "1e-6"
    - "1/3"
    - "pi", "2pi", "pi/2", "-3*pi/4"
  and return the value as float. Returns None if parsing fails.
  """
  if text is None:
    return None
  if isinstance(text, (int, float)):
    return float(text)

  s = str(text).strip().lower().replace(" ", "")
  if s == "":
    return None

  m = re.fullmatch(r"([+-]?[0-9.]*(?:e[+-]?[0-9]+)?)\*?pi(?:/([0-9.]+))?", s)
  if m:
    coef, den = m.groups()
    if coef in ("", "+"):
      coef = "1"
    elif coef == "-":
      coef = "-1"
    try:
      value = float(coef) * np.pi
      return value / float(den) if den else value
    except ValueError:
      return None

  try:
    return float(Fraction(s))
  except (ValueError, ZeroDivisionError):
    return None

# numpy spellings accepted next to sympy's own function names
ALIASES = {"e": sp.E, "arctan": sp.atan, "minimum": sp.Min, "maximum": sp.Max, "abs": sp.Abs}

def compile_function(expr: str, dim: int = 1):
  """
  Compile a real expression in x (or x1..xm) into a vectorised f(X), X of shape (n, m).
  "^" is read as a power.
  """
  text = str(expr).replace("^", "**")
  variables = tuple(sp.symbols(["x"] + [f"x{k + 1}" for k in range(dim)], real=True))
  names = {**ALIASES, **{str(v): v for v in variables}}
  try:
    parsed = sp.sympify(text, locals=names)
  except Exception as e:
    raise SchemaError(f"Cannot parse expression {expr!r}: {e}") from e
  if not isinstance(parsed, sp.Expr):
    raise SchemaError(f"Expression {expr!r} is not a real expression")
  unknown = sorted(str(s) for s in parsed.free_symbols - set(variables))
  unknown += sorted(str(fn.func) for fn in parsed.atoms(AppliedUndef))
  if unknown:
    raise SchemaError(f"Expression {expr!r} uses unknown names: {', '.join(unknown)}")
  fn = sp.lambdify(variables, parsed, "numpy")

  def f(X):
    X = np.asarray(X, dtype=float)
    if X.ndim < 2:
      X = X.reshape(-1, 1)
    out = fn(X[:, 0], *(X[:, k] for k in range(dim)))
    return np.broadcast_to(np.asarray(out, dtype=float), (len(X),)).copy()

  f.expression = str(expr)
  f.sympy_expr = parsed
  return f
