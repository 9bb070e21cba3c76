from fractions import Fraction

import sympy as sp

SQRT2 = sp.sqrt(2)


def rational(value) -> sp.Rational:
  """Exact sympy rational from an int, Fraction, float or sympy Rational."""
  if isinstance(value, sp.Rational):
    return value
  if isinstance(value, sp.Basic):
    raise TypeError(f"Cannot use {value!r} as an exact rational")
  f = Fraction(value)
  return sp.Rational(f.numerator, f.denominator)


def surd(q, r=0) -> sp.Expr:
  """
  The exact number q + r*sqrt(2) with rational q, r.

  Rational iff r == 0, so the rational/irrational case splits of the
  interval examples stay decidable through sympy's assumptions.
  """
  return rational(q) + rational(r) * SQRT2


def is_rational(value) -> bool:
  if isinstance(value, (int, Fraction)):
    return True
  if isinstance(value, sp.Basic):
    return bool(value.is_rational)
  return False


def sigma(m) -> sp.Rational:
  """Rational penalty: 1/p for m = q/p in lowest terms, 0 for irrational m."""
  if isinstance(m, sp.Basic):
    if not m.is_rational:
      return sp.Integer(0)
    return sp.Rational(1, sp.Rational(m).q)
  if not isinstance(m, (int, Fraction)):
    raise TypeError(f"sigma needs an exact value, got {m!r}")
  return sp.Rational(1, Fraction(m).denominator)
