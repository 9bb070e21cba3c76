import numpy as np

from src.curve_core import AnalyticSpec, Curve, sampled_curve
from src.lib.errors import UnknownCurve

TWO_PI = 2.0 * np.pi


def _vec(value, dim=None):
  arr = np.asarray(value, dtype=float).ravel()
  if dim is not None and arr.size != dim:
    raise UnknownCurve(f"Expected a {dim}-vector, got {value!r}")
  return arr


def _domain(domain, default):
  lo, hi = default if domain is None else domain
  return float(lo), float(hi)


def segment(start=(0.0, 0.0), end=(3.0, 4.0), domain=None):
  p, q = _vec(start), _vec(end)
  if p.size != q.size:
    raise UnknownCurve(f"Segment endpoints differ in dimension: {start!r} vs {end!r}")
  a, b = _domain(domain, (0.0, 1.0))
  step = (q - p) / (b - a)
  return Curve(a, b, p.size, AnalyticSpec(
    "segment",
    {"start": p.tolist(), "end": q.tolist(), "domain": [a, b]},
    lambda x: p[None, :] + (x - a)[:, None] * step[None, :],
    lambda x: np.broadcast_to(step, (len(x), p.size)).copy(),
  ))


def constant(point=(0.0, 0.0), domain=None):
  p = _vec(point)
  a, b = _domain(domain, (0.0, 1.0))
  return Curve(a, b, p.size, AnalyticSpec(
    "constant",
    {"point": p.tolist(), "domain": [a, b]},
    lambda x: np.broadcast_to(p, (len(x), p.size)).copy(),
    lambda x: np.zeros((len(x), p.size)),
  ))


def circle(radius=1.0, center=(0.0, 0.0), speed=1.0, domain=None):
  r, k = float(radius), float(speed)
  c = _vec(center, 2)
  a, b = _domain(domain, (0.0, TWO_PI / k))
  return Curve(a, b, 2, AnalyticSpec(
    "circle",
    {"radius": r, "center": c.tolist(), "speed": k, "domain": [a, b]},
    lambda x: np.column_stack([c[0] + r * np.cos(k * x), c[1] + r * np.sin(k * x)]),
    lambda x: np.column_stack([-r * k * np.sin(k * x), r * k * np.cos(k * x)]),
  ))


def double_circle(radius=1.0, center=(0.0, 0.0)):
  return circle(radius=radius, center=center, speed=2.0)


def helix(radius=1.0, pitch=1.0, turns=1.0):
  r, h = float(radius), float(pitch)
  b = TWO_PI * float(turns)
  return Curve(0.0, b, 3, AnalyticSpec(
    "helix",
    {"radius": r, "pitch": h, "turns": float(turns)},
    lambda x: np.column_stack([r * np.cos(x), r * np.sin(x), h * x]),
    lambda x: np.column_stack([-r * np.sin(x), r * np.cos(x), np.full_like(x, h)]),
  ))


def sin2k(k=4):
  k = int(k)
  # C_k: (sin^2(kx), 0) on [0, pi/2], length k
  return Curve(0.0, np.pi / 2, 2, AnalyticSpec(
    "sin2k",
    {"k": k},
    lambda x: np.column_stack([np.sin(k * x) ** 2, np.zeros_like(x)]),
    lambda x: np.column_stack([k * np.sin(2 * k * x), np.zeros_like(x)]),
  ))


def cantor_breakpoints(level: int) -> tuple[np.ndarray, np.ndarray]:
  """Nodes and values of the level-L piecewise-linear Cantor staircase."""
  level = int(level)
  if level < 0:
    raise UnknownCurve(f"Cantor level must be >= 0, got {level}")
  if level == 0:
    return np.array([0.0, 1.0]), np.array([0.0, 1.0])
  idx = np.arange(2 ** level)
  left = np.zeros(idx.size)
  for k in range(1, level + 1):
    left += 2.0 * ((idx >> (level - k)) & 1) * 3.0 ** -k
  rise = 3.0 ** -level
  nodes = np.column_stack([left, left + rise]).ravel()
  values = np.column_stack([idx, idx + 1]).ravel() / 2.0 ** level
  nodes[-1] = 1.0
  return nodes, values


def cantor(level=12):
  nodes, values = cantor_breakpoints(level)
  return Curve(0.0, 1.0, 2, AnalyticSpec(
    "cantor",
    {"level": int(level)},
    lambda x: np.column_stack([x, np.interp(x, nodes, values)]),
    # a.e. derivative of the limiting staircase
    lambda x: np.column_stack([np.ones_like(x), np.zeros_like(x)]),
    absolutely_continuous=False,
    breakpoints=nodes,
  ))


def plateau():
  return Curve(0.0, 2.0, 2, AnalyticSpec(
    "plateau",
    {},
    lambda x: np.column_stack([np.minimum(x, 1.0), np.zeros_like(x)]),
    lambda x: np.column_stack([(x < 1.0).astype(float), np.zeros_like(x)]),
    breakpoints=(1.0,),
  ))


def trigpoly(seed=0, degree=3, dim=2):
  """Seeded random trigonometric polynomial on [0, 2pi], coefficients decaying like 1/k."""
  degree, dim = int(degree), int(dim)
  rng = np.random.default_rng(int(seed))
  K = np.arange(1, degree + 1, dtype=float)
  A = rng.normal(size=(dim, degree)) / K
  B = rng.normal(size=(dim, degree)) / K

  def func(x):
    arg = np.outer(x, K)
    return np.cos(arg) @ A.T + np.sin(arg) @ B.T

  def derivative(x):
    arg = np.outer(x, K)
    return (-np.sin(arg) * K) @ A.T + (np.cos(arg) * K) @ B.T

  return Curve(0.0, TWO_PI, dim, AnalyticSpec(
    "trigpoly", {"seed": int(seed), "degree": degree, "dim": dim}, func, derivative,
  ))


def polyline(vertices, nodes=None):
  verts = np.asarray(vertices, dtype=float)
  if verts.ndim != 2 or len(verts) < 2:
    raise UnknownCurve("polyline needs at least two vertices given as rows")
  if nodes is None:
    nodes = np.linspace(0.0, 1.0, len(verts))
  return sampled_curve(nodes, verts)


curve_builders = {
  "segment": segment,
  "constant": constant,
  "circle": circle,
  "double_circle": double_circle,
  "helix": helix,
  "sin2k": sin2k,
  "cantor": cantor,
  "plateau": plateau,
  "trigpoly": trigpoly,
  "polyline": polyline,
}


def curve_names():
  return sorted(curve_builders)


def get_curve(name, **params):
  builder = curve_builders.get(str(name).lower())
  if builder is None:
    raise UnknownCurve(f"Unknown curve {name!r}; known: {', '.join(curve_names())}")
  try:
    return builder(**params)
  except TypeError as e:
    raise UnknownCurve(f"Bad parameters for curve {name!r}: {e}") from e
