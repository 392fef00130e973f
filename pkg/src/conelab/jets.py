"""Truncated Taylor-mode arithmetic up to third order.

A :class:`Jet` carries the value of a (possibly tensor-valued) quantity at a
point together with its first, second and third partial derivatives with
respect to ``nvars`` coordinates.  Derivative axes are appended after the
tensor axes, so a metric jet of a d-dimensional chart has

    value  (d, d)
    grad   (d, d, n)          grad[a, b, i]       = d_i g_ab
    hess   (d, d, n, n)       hess[a, b, i, j]    = d_i d_j g_ab
    third  (d, d, n, n, n)

Jets may be truncated below order 3; any derivative array beyond ``order`` is
``None`` and operations mixing orders return the smaller one.

The module also hosts :func:`fd_derivatives`, the central-difference oracle
used to cross-check everything computed through jets.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from collections.abc import Callable, Sequence

import numpy as np

from .errors import ChartError, DomainError, JetOrderError

MAX_ORDER = 3


def _ext(a, k):
    """Append ``k`` singleton axes to ``a``."""
    a = np.asarray(a)
    return a.reshape(a.shape + (1,) * k) if k else a


def _sym3(m):
    """Sum the three placements of the trailing single index of m[..., p, q, r].

    ``m`` holds a pair (p, q) symmetric part times a single index r; the
    result is m_pqr + m_prq + m_qrp.
    """
    return m + np.swapaxes(m, -1, -2) + np.moveaxis(m, -1, -3)


class Jet:
    """Value and partial derivatives (orders 0..3) of a tensor quantity."""

    __slots__ = ("value", "grad", "hess", "third")
    __array_priority__ = 1000

    def __init__(self, value, grad=None, hess=None, third=None):
        self.value = np.asarray(value, dtype=float)
        self.grad = None if grad is None else np.asarray(grad, dtype=float)
        self.hess = None if hess is None or grad is None else np.asarray(hess, dtype=float)
        self.third = None if third is None or self.hess is None else np.asarray(third, dtype=float)

    # -- bookkeeping -------------------------------------------------------

    @property
    def order(self) -> int:
        if self.grad is None:
            return 0
        if self.hess is None:
            return 1
        if self.third is None:
            return 2
        return 3

    @property
    def nvars(self) -> int:
        return 0 if self.grad is None else self.grad.shape[-1]

    @property
    def shape(self) -> tuple:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    def arrays(self):
        return [a for a in (self.value, self.grad, self.hess, self.third) if a is not None]

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise JetOrderError(f"jet has order {self.order}, {order} requested")
        arrs = self.arrays()[: order + 1] + [None] * (3 - order)
        return Jet(*arrs)

    def d(self) -> "Jet":
        """Partial derivatives as a jet one order lower; the new last tensor axis indexes the variable."""
        if self.order < 1:
            raise JetOrderError("cannot differentiate an order-0 jet")
        return Jet(self.grad, self.hess, self.third)

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Jet(*[a[idx] for a in self.arrays()])

    def restrict(self, variables: Sequence[int]) -> "Jet":
        """Keep only derivatives with respect to ``variables`` (the others are frozen)."""
        idx = np.asarray(variables, dtype=int)
        out = [self.value]
        if self.order >= 1:
            out.append(self.grad[..., idx])
        if self.order >= 2:
            out.append(self.hess[..., idx, :][..., idx])
        if self.order >= 3:
            out.append(self.third[..., idx, :, :][..., idx, :][..., idx])
        return Jet(*out)

    def map_linear(self, fn) -> "Jet":
        """Apply a linear map acting on the leading (tensor) axes of every coefficient array."""
        return Jet(*[fn(a) for a in self.arrays()])

    def transpose(self, perm: Sequence[int]) -> "Jet":
        perm = tuple(perm)
        out = []
        for k, a in enumerate(self.arrays()):
            out.append(np.transpose(a, perm + tuple(range(len(perm), len(perm) + k))))
        return Jet(*out)

    @property
    def T(self) -> "Jet":
        return self.transpose((1, 0))

    def reshape(self, shape) -> "Jet":
        shape = tuple(shape)
        n = self.nvars
        return Jet(*[a.reshape(shape + (n,) * k) for k, a in enumerate(self.arrays())])

    def is_symmetric(self, atol: float = 0.0) -> bool:
        """True when hess and third are symmetric under every permutation of derivative slots."""
        if self.hess is not None:
            if not np.allclose(self.hess, np.swapaxes(self.hess, -1, -2), rtol=0.0, atol=atol):
                return False
        if self.third is not None:
            t = self.third
            for p in itertools.permutations(range(3)):
                lead = tuple(range(t.ndim - 3))
                q = np.transpose(t, lead + tuple(t.ndim - 3 + i for i in p))
                if not np.allclose(t, q, rtol=0.0, atol=atol):
                    return False
        return True

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, order={self.order}, nvars={self.nvars}, value={self.value!r})"

    # -- arithmetic ----------------------------------------------------------

    def __neg__(self):
        return Jet(*[-a for a in self.arrays()])

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            k = min(self.order, other.order)
            arrs = [a + b for a, b in zip(self.arrays()[: k + 1], other.arrays()[: k + 1])]
            v = arrs[0]
            # derivative arrays must broadcast against the summed tensor shape
            out = [v]
            for i, a in enumerate(arrs[1:], start=1):
                out.append(np.broadcast_to(a, v.shape + a.shape[a.ndim - i:]).copy())
            return Jet(*out)
        c = np.asarray(other, dtype=float)
        v = self.value + c
        out = [v]
        for i, a in enumerate(self.arrays()[1:], start=1):
            out.append(np.broadcast_to(a, v.shape + a.shape[a.ndim - i:]).copy())
        return Jet(*out)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            c = np.asarray(other, dtype=float)
            return Jet(*[a * _ext(c, k) for k, a in enumerate(self.arrays())])
        return _mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            c = np.asarray(other, dtype=float)
            if np.any(c == 0):
                raise DomainError("division by zero")
            return self * (1.0 / c)
        return self * reciprocal(other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, n):
        if isinstance(n, (int, np.integer)):
            return pow_int(self, int(n))
        raise TypeError("only integer powers are supported on jets; use sqrt/exp/log")


def _mul(a: Jet, b: Jet) -> Jet:
    """Leibniz product for elementwise (broadcast) multiplication."""
    k = min(a.order, b.order)
    v = a.value * b.value
    if k == 0:
        return Jet(v)
    av, bv = a.value, b.value
    g = a.grad * _ext(bv, 1) + _ext(av, 1) * b.grad
    if k == 1:
        return Jet(v, g)
    cross = a.grad[..., :, None] * b.grad[..., None, :]
    h = a.hess * _ext(bv, 2) + _ext(av, 2) * b.hess + cross + np.swapaxes(cross, -1, -2)
    if k == 2:
        return Jet(v, g, h)
    t = (
        a.third * _ext(bv, 3)
        + _ext(av, 3) * b.third
        + _sym3(a.hess[..., :, :, None] * b.grad[..., None, None, :])
        + _sym3(b.hess[..., :, :, None] * a.grad[..., None, None, :])
    )
    return Jet(v, g, h, t)


def compose(u: Jet, d0, d1, d2, d3) -> Jet:
    """Faa di Bruno: f(u) given f and its first three derivatives evaluated at u.value."""
    k = u.order
    if k == 0:
        return Jet(d0)
    g = _ext(d1, 1) * u.grad
    if k == 1:
        return Jet(d0, g)
    gg = u.grad[..., :, None] * u.grad[..., None, :]
    h = _ext(d2, 2) * gg + _ext(d1, 2) * u.hess
    if k == 2:
        return Jet(d0, g, h)
    ggg = gg[..., :, :, None] * u.grad[..., None, None, :]
    t = (
        _ext(d3, 3) * ggg
        + _ext(d2, 3) * _sym3(u.hess[..., :, :, None] * u.grad[..., None, None, :])
        + _ext(d1, 3) * u.third
    )
    return Jet(d0, g, h, t)


# -- elementary functions ------------------------------------------------------
# Each accepts a Jet or a plain float/array; plain inputs return plain outputs so
# the same formulas drive both the jet path and float evaluation.


def exp(u):
    if not isinstance(u, Jet):
        return np.exp(u)
    e = np.exp(u.value)
    return compose(u, e, e, e, e)


def log(u):
    if not isinstance(u, Jet):
        if np.any(np.asarray(u) <= 0):
            raise DomainError("log of non-positive value")
        return np.log(u)
    x = u.value
    if np.any(x <= 0):
        raise DomainError("log of non-positive value")
    return compose(u, np.log(x), 1 / x, -1 / x**2, 2 / x**3)


def sqrt(u):
    if not isinstance(u, Jet):
        if np.any(np.asarray(u) <= 0):
            raise DomainError("sqrt requires a positive value")
        return np.sqrt(u)
    x = u.value
    if np.any(x <= 0):
        raise DomainError("sqrt requires a positive value")
    s = np.sqrt(x)
    return compose(u, s, 0.5 / s, -0.25 / (x * s), 0.375 / (x * x * s))


def reciprocal(u):
    if not isinstance(u, Jet):
        if np.any(np.asarray(u) == 0):
            raise DomainError("division by zero")
        return 1.0 / u
    x = u.value
    if np.any(x == 0):
        raise DomainError("division by zero")
    r = 1.0 / x
    return compose(u, r, -r**2, 2 * r**3, -6 * r**4)


def sin(u):
    if not isinstance(u, Jet):
        return np.sin(u)
    s, c = np.sin(u.value), np.cos(u.value)
    return compose(u, s, c, -s, -c)


def cos(u):
    if not isinstance(u, Jet):
        return np.cos(u)
    s, c = np.sin(u.value), np.cos(u.value)
    return compose(u, c, -s, -c, s)


def sinh(u):
    if not isinstance(u, Jet):
        return np.sinh(u)
    s, c = np.sinh(u.value), np.cosh(u.value)
    return compose(u, s, c, s, c)


def cosh(u):
    if not isinstance(u, Jet):
        return np.cosh(u)
    s, c = np.sinh(u.value), np.cosh(u.value)
    return compose(u, c, s, c, s)


def tanh(u):
    if not isinstance(u, Jet):
        return np.tanh(u)
    t = np.tanh(u.value)
    s = 1 - t * t
    return compose(u, t, s, -2 * t * s, s * (6 * t * t - 2))


def arctan(u):
    if not isinstance(u, Jet):
        return np.arctan(u)
    x = u.value
    q = 1 + x * x
    return compose(u, np.arctan(x), 1 / q, -2 * x / q**2, (6 * x * x - 2) / q**3)


def pow_int(u, n: int):
    if not isinstance(u, Jet):
        if n < 0 and np.any(np.asarray(u) == 0):
            raise DomainError("negative power of zero")
        return np.asarray(u, dtype=float) ** n
    x = u.value
    if n < 0 and np.any(x == 0):
        raise DomainError("negative power of zero")
    coeffs = [1.0, float(n), float(n * (n - 1)), float(n * (n - 1) * (n - 2))]
    ds = []
    for k, c in enumerate(coeffs):
        ds.append(np.zeros_like(x) if c == 0 else c * x ** (n - k))
    return compose(u, *ds)


def square(u):
    return u * u


_UNARY = {
    "neg": lambda a: -a,
    "sqrt": sqrt,
    "exp": exp,
    "log": log,
    "sin": sin,
    "cos": cos,
    "sinh": sinh,
    "cosh": cosh,
    "tanh": tanh,
    "arctan": arctan,
}

_BINARY = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
}


def jet_arith(op: str, *args):
    """Dispatch a named primitive; ``pow_int`` takes (jet, n)."""
    if op in _UNARY:
        (a,) = args
        return _UNARY[op](a)
    if op in _BINARY:
        a, b = args
        return _BINARY[op](a, b)
    if op == "pow_int":
        a, n = args
        return pow_int(a, int(n))
    raise ValueError(f"unknown jet primitive {op!r}")


# -- construction --------------------------------------------------------------


def constant(value, nvars: int, order: int = MAX_ORDER) -> Jet:
    v = np.asarray(value, dtype=float)
    arrs = [v] + [np.zeros(v.shape + (nvars,) * k) for k in range(1, order + 1)]
    return Jet(*arrs)


def seed_coordinate(i: int, coords, d: int | None = None, order: int = MAX_ORDER) -> Jet:
    """Jet of the i-th coordinate function at ``coords``: grad = e_i, higher derivatives zero."""
    coords = np.asarray(coords, dtype=float).reshape(-1)
    d = coords.size if d is None else d
    if not 0 <= i < d:
        raise IndexError(f"coordinate index {i} out of range for dimension {d}")
    if not 0 <= order <= MAX_ORDER:
        raise JetOrderError(f"order must lie in 0..{MAX_ORDER}")
    j = constant(coords[i], d, order)
    if order >= 1:
        j.grad[i] = 1.0
    return j


def seed(coords, order: int = MAX_ORDER) -> list[Jet]:
    """Coordinate jets for every coordinate of ``coords``."""
    coords = np.asarray(coords, dtype=float).reshape(-1)
    return [seed_coordinate(i, coords, coords.size, order) for i in range(coords.size)]


def as_jet(x, nvars: int, order: int) -> Jet:
    return x if isinstance(x, Jet) else constant(x, nvars, order)


def jarray(nested) -> Jet | np.ndarray:
    """Assemble a nested list of jets and plain numbers into one tensor jet.

    Returns a plain ndarray when no element is a jet.
    """
    arr = np.empty(_nested_shape(nested), dtype=object)
    flat = list(_flatten(nested))
    jets = [e for e in flat if isinstance(e, Jet)]
    if not jets:
        return np.array(flat, dtype=float).reshape(arr.shape)
    n = jets[0].nvars
    order = min(j.order for j in jets)
    elems = [as_jet(e, n, order).truncate(order) for e in flat]
    shape = arr.shape
    out = []
    for k in range(order + 1):
        out.append(np.stack([e.arrays()[k] for e in elems]).reshape(shape + (n,) * k))
    return Jet(*out)


def jstack(items: Sequence, axis: int = 0) -> Jet:
    if axis != 0:
        raise NotImplementedError("jstack only stacks along the leading axis")
    jets = [e for e in items if isinstance(e, Jet)]
    n = jets[0].nvars
    order = min(j.order for j in jets)
    elems = [as_jet(e, n, order).truncate(order) for e in items]
    return Jet(*[np.stack([e.arrays()[k] for e in elems]) for k in range(order + 1)])


def _nested_shape(x):
    if isinstance(x, (list, tuple)):
        return (len(x),) + _nested_shape(x[0])
    return ()


def _flatten(x):
    if isinstance(x, (list, tuple)):
        for e in x:
            yield from _flatten(e)
    else:
        yield x


def embed(jet: Jet, nvars: int, positions: Sequence[int]) -> Jet:
    """Re-express a jet in a larger variable space; its variables land at ``positions``."""
    pos = np.asarray(positions, dtype=int)
    if jet.order > 0 and pos.size != jet.nvars:
        raise ValueError("positions must match the jet's variable count")
    S = jet.shape
    out = [jet.value]
    if jet.order >= 1:
        g = np.zeros(S + (nvars,))
        g[..., pos] = jet.grad
        out.append(g)
    if jet.order >= 2:
        h = np.zeros(S + (nvars, nvars))
        h[(Ellipsis,) + np.ix_(pos, pos)] = jet.hess
        out.append(h)
    if jet.order >= 3:
        t = np.zeros(S + (nvars,) * 3)
        t[(Ellipsis,) + np.ix_(pos, pos, pos)] = jet.third
        out.append(t)
    return Jet(*out)


# -- tensor algebra on jets ----------------------------------------------------


def einsum(subscripts: str, a, b) -> Jet:
    """Leibniz rule for a two-operand contraction; derivative axes are carried along.

    ``subscripts`` uses lowercase letters only, e.g. ``"ij,jk->ik"``.
    Either operand may be a plain array, treated as constant.
    """
    ins, out = subscripts.replace(" ", "").split("->")
    sa, sb = ins.split(",")
    E = np.einsum
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        return E(subscripts, a, b)
    if not isinstance(a, Jet):
        return b.map_linear(lambda arr: E(f"{sa},{sb}...->{out}...", a, arr))
    if not isinstance(b, Jet):
        return a.map_linear(lambda arr: E(f"{sa}...,{sb}->{out}...", arr, b))
    k = min(a.order, b.order)
    v = E(f"{sa},{sb}->{out}", a.value, b.value)
    if k == 0:
        return Jet(v)
    g = E(f"{sa}P,{sb}->{out}P", a.grad, b.value) + E(f"{sa},{sb}P->{out}P", a.value, b.grad)
    if k == 1:
        return Jet(v, g)
    cross = E(f"{sa}P,{sb}Q->{out}PQ", a.grad, b.grad)
    h = (
        E(f"{sa}PQ,{sb}->{out}PQ", a.hess, b.value)
        + E(f"{sa},{sb}PQ->{out}PQ", a.value, b.hess)
        + cross
        + np.swapaxes(cross, -1, -2)
    )
    if k == 2:
        return Jet(v, g, h)
    t = (
        E(f"{sa}PQR,{sb}->{out}PQR", a.third, b.value)
        + E(f"{sa},{sb}PQR->{out}PQR", a.value, b.third)
        + _sym3(E(f"{sa}PQ,{sb}R->{out}PQR", a.hess, b.grad))
        + _sym3(E(f"{sa}R,{sb}PQ->{out}PQR", a.grad, b.hess))
    )
    return Jet(v, g, h, t)


def inv(m: Jet) -> Jet:
    """Inverse of a square matrix jet, solved order by order from M B = I."""
    B0 = np.linalg.inv(m.value)
    k = m.order
    if k == 0:
        return Jet(B0)
    E = np.einsum
    Bi = -E("ab,bcP,cd->adP", B0, m.grad, B0)
    if k == 1:
        return Jet(B0, Bi)
    # G0 B_pq = -(G_p B_q + G_q B_p + G_pq B0)
    x = E("abP,bcQ->acPQ", m.grad, Bi)
    Bij = -E("ab,bcPQ->acPQ", B0, x + np.swapaxes(x, -1, -2) + E("abPQ,bc->acPQ", m.hess, B0))
    if k == 2:
        return Jet(B0, Bi, Bij)
    y = _sym3(E("abPQ,bcR->acPQR", m.hess, Bi)) + _sym3(E("abR,bcPQ->acPQR", m.grad, Bij))
    y = y + E("abPQR,bc->acPQR", m.third, B0)
    Bijk = -E("ab,bcPQR->acPQR", B0, y)
    return Jet(B0, Bi, Bij, Bijk)


def det(m: Jet) -> float:
    return float(np.linalg.det(m.value))


# -- finite-difference oracle --------------------------------------------------

# Central stencils: {accuracy: {derivative order: (offsets, weights)}}; weights are exact fractions
_F = Fraction
_STENCILS = {
    2: {
        1: ((-1, 1), (_F(-1, 2), _F(1, 2))),
        2: ((-1, 0, 1), (_F(1), _F(-2), _F(1))),
        3: ((-2, -1, 1, 2), (_F(-1, 2), _F(1), _F(-1), _F(1, 2))),
    },
    4: {
        1: ((-2, -1, 1, 2), (_F(1, 12), _F(-8, 12), _F(8, 12), _F(-1, 12))),
        2: ((-2, -1, 0, 1, 2), (_F(-1, 12), _F(16, 12), _F(-30, 12), _F(16, 12), _F(-1, 12))),
        3: ((-3, -2, -1, 1, 2, 3), (_F(1, 8), _F(-1), _F(13, 8), _F(-13, 8), _F(1), _F(-1, 8))),
    },
}


def default_fd_steps(p, order: int) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if order >= 3:
        return np.full(p.shape, 2e-3)  # truncation ~h^4 vs roundoff ~eps/h^3
    return np.maximum(1e-3, 1e-3 * np.abs(p))


def fd_derivatives(
    f: Callable[[np.ndarray], float | np.ndarray],
    p,
    order: int,
    step: float | Sequence[float] | None = None,
    chart=None,
    accuracy: int = 4,
    dtype=float,
) -> Jet:
    """Central-difference estimates of all partial derivatives of ``f`` up to ``order``.

    ``f`` maps a coordinate vector to a float (or an array, differentiated
    elementwise).  Each mixed partial is a tensor product of one-dimensional
    central stencils, so the truncation error is O(step**accuracy) with
    ``accuracy`` 2 or 4.  Default steps follow :func:`default_fd_steps`, chosen
    per derivative order.  When ``chart`` is given every stencil node must lie
    inside its box, otherwise :class:`ChartError` is raised.

    ``dtype=np.longdouble`` runs the stencil arithmetic (and ``f``, if it
    follows its input dtype) in extended precision, which pushes the
    round-off floor of third-order stencils from ~1e-7 down to ~1e-10.
    The returned jet is always float64.
    """
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    stencils = _STENCILS[accuracy]
    p = np.asarray(p, dtype=float).reshape(-1).astype(dtype)
    n = p.size
    cache: dict[tuple, np.ndarray] = {}

    def evaluate(x):
        key = tuple(np.round(x, 15))
        if key not in cache:
            if chart is not None and not chart.contains(x):
                raise ChartError(f"finite-difference stencil left the chart at {x}")
            cache[key] = np.asarray(f(x), dtype=dtype)
        return cache[key]

    v0 = evaluate(p)
    S = v0.shape
    arrays = [v0]
    for k in range(1, order + 1):
        if step is None:
            h = default_fd_steps(p.astype(float), k).astype(dtype)
        else:
            h = np.broadcast_to(np.asarray(step, dtype=float), p.shape).astype(dtype)
        out = np.zeros(S + (n,) * k, dtype=dtype)
        for idx in itertools.combinations_with_replacement(range(n), k):
            mult: dict[int, int] = {}
            for i in idx:
                mult[i] = mult.get(i, 0) + 1
            axes = sorted(mult)
            per_axis = [stencils[mult[i]] for i in axes]
            acc = np.zeros(S, dtype=dtype)
            for combo in itertools.product(*[range(len(st[0])) for st in per_axis]):
                x = p.copy()
                w = np.asarray(1, dtype=dtype)
                for ax, st, c in zip(axes, per_axis, combo):
                    x[ax] += st[0][c] * h[ax]
                    frac = st[1][c]
                    w = w * (np.asarray(frac.numerator, dtype=dtype) / frac.denominator) / h[ax] ** mult[ax]
                acc = acc + w * evaluate(x)
            for perm in set(itertools.permutations(idx)):
                out[(Ellipsis,) + perm] = acc
        arrays.append(out)
    return Jet(*[np.asarray(a, dtype=float) for a in arrays])


def max_relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-8) -> float:
    """max |a - b| / max(|b|, floor) over all entries."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), floor)))
