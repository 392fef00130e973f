"""Seeded random composition trees evaluated both as jets and as plain numpy (any float dtype)."""

import numpy as np

from conelab import jets as J

PRIMITIVES = {
    "sin": (J.sin, np.sin),
    "cos": (J.cos, np.cos),
    "tanh": (J.tanh, np.tanh),
    "exp": (lambda u: J.exp(u * 0.5), lambda v: np.exp(v * 0.5)),
    "sinh": (lambda u: J.sinh(u * 0.5), lambda v: np.sinh(v * 0.5)),
    "cosh": (lambda u: J.cosh(u * 0.5), lambda v: np.cosh(v * 0.5)),
    "sqrt": (lambda u: J.sqrt(u * u + 1.0), lambda v: np.sqrt(v * v + 1.0)),
    "recip": (lambda u: 1.0 / (u * u + 1.5), lambda v: 1.0 / (v * v + 1.5)),
    "cube": (lambda u: J.pow_int(u, 3), lambda v: v**3),
}


def random_tree(rng, depth: int, d: int):
    if depth == 0 or rng.random() < 0.25:
        return ("var", int(rng.integers(d)), float(rng.uniform(-1, 1)))
    kind = str(rng.choice(["unary", "add", "sub", "mul"]))
    if kind == "unary":
        return (kind, str(rng.choice(sorted(PRIMITIVES))), random_tree(rng, depth - 1, d))
    return (kind, random_tree(rng, depth - 1, d), random_tree(rng, depth - 1, d))


def evaluate(tree, x, lib: str):
    if tree[0] == "var":
        return x[tree[1]] * tree[2] + 0.3 * tree[2]
    if tree[0] == "unary":
        return PRIMITIVES[tree[1]][0 if lib == "jet" else 1](evaluate(tree[2], x, lib))
    a, b = evaluate(tree[1], x, lib), evaluate(tree[2], x, lib)
    return {"add": lambda: a + b, "sub": lambda: a - b, "mul": lambda: a * b}[tree[0]]()


def tree_error(tree, p) -> float:
    """Largest excess of |jet - fd| over 1e-5 |fd| + 1e-8 across all coefficients (<= 0 means agreement)."""
    p = np.asarray(p, dtype=float)
    val = evaluate(tree, J.seed(p), "jet")
    if not isinstance(val, J.Jet):  # constant tree
        return -1.0
    fd = J.fd_derivatives(lambda x: evaluate(tree, list(x), "np"), p, 3, dtype=np.longdouble)
    worst = -np.inf
    for a, b in ((val.grad, fd.grad), (val.hess, fd.hess), (val.third, fd.third)):
        worst = max(worst, float(np.max(np.abs(a - b) - (1e-5 * np.abs(b) + 1e-8))))
    return worst


def tree_suite(n: int = 1000, seed: int = 42):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        d = int(rng.integers(1, 5))
        yield random_tree(rng, 5, d), rng.uniform(-0.8, 0.8, d)
