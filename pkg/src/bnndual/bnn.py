"""Threshold-activation networks and their exact MILP training formulation.

Layer ``k`` (``k = 1..n``) maps the ``L[k-1]`` activations of the previous
layer to ``L[k]`` binary activations::

    a_j = sum_i w[k][i][j] * sigma_i        sigma_j = 1 if a_j >= lam[k] else 0

The encoder introduces a binary ``u`` per neuron and sample, linearization
columns ``s = w * u_prev`` for layers after the first, and big-M pairs with
``M_1 = n r + 1`` (``n`` the input dimension, ``r`` a strict norm bound on the
inputs) and ``M_k = L[k-1] + 1``.  Strict ``<`` rows become ``<= rhs - epsilon``.
"""

from __future__ import annotations

import enum
import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from . import model
from .errors import BadEpsilon, ParseError, ShapeMismatch, StatusNotOptimal
from .model import ConicMip, Sense
from .rational import as_fraction, fmt

DEFAULT_EPSILON = Fraction(1, 10**6)


class Loss(enum.Enum):
    ZERO_ONE = "zero_one"
    ABSOLUTE = "absolute_linear"

    @classmethod
    def parse(cls, text) -> "Loss":
        if isinstance(text, Loss):
            return text
        key = str(text).strip().lower().replace("-", "_")
        for member in cls:
            if key in (member.value, member.name.lower()):
                return member
        if key in ("zeroone", "0_1", "01"):
            return cls.ZERO_ONE
        if key in ("absolute", "abs", "absolutelinear", "l1"):
            return cls.ABSOLUTE
        raise ValueError(f"unknown loss {text!r}")


@dataclass(frozen=True)
class BnnArchitecture:
    layer_sizes: tuple
    loss: Loss = Loss.ZERO_ONE

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ShapeMismatch(f"need at least two layers of size >= 1, got {sizes}")
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "loss", Loss.parse(self.loss))

    @property
    def depth(self) -> int:
        """Number of weight layers."""
        return len(self.layer_sizes) - 1


@dataclass(frozen=True)
class WeightAssignment:
    weights: tuple  # weights[k-1][i][j], shape L[k-1] x L[k]
    thresholds: tuple  # thresholds[k-1] = lambda_k

    def __post_init__(self):
        object.__setattr__(
            self,
            "weights",
            tuple(tuple(tuple(as_fraction(v) for v in row) for row in mat) for mat in self.weights),
        )
        object.__setattr__(self, "thresholds", tuple(as_fraction(v) for v in self.thresholds))
        for mat in self.weights:
            for row in mat:
                if any(abs(v) > 1 for v in row):
                    raise ValueError("weights must lie in [-1, 1]")
        if any(abs(v) > 1 for v in self.thresholds):
            raise ValueError("thresholds must lie in [-1, 1]")

    def check(self, arch: BnnArchitecture):
        sizes = arch.layer_sizes
        if len(self.weights) != arch.depth or len(self.thresholds) != arch.depth:
            raise ShapeMismatch(f"expected {arch.depth} weight layers and thresholds")
        for k, mat in enumerate(self.weights, start=1):
            if len(mat) != sizes[k - 1] or any(len(row) != sizes[k] for row in mat):
                raise ShapeMismatch(f"layer {k} weights must be {sizes[k - 1]} x {sizes[k]}")


def _sq_norm(x) -> Fraction:
    return sum((v * v for v in x), Fraction(0))


def _default_radius(inputs) -> Fraction:
    # smallest integer r with r^2 > every squared input norm
    top = max(_sq_norm(x) for x in inputs)
    return Fraction(math.isqrt(math.floor(top)) + 1)


@dataclass(frozen=True)
class Dataset:
    inputs: tuple
    labels: tuple
    radius: Optional[Fraction] = None

    def __post_init__(self):
        inputs = tuple(tuple(as_fraction(v) for v in x) for x in self.inputs)
        labels = tuple(tuple(int(v) for v in y) for y in self.labels)
        if not inputs or len(inputs) != len(labels):
            raise ShapeMismatch("need m >= 1 samples with one label vector each")
        if any(v not in (0, 1) for y in labels for v in y):
            raise ValueError("labels must be binary")
        radius = _default_radius(inputs) if self.radius is None else as_fraction(self.radius)
        if any(_sq_norm(x) >= radius * radius for x in inputs):
            raise ValueError(f"radius {fmt(radius)} does not strictly bound every input norm")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "radius", radius)

    @property
    def m(self) -> int:
        return len(self.inputs)

    def check(self, arch: BnnArchitecture):
        if any(len(x) != arch.layer_sizes[0] for x in self.inputs):
            raise ShapeMismatch(f"inputs must have length {arch.layer_sizes[0]}")
        if any(len(y) != arch.layer_sizes[-1] for y in self.labels):
            raise ShapeMismatch(f"labels must have length {arch.layer_sizes[-1]}")


def preactivations(arch: BnnArchitecture, w: WeightAssignment, x) -> list:
    """Per-layer ``(a, sigma)`` lists for input ``x`` (layers 1..n)."""
    w.check(arch)
    if len(x) != arch.layer_sizes[0]:
        raise ShapeMismatch(f"input has length {len(x)}, expected {arch.layer_sizes[0]}")
    sigma = [as_fraction(v) for v in x]
    out = []
    for mat, lam in zip(w.weights, w.thresholds):
        a = [sum((mat[i][j] * sigma[i] for i in range(len(sigma))), Fraction(0)) for j in range(len(mat[0]))]
        sigma = [1 if aj >= lam else 0 for aj in a]
        out.append((a, sigma))
    return out


def forward(arch: BnnArchitecture, w: WeightAssignment, x) -> tuple:
    return tuple(preactivations(arch, w, x)[-1][1])


def sample_loss(loss: Loss, y, y_hat) -> int:
    if loss is Loss.ZERO_ONE:
        return int(tuple(y) != tuple(y_hat))
    return sum(abs(a - b) for a, b in zip(y, y_hat))


def empirical_loss(arch: BnnArchitecture, w: WeightAssignment, data: Dataset) -> int:
    return sum(sample_loss(arch.loss, y, forward(arch, w, x)) for x, y in zip(data.inputs, data.labels))


def random_weights(arch: BnnArchitecture, rng: random.Random, denominator: int = 1000) -> WeightAssignment:
    """Weights and thresholds drawn uniformly from the grid ``{-1, ..., 1}/denominator``."""
    def draw():
        return Fraction(rng.randint(-denominator, denominator), denominator)

    sizes = arch.layer_sizes
    weights = [
        [[draw() for _ in range(sizes[k])] for _ in range(sizes[k - 1])] for k in range(1, len(sizes))
    ]
    return WeightAssignment(weights, [draw() for _ in range(arch.depth)])


def big_m(arch: BnnArchitecture, data: Dataset) -> list:
    """``[M_1, ..., M_n]`` for the encoder."""
    n = arch.layer_sizes[0]
    return [n * data.radius + 1] + [Fraction(arch.layer_sizes[k - 1] + 1) for k in range(2, arch.depth + 1)]


def is_degenerate(arch, w, data, epsilon=DEFAULT_EPSILON) -> bool:
    """True when some preactivation sits in ``(lam - eps, lam)`` or at the big-M edge.

    Such points have no MILP representation once strict rows are closed with
    ``epsilon``.
    """
    ms = big_m(arch, data)
    for x in data.inputs:
        for (a, _), lam, mk in zip(preactivations(arch, w, x), w.thresholds, ms):
            for aj in a:
                if lam - epsilon < aj < lam or aj - lam > mk - epsilon:
                    return True
    return False


# -- encoding -----------------------------------------------------------------


@dataclass(frozen=True)
class EncodedMilp:
    mip: ConicMip
    var_map: dict = field(compare=False)
    epsilon: Fraction
    arch: BnnArchitecture
    data: Dataset

    def column(self, key) -> int:
        """Position of ``key`` in ``[x | y]`` column order."""
        kind, idx = self.var_map[key]
        return idx if kind == "x" else self.mip.n_int + idx

    def value(self, sol, key):
        kind, idx = self.var_map[key]
        return sol.x[idx] if kind == "x" else sol.y[idx]


class _Builder:
    def __init__(self):
        self.int_keys, self.cont_keys = [], []
        self.int_bounds, self.cont_bounds = [], []
        self.var_map = {}
        self.rows = []  # (coeffs: dict key->coef, sense, rhs)
        self.cost = {}

    def integer(self, key, lo=0, hi=1):
        self.var_map[key] = ("x", len(self.int_keys))
        self.int_keys.append(key)
        self.int_bounds.append((Fraction(lo), Fraction(hi)))

    def continuous(self, key, lo, hi):
        self.var_map[key] = ("y", len(self.cont_keys))
        self.cont_keys.append(key)
        self.cont_bounds.append((Fraction(lo), Fraction(hi)))

    def row(self, coeffs, sense, rhs):
        self.rows.append(({k: Fraction(v) for k, v in coeffs.items() if v}, sense, Fraction(rhs)))

    def build(self) -> ConicMip:
        n1, n2 = len(self.int_keys), len(self.cont_keys)
        A, G, b, senses = [], [], [], []
        for coeffs, sense, rhs in self.rows:
            a, g = [Fraction(0)] * n1, [Fraction(0)] * n2
            for key, v in coeffs.items():
                kind, idx = self.var_map[key]
                (a if kind == "x" else g)[idx] += v
            A.append(a)
            G.append(g)
            b.append(rhs)
            senses.append(sense)
        c = [Fraction(self.cost.get(k, 0)) for k in self.int_keys]
        d = [Fraction(self.cost.get(k, 0)) for k in self.cont_keys]
        return ConicMip(len(self.rows), A, G, b, c, d, senses, self.int_bounds, self.cont_bounds)


def encode(arch: BnnArchitecture, data: Dataset, epsilon=DEFAULT_EPSILON) -> EncodedMilp:
    """Build the training MILP whose optimum is the minimum empirical loss."""
    epsilon = as_fraction(epsilon)
    if epsilon <= 0:
        raise BadEpsilon(f"epsilon must be positive, got {fmt(epsilon)}")
    data.check(arch)
    sizes, n, m = arch.layer_sizes, arch.depth, data.m
    ms = big_m(arch, data)
    bld = _Builder()

    for k in range(1, n + 1):
        for j in range(sizes[k]):
            for i in range(m):
                bld.integer(("u", k, j, i))
    if arch.loss is Loss.ZERO_ONE:
        for i in range(m):
            bld.integer(("e", i))
    for k in range(1, n + 1):
        for l in range(sizes[k - 1]):
            for j in range(sizes[k]):
                bld.continuous(("w", k, l, j), -1, 1)
    for k in range(1, n + 1):
        bld.continuous(("lam", k), -1, 1)
    for k in range(2, n + 1):
        for i in range(m):
            for l in range(sizes[k - 1]):
                for j in range(sizes[k]):
                    bld.continuous(("s", k, l, j, i), -1, 1)
    if arch.loss is Loss.ABSOLUTE:
        for i, y in enumerate(data.labels):
            for j, yj in enumerate(y):
                bld.continuous(("dev+", i, j), 0, 1 - yj)
                bld.continuous(("dev-", i, j), 0, yj)

    for k in range(1, n + 1):
        M = ms[k - 1]
        for i in range(m):
            for j in range(sizes[k]):
                if k == 1:
                    act = {("w", 1, l, j): data.inputs[i][l] for l in range(sizes[0])}
                else:
                    act = {("s", k, l, j, i): 1 for l in range(sizes[k - 1])}
                u, lam = ("u", k, j, i), ("lam", k)
                # a < M u + lam   ->   -a + M u + lam >= eps
                strict = {key: -v for key, v in act.items()}
                strict.update({u: M, lam: 1})
                bld.row(strict, Sense.GE, epsilon)
                # a >= M (u - 1) + lam   ->   a - M u - lam >= -M
                loose = dict(act)
                loose.update({u: -M, lam: -1})
                bld.row(loose, Sense.GE, -M)
            if k == 1:
                continue
            for j in range(sizes[k]):
                for l in range(sizes[k - 1]):
                    s, w, up = ("s", k, l, j, i), ("w", k, l, j), ("u", k - 1, l, i)
                    bld.row({up: 1, s: -1}, Sense.GE, 0)  # s <= u_prev
                    bld.row({up: 1, s: 1}, Sense.GE, 0)  # s >= -u_prev
                    bld.row({w: 1, s: -1, up: -1}, Sense.GE, -1)  # s <= w + 1 - u_prev
                    bld.row({s: 1, w: -1, up: -1}, Sense.GE, -1)  # s >= w - 1 + u_prev

    for i, y in enumerate(data.labels):
        outs = [("u", n, j, i) for j in range(sizes[n])]
        if arch.loss is Loss.ZERO_ONE:
            e = ("e", i)
            bld.cost[e] = 1
            # deviation of output j is u (label 0) or 1 - u (label 1)
            total, const = {e: -1}, 0
            for u, yj in zip(outs, y):
                if yj == 0:
                    bld.row({e: 1, u: -1}, Sense.GE, 0)
                    total[u] = total.get(u, 0) + 1
                else:
                    bld.row({e: 1, u: 1}, Sense.GE, 1)
                    total[u] = total.get(u, 0) - 1
                    const += 1
            bld.row(total, Sense.GE, -const)  # e <= sum of deviations
        else:
            for j, (u, yj) in enumerate(zip(outs, y)):
                plus, minus = ("dev+", i, j), ("dev-", i, j)
                bld.cost[plus] = bld.cost[minus] = 1
                bld.row({plus: 1, minus: -1, u: -1}, Sense.EQ, -yj)

    return EncodedMilp(bld.build(), bld.var_map, epsilon, arch, data)


def fix_weights(enc: EncodedMilp, w: WeightAssignment) -> EncodedMilp:
    """Clamp every ``w`` and ``lam`` column of the encoding to the given assignment."""
    w.check(enc.arch)
    cont = list(enc.mip.cont_bounds)
    for key, (kind, idx) in enc.var_map.items():
        if key[0] == "w":
            _, k, l, j = key
            v = w.weights[k - 1][l][j]
        elif key[0] == "lam":
            v = w.thresholds[key[1] - 1]
        else:
            continue
        cont[idx] = (v, v)
    return EncodedMilp(enc.mip.with_bounds(cont_bounds=cont), enc.var_map, enc.epsilon, enc.arch, enc.data)


@dataclass(frozen=True)
class DecodedBnn:
    weights: WeightAssignment
    predictions: tuple
    loss: Fraction


def decode(sol, enc: EncodedMilp) -> DecodedBnn:
    if not getattr(sol, "optimal", False):
        raise StatusNotOptimal(f"cannot decode a solution with status {sol.status.value}")
    sizes, n = enc.arch.layer_sizes, enc.arch.depth
    weights = [
        [[enc.value(sol, ("w", k, l, j)) for j in range(sizes[k])] for l in range(sizes[k - 1])]
        for k in range(1, n + 1)
    ]
    thresholds = [enc.value(sol, ("lam", k)) for k in range(1, n + 1)]
    preds = tuple(
        tuple(int(enc.value(sol, ("u", n, j, i))) for j in range(sizes[n])) for i in range(enc.data.m)
    )
    return DecodedBnn(WeightAssignment(weights, thresholds), preds, sol.objective)


def row_count(arch: BnnArchitecture, m: int) -> int:
    """Closed-form number of rows :func:`encode` emits."""
    sizes = arch.layer_sizes
    per_sample = 2 * sizes[1]
    for k in range(2, arch.depth + 1):
        per_sample += 2 * sizes[k] + 4 * sizes[k - 1] * sizes[k]
    if arch.loss is Loss.ZERO_ONE:
        per_sample += sizes[-1] + 1
    else:
        per_sample += sizes[-1]
    return m * per_sample


# -- file formats -------------------------------------------------------------


def load_dataset(text: str, source=None):
    """Parse a dataset file.

    Header lines ``layers: 2 2 1``, ``loss: zero_one`` and optionally
    ``radius: 2``, followed by one sample per line: ``x1 x2 ; y1``.
    ``#`` starts a comment.  Returns ``(architecture, dataset)``.
    """
    header, inputs, labels = {}, [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if ":" in line and ";" not in line:
                key, value = (p.strip() for p in line.split(":", 1))
                header[key.lower()] = value
                continue
            if ";" not in line:
                raise ValueError("sample rows need 'inputs ; labels'")
            left, right = line.split(";", 1)
            inputs.append([as_fraction(v) for v in left.split()])
            labels.append([int(v) for v in right.split()])
        except ValueError as exc:
            raise ParseError(str(exc), source, lineno) from exc
    try:
        arch = BnnArchitecture(tuple(int(v) for v in header["layers"].split()), header.get("loss", "zero_one"))
        radius = as_fraction(header["radius"]) if "radius" in header else None
        data = Dataset(inputs, labels, radius)
        data.check(arch)
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad dataset: {exc}", source) from exc
    return arch, data


def dump_dataset(arch: BnnArchitecture, data: Dataset) -> str:
    lines = [
        "layers: " + " ".join(str(s) for s in arch.layer_sizes),
        "loss: " + arch.loss.value,
        "radius: " + fmt(data.radius),
    ]
    for x, y in zip(data.inputs, data.labels):
        lines.append(" ".join(fmt(v) for v in x) + " ; " + " ".join(str(v) for v in y))
    return "\n".join(lines) + "\n"


def _key_text(key) -> str:
    return ":".join(str(p) for p in key)


def dump_encoded(enc: EncodedMilp) -> str:
    var_map = {_key_text(k): [kind, idx] for k, (kind, idx) in enc.var_map.items()}
    return model.dumps(enc.mip, extra={"epsilon": fmt(enc.epsilon), "var_map": var_map})


def weights_document(w: WeightAssignment) -> dict:
    return {
        "weights": [[[fmt(v) for v in row] for row in mat] for mat in w.weights],
        "thresholds": [fmt(v) for v in w.thresholds],
    }


def load_weights(text: str) -> WeightAssignment:
    doc = json.loads(text)
    return WeightAssignment(doc["weights"], doc["thresholds"])


def xor_dataset() -> tuple:
    """The four-sample XOR problem on a 2-2-1 network."""
    arch = BnnArchitecture((2, 2, 1), Loss.ZERO_ONE)
    data = Dataset([(0, 0), (0, 1), (1, 0), (1, 1)], [(0,), (1,), (1,), (0,)])
    return arch, data


def best_random_loss(arch, data, samples: int, seed: int = 0) -> int:
    rng = random.Random(seed)
    return min(empirical_loss(arch, random_weights(arch, rng), data) for _ in range(samples))


def weights_sequence(w: WeightAssignment) -> Sequence:
    return [v for mat in w.weights for row in mat for v in row] + list(w.thresholds)


def loss_rows(enc: EncodedMilp) -> list:
    """Indices of the rows that tie outputs to labels (the last block emitted)."""
    per_sample = enc.arch.layer_sizes[-1] + (1 if enc.arch.loss is Loss.ZERO_ONE else 0)
    total = enc.mip.num_rows
    return list(range(total - enc.data.m * per_sample, total))
