"""Discrete-time signal temporal logic over named real-valued channels.

Formulas are built from threshold predicates, Boolean connectives and
interval-bounded temporal operators (until, eventually, globally) on a
unit-spaced integer time axis.  Two independent evaluators are provided:
`satisfies` gives the Boolean semantics by direct recursion, `robustness`
gives the quantitative space-robustness margin, positive only when the
Boolean semantics hold (zero is indeterminate because strictness of the
comparison is invisible to the margin).
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

COMPARISONS = (">", ">=", "<", "<=")


class ParseError(ValueError):
    """Formula text does not conform to the grammar; carries a character offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class IntervalError(ValueError):
    """Temporal interval with t1 > t2 or a negative bound."""


class SignalTooShortError(ValueError):
    """Signal does not cover the segment required by the formula horizon."""


class UnknownChannelError(ValueError):
    """Formula references a channel the signal does not have."""


@dataclass(frozen=True)
class Interval:
    """Closed integer window [t1, t2], offsets relative to the evaluation time."""

    t1: int
    t2: int

    def __post_init__(self):
        if self.t1 < 0 or self.t2 < self.t1:
            raise IntervalError(
                f"invalid interval [{self.t1},{self.t2}]: need 0 <= t1 <= t2"
            )


@dataclass(frozen=True)
class Predicate:
    channel: str
    comparison: str
    threshold: float

    def __post_init__(self):
        if self.comparison not in COMPARISONS:
            raise ValueError(
                f"unknown comparison operator {self.comparison!r}: "
                f"expected one of {', '.join(COMPARISONS)}"
            )


@dataclass(frozen=True)
class Not:
    child: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Until:
    interval: Interval
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Eventually:
    interval: Interval
    child: "Formula"


@dataclass(frozen=True)
class Globally:
    interval: Interval
    child: "Formula"


Formula = Union[Predicate, Not, And, Or, Until, Eventually, Globally]


class Signal:
    """Finite multi-channel discrete-time signal; all channels share one length."""

    def __init__(self, channels: Mapping[str, Sequence[float]]):
        if not channels:
            raise ValueError("signal needs at least one channel")
        data = {}
        length = None
        for name, values in channels.items():
            arr = np.asarray(values, dtype=float)
            if arr.ndim != 1:
                raise ValueError(f"channel {name!r} must be one-dimensional")
            if length is None:
                length = arr.shape[0]
            elif arr.shape[0] != length:
                raise ValueError(
                    f"channel {name!r} has length {arr.shape[0]}, expected {length}"
                )
            data[name] = arr
        if length is None or length < 1:
            raise ValueError("signal channels must contain at least one sample")
        self._data = data
        self.length = length

    @property
    def names(self) -> tuple:
        return tuple(self._data)

    def channel(self, name: str) -> np.ndarray:
        try:
            return self._data[name]
        except KeyError:
            raise UnknownChannelError(
                f"signal has no channel {name!r} (available: {', '.join(self._data)})"
            ) from None

    def __len__(self) -> int:
        return self.length

    def __repr__(self) -> str:
        return f"Signal(channels={list(self._data)}, length={self.length})"


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<number>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
    | (?P<ident>[A-Za-z_]\w*)
    | (?P<cmp>==|!=|<=|>=|=|<|>)
    | (?P<not>!)
    | (?P<and>&)
    | (?P<or>\|)
    | (?P<lparen>\()
    | (?P<rparen>\))
    | (?P<lbracket>\[)
    | (?P<rbracket>\])
    | (?P<comma>,)
    """,
    re.VERBOSE,
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def _peek(self, offset=0):
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def _next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def _expect(self, kind: str, what: str):
        tok = self._next()
        if tok[0] != kind:
            raise ParseError(f"expected {what}, found {tok[1]!r}", tok[2])
        return tok

    def parse(self) -> Formula:
        f = self._formula()
        tok = self._peek()
        if tok[0] != "eof":
            raise ParseError(f"unexpected trailing input {tok[1]!r}", tok[2])
        return f

    def _formula(self) -> Formula:
        node = self._term()
        while self._peek()[0] == "or":
            self._next()
            node = Or(node, self._term())
        return node

    def _term(self) -> Formula:
        node = self._unary()
        while self._peek()[0] == "and":
            self._next()
            node = And(node, self._unary())
        return node

    def _unary(self, until_rhs: bool = False) -> Formula:
        kind, value, _ = self._peek()
        if kind == "not":
            self._next()
            return Not(self._unary())
        if kind == "ident" and value in ("F", "G") and self._peek(1)[0] == "lbracket":
            self._next()
            iv = self._interval()
            child = self._unary()
            return Eventually(iv, child) if value == "F" else Globally(iv, child)
        return self._atom(until_rhs)

    def _atom(self, until_rhs: bool) -> Formula:
        kind, _, _ = self._peek()
        if kind == "lparen":
            self._next()
            f = self._formula()
            self._expect("rparen", "')'")
            return f
        node = self._predicate()
        if until_rhs:
            # the right-hand side of an until never extends the chain itself;
            # the enclosing loop below folds further U operators left-associatively
            return node
        while (
            self._peek()[0] == "ident"
            and self._peek()[1] == "U"
            and self._peek(1)[0] == "lbracket"
        ):
            self._next()
            iv = self._interval()
            rhs = self._unary(until_rhs=True)
            node = Until(iv, node, rhs)
        return node

    def _predicate(self) -> Predicate:
        tok = self._peek()
        if tok[0] != "ident":
            raise ParseError(f"expected a predicate or '(', found {tok[1]!r}", tok[2])
        channel = self._next()[1]
        kind, op, pos = self._next()
        if kind != "cmp":
            raise ParseError(f"expected a comparison after {channel!r}, found {op!r}", pos)
        if op not in COMPARISONS:
            raise ParseError(
                f"unknown comparison operator {op!r}: expected one of "
                f"{', '.join(COMPARISONS)}",
                pos,
            )
        kind, num, pos = self._next()
        if kind != "number":
            raise ParseError(f"expected a number after {op!r}, found {num!r}", pos)
        return Predicate(channel, op, float(num))

    def _interval(self) -> Interval:
        self._expect("lbracket", "'['")
        t1 = self._int_bound()
        self._expect("comma", "','")
        t2 = self._int_bound()
        self._expect("rbracket", "']'")
        return Interval(t1, t2)

    def _int_bound(self) -> int:
        kind, num, pos = self._next()
        if kind != "number":
            raise ParseError(f"expected an integer interval bound, found {num!r}", pos)
        value = float(num)
        if value != int(value):
            raise ParseError(f"interval bound {num!r} is not an integer", pos)
        return int(value)


def parse_formula(text: str) -> Formula:
    """Parse formula text into a syntax tree.

    Grammar: `|` below `&` below prefix `!`/`F[a,b]`/`G[a,b]`; a predicate is
    `IDENT CMP NUMBER`; `p U[a,b] x` attaches until at the atom level and
    chains left-associatively.
    """
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# formatting

def _fmt_number(x: float) -> str:
    return repr(float(x))


def _fmt_prefix_operand(f: Formula) -> str:
    if isinstance(f, (Predicate, Not, Eventually, Globally)):
        return format_formula(f)
    return f"({format_formula(f)})"


def format_formula(f: Formula) -> str:
    """Canonical text for a tree; parse_formula(format_formula(f)) == f.

    Until nodes are printable only when the leftmost operand of the chain is
    a bare predicate, which is all the concrete grammar admits; other trees
    raise ValueError.
    """
    if isinstance(f, Predicate):
        return f"{f.channel}{f.comparison}{_fmt_number(f.threshold)}"
    if isinstance(f, Not):
        return f"!({format_formula(f.child)})"
    if isinstance(f, And):
        left = format_formula(f.left)
        if isinstance(f.left, Or):
            left = f"({left})"
        right = format_formula(f.right)
        if isinstance(f.right, (Or, And)):
            right = f"({right})"
        return f"{left} & {right}"
    if isinstance(f, Or):
        left = format_formula(f.left)
        right = format_formula(f.right)
        if isinstance(f.right, Or):
            right = f"({right})"
        return f"{left} | {right}"
    if isinstance(f, Eventually):
        return f"F[{f.interval.t1},{f.interval.t2}] {_fmt_prefix_operand(f.child)}"
    if isinstance(f, Globally):
        return f"G[{f.interval.t1},{f.interval.t2}] {_fmt_prefix_operand(f.child)}"
    if isinstance(f, Until):
        if isinstance(f.left, Predicate):
            left = format_formula(f.left)
        elif isinstance(f.left, Until):
            left = format_formula(f.left)
        else:
            raise ValueError(
                "until with a non-predicate left operand has no concrete syntax; "
                "flip the comparison instead of negating the predicate"
            )
        if isinstance(f.right, (Predicate, Not)):
            right = format_formula(f.right)
        else:
            right = f"({format_formula(f.right)})"
        return f"{left} U[{f.interval.t1},{f.interval.t2}] {right}"
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# semantics

def horizon(f: Formula) -> int:
    """Number of future samples beyond t that evaluation at t depends on."""
    if isinstance(f, Predicate):
        return 0
    if isinstance(f, Not):
        return horizon(f.child)
    if isinstance(f, (And, Or)):
        return max(horizon(f.left), horizon(f.right))
    if isinstance(f, Until):
        return f.interval.t2 + max(horizon(f.left), horizon(f.right))
    if isinstance(f, (Eventually, Globally)):
        return f.interval.t2 + horizon(f.child)
    raise TypeError(f"not a formula: {f!r}")


def _check_window(signal: Signal, f: Formula, t: int) -> None:
    if t < 0:
        raise ValueError(f"evaluation time must be non-negative, got {t}")
    need = t + horizon(f)
    if need > signal.length - 1:
        raise SignalTooShortError(
            f"evaluation at t={t} needs samples [{t}, {need}] but the signal "
            f"has only indices [0, {signal.length - 1}]"
        )


def _rho_row(f: Formula, sig: Signal) -> np.ndarray:
    # row[t] = robustness of f at time t, for every t with a full window;
    # rows shrink by the node's horizon, so child rows always cover parents
    if isinstance(f, Predicate):
        margin = sig.channel(f.channel) - f.threshold
        return margin if f.comparison in (">", ">=") else -margin
    if isinstance(f, Not):
        return -_rho_row(f.child, sig)
    if isinstance(f, (And, Or)):
        a = _rho_row(f.left, sig)
        b = _rho_row(f.right, sig)
        n = min(a.shape[0], b.shape[0])
        op = np.minimum if isinstance(f, And) else np.maximum
        return op(a[:n], b[:n])
    if isinstance(f, (Eventually, Globally)):
        child = _rho_row(f.child, sig)
        a, b = f.interval.t1, f.interval.t2
        n = child.shape[0] - b
        out = np.empty(n)
        agg = np.max if isinstance(f, Eventually) else np.min
        for t in range(n):
            out[t] = agg(child[t + a : t + b + 1])
        return out
    if isinstance(f, Until):
        left = _rho_row(f.left, sig)
        right = _rho_row(f.right, sig)
        a, b = f.interval.t1, f.interval.t2
        n = min(left.shape[0], right.shape[0]) - b
        out = np.empty(n)
        for t in range(n):
            best = -np.inf
            prefix = np.inf
            for tp in range(t, t + b + 1):
                prefix = min(prefix, left[tp])
                if tp >= t + a:
                    best = max(best, min(right[tp], prefix))
            out[t] = best
        return out
    raise TypeError(f"not a formula: {f!r}")


def robustness(signal: Signal, f: Formula, t: int = 0) -> float:
    """Quantitative space-robustness margin of the signal against f at time t.

    Predicates score the signed margin to the threshold; negation flips the
    sign, conjunction takes the minimum, and until maximizes over the window
    [t+t1, t+t2] the minimum of the right margin at t' and the left margins
    over [t, t'].  Strict and non-strict comparisons score identically.
    """
    _check_window(signal, f, t)
    return float(_rho_row(f, signal)[t])


def _sat(f: Formula, sig: Signal, t: int) -> bool:
    if isinstance(f, Predicate):
        v = sig.channel(f.channel)[t]
        c = f.threshold
        if f.comparison == ">":
            return v > c
        if f.comparison == ">=":
            return v >= c
        if f.comparison == "<":
            return v < c
        return v <= c
    if isinstance(f, Not):
        return not _sat(f.child, sig, t)
    if isinstance(f, And):
        return _sat(f.left, sig, t) and _sat(f.right, sig, t)
    if isinstance(f, Or):
        return _sat(f.left, sig, t) or _sat(f.right, sig, t)
    if isinstance(f, Eventually):
        return any(
            _sat(f.child, sig, tp)
            for tp in range(t + f.interval.t1, t + f.interval.t2 + 1)
        )
    if isinstance(f, Globally):
        return all(
            _sat(f.child, sig, tp)
            for tp in range(t + f.interval.t1, t + f.interval.t2 + 1)
        )
    if isinstance(f, Until):
        for tp in range(t + f.interval.t1, t + f.interval.t2 + 1):
            if _sat(f.right, sig, tp) and all(
                _sat(f.left, sig, ts) for ts in range(t, tp + 1)
            ):
                return True
        return False
    raise TypeError(f"not a formula: {f!r}")


def satisfies(signal: Signal, f: Formula, t: int = 0) -> bool:
    """Boolean semantics at time t, evaluated independently of robustness."""
    _check_window(signal, f, t)
    return _sat(f, signal, t)


def map_predicates(f: Formula, fn: Callable[[Predicate], Predicate]) -> Formula:
    """Rebuild the tree with every predicate leaf passed through fn."""
    if isinstance(f, Predicate):
        return fn(f)
    if isinstance(f, Not):
        return Not(map_predicates(f.child, fn))
    if isinstance(f, And):
        return And(map_predicates(f.left, fn), map_predicates(f.right, fn))
    if isinstance(f, Or):
        return Or(map_predicates(f.left, fn), map_predicates(f.right, fn))
    if isinstance(f, Until):
        return Until(f.interval, map_predicates(f.left, fn), map_predicates(f.right, fn))
    if isinstance(f, Eventually):
        return Eventually(f.interval, map_predicates(f.child, fn))
    if isinstance(f, Globally):
        return Globally(f.interval, map_predicates(f.child, fn))
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# signal CSV interface: header row of channel names, one row per timestep

def read_signal_csv(path) -> Signal:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty signal file") from None
        columns: dict = {name.strip(): [] for name in header}
        names = list(columns)
        for row in reader:
            if not row:
                continue
            if len(row) != len(names):
                raise ValueError(f"{path}: row has {len(row)} fields, expected {len(names)}")
            for name, field in zip(names, row):
                columns[name].append(float(field))
    return Signal(columns)


def write_signal_csv(signal: Signal, path) -> None:
    names = list(signal.names)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for t in range(signal.length):
            writer.writerow([repr(float(signal.channel(n)[t])) for n in names])
