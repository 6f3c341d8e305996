"""
Field expressions over named chart coordinates.

Grammar:
    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := '-' unary | power
    power := base ('^' unary)?
    base  := number | ident '(' expr ')' | ident | '(' expr ')'

Unary minus binds below '^', so "-rho^2" is -(rho^2).

Trees are plain tuples: ("num", value), ("var", name), ("neg", node),
("call", name, node) and (op, left, right) for op in "+-*/^".
"""
import re

from ricci_engine.errors import (ArityError, ExpressionError, JetDivisionError,
                                 JetDomainError, UnknownIdentifierError)
from ricci_engine.models.jet import DIVISOR_TOLERANCE, FUNCTION_NAMES, Jet2, jet_func

_TOKEN = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)

ZERO = ("num", 0.0)
ONE = ("num", 1.0)


def _byte_offset(src, pos):
    return len(src[:pos].encode("utf-8"))


def tokenize(src):
    tokens = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        match = _TOKEN.match(src, pos)
        if match is None or match.end() == pos:
            bad = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ExpressionError(f"unexpected character {src[bad]!r}", _byte_offset(src, bad))
        kind = match.lastgroup
        text = match.group(kind)
        tokens.append((kind, text, _byte_offset(src, match.start(kind))))
        pos = match.end()
    tokens.append(("end", "", _byte_offset(src, len(src))))
    return tokens


class _Parser:
    def __init__(self, src, names):
        self.src = src
        self.names = names
        self.tokens = tokenize(src)
        self.index = 0

    def peek(self):
        return self.tokens[self.index]

    def advance(self):
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, text):
        kind, value, offset = self.advance()
        if value != text:
            found = value or "end of input"
            raise ExpressionError(f"expected {text!r}, found {found!r}", offset)

    def parse(self):
        tree = self.expr()
        kind, value, offset = self.peek()
        if kind != "end":
            raise ExpressionError(f"unexpected token {value!r}", offset)
        return tree

    def expr(self):
        tree = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.advance()[1]
            tree = (op, tree, self.term())
        return tree

    def term(self):
        tree = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.advance()[1]
            tree = (op, tree, self.unary())
        return tree

    def unary(self):
        if self.peek()[1] == "-":
            self.advance()
            return ("neg", self.unary())
        return self.power()

    def power(self):
        base = self.base()
        if self.peek()[1] == "^":
            self.advance()
            return ("^", base, self.unary())
        return base

    def base(self):
        kind, value, offset = self.advance()
        if kind == "number":
            return ("num", float(value))
        if kind == "ident":
            if self.peek()[1] == "(":
                return self.call(value, offset)
            if value in FUNCTION_NAMES:
                raise ArityError(f"function {value!r} takes exactly one argument", offset)
            if value not in self.names:
                raise UnknownIdentifierError(f"unknown identifier {value!r}", offset)
            return ("var", value)
        if value == "(":
            tree = self.expr()
            self.expect(")")
            return tree
        found = value or "end of input"
        raise ExpressionError(f"unexpected token {found!r}", offset)

    def call(self, name, offset):
        if name not in FUNCTION_NAMES:
            raise UnknownIdentifierError(f"unknown function {name!r}", offset)
        self.expect("(")
        args = []
        if self.peek()[1] != ")":
            args.append(self.expr())
            while self.peek()[1] == ",":
                self.advance()
                args.append(self.expr())
        self.expect(")")
        if len(args) != 1:
            raise ArityError(f"function {name!r} takes exactly one argument, got {len(args)}", offset)
        return ("call", name, args[0])


def _float_pow(a, b):
    if a == 0.0 and b < 0:
        raise JetDivisionError("zero raised to a negative power")
    if a < 0.0 and b != round(b):
        raise JetDomainError(f"non-integer power {b!r} of negative value {a!r}")
    return a ** b


def _float_div(a, b):
    if abs(b) <= DIVISOR_TOLERANCE:
        raise JetDivisionError(f"division by near-zero value {b!r}")
    return a / b


def _evaluate(tree, env):
    head = tree[0]
    if head == "num":
        return tree[1]
    if head == "var":
        return env[tree[1]]
    if head == "neg":
        return -_evaluate(tree[1], env)
    if head == "call":
        return jet_func(tree[1], _evaluate(tree[2], env))
    a = _evaluate(tree[1], env)
    b = _evaluate(tree[2], env)
    if head == "+":
        return a + b
    if head == "-":
        return a - b
    if head == "*":
        return a * b
    jets = isinstance(a, Jet2) or isinstance(b, Jet2)
    if head == "/":
        return a / b if jets else _float_div(a, b)
    if jets:
        if not isinstance(a, Jet2):
            return Jet2.constant(a, b.dim) ** b
        return a ** b
    return _float_pow(a, b)


def variables_of(tree):
    head = tree[0]
    if head == "num":
        return frozenset()
    if head == "var":
        return frozenset([tree[1]])
    if head in ("neg", "call"):
        return variables_of(tree[-1])
    return variables_of(tree[1]) | variables_of(tree[2])


def substitute(tree, mapping):
    """Replace variables by subtrees (used to compose maps and build derived fields)."""
    head = tree[0]
    if head == "num":
        return tree
    if head == "var":
        return mapping.get(tree[1], tree)
    if head == "neg":
        return ("neg", substitute(tree[1], mapping))
    if head == "call":
        return ("call", tree[1], substitute(tree[2], mapping))
    return (head, substitute(tree[1], mapping), substitute(tree[2], mapping))


##################### TREE BUILDERS #####################

def constant(value):
    return ("num", float(value))


def variable(name):
    return ("var", name)


def is_zero(tree):
    return tree[0] == "num" and tree[1] == 0.0


def add(a, b):
    if is_zero(a):
        return b
    if is_zero(b):
        return a
    return ("+", a, b)


def multiply(a, b):
    if is_zero(a) or is_zero(b):
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    return ("*", a, b)


def call(name, arg):
    return ("call", name, arg)


##################### UNPARSING #####################

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _precedence(tree):
    head = tree[0]
    if head == "num":
        return 3 if tree[1] < 0 else 5
    return _PRECEDENCE.get(head, 5)


def _format_number(value):
    return format(value, ".17g")


def unparse(tree):
    head = tree[0]
    if head == "num":
        return _format_number(tree[1])
    if head == "var":
        return tree[1]
    if head == "call":
        return f"{tree[1]}({unparse(tree[2])})"
    if head == "neg":
        inner = unparse(tree[1])
        return f"-({inner})" if _precedence(tree[1]) < 3 else f"-{inner}"
    p = _PRECEDENCE[head]
    left, right = unparse(tree[1]), unparse(tree[2])
    if head == "^":
        if _precedence(tree[1]) <= p:
            left = f"({left})"
        if _precedence(tree[2]) < 3:
            right = f"({right})"
        return f"{left}^{right}"
    if _precedence(tree[1]) < p:
        left = f"({left})"
    right_needs = _precedence(tree[2]) <= p if head in ("-", "/") else _precedence(tree[2]) < p
    if right_needs:
        right = f"({right})"
    return f"{left} {head} {right}"


class Expression:
    """A parsed, evaluable expression over a fixed set of coordinate names."""

    def __init__(self, tree, names, source=None):
        self.tree = tree
        self.names = tuple(names)
        self.source = source if source is not None else unparse(tree)

    @property
    def variables(self):
        return variables_of(self.tree)

    def is_zero(self):
        return is_zero(self.tree)

    def evaluate(self, env):
        """
        Input: mapping from coordinate name to a float or a Jet2
        Output: float or Jet2, matching the inputs
        """
        return _evaluate(self.tree, env)

    def __call__(self, *values):
        return self.evaluate(dict(zip(self.names, values)))

    def __eq__(self, other):
        return isinstance(other, Expression) and self.tree == other.tree

    def __hash__(self):
        return hash(self.tree)

    def __str__(self):
        return self.source

    def __repr__(self):
        return f"Expression({self.source!r})"


def parse_expression(src, chart):
    """
    Input: expression source text and a Chart (or a plain sequence of coordinate names)
    Output: Expression whose free variables are a subset of the chart's coordinate names
    """
    names = tuple(getattr(chart, "coord_names", chart))
    if isinstance(src, (int, float)):
        src = _format_number(float(src))
    tree = _Parser(src, frozenset(names)).parse()
    return Expression(tree, names, source=src)
