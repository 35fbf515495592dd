"""
表达式小语言与一元实函数表示

语法: 数字字面量、变量 x、+ - * / ^、一元负号、exp/log/sqrt/abs/sinh/cosh（一元）、
min/max（至少两个参数），以及字面量 inf。

^ 结合最紧且右结合，其次 * /，最后 + -；一元负号低于 ^，所以 -x^2 = -(x^2)。

ScalarFunction 有四种具体形式：
- ExpressionFunction: 解析得到的表达式树
- PiecewiseFunction: 半开区间 [a,b) 上的分段表达式，a == b 的分段表示单点 {a} 且优先
- BuiltinFunction: 命名的参数族（constant, linear, power, call-payoff, indicator-barrier）
- TabulatedFunction: 由数值过程给出的函数（尺度变换后的系数等），只能在进程内构造

求值统一走 evaluate()，输入可以是标量或 numpy 数组。
"""
from __future__ import annotations

import math
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from typing import Any, Callable, NamedTuple

import numpy as np


# ---------------------------------------------------------------------------
# 错误类型
# ---------------------------------------------------------------------------

class ExpressionError(ValueError):
    """表达式解析错误的基类，position 为出错字符在原文中的偏移"""

    def __init__(self, message: str, text: str = "", position: int | None = None):
        self.text = text
        self.position = position
        if position is not None:
            message = f"{message}（位置 {position}）"
        super().__init__(message)


class ExpressionSyntaxError(ExpressionError):
    """语法错误"""


class UnknownIdentifierError(ExpressionError):
    """未知的标识符"""

    def __init__(self, name: str, text: str = "", position: int | None = None):
        self.name = name
        super().__init__(f"未知标识符 '{name}'", text, position)


class ArityError(ExpressionError):
    """函数参数个数不匹配"""

    def __init__(self, name: str, expected: str, got: int, text: str = "", position: int | None = None):
        self.name = name
        self.expected = expected
        self.got = got
        super().__init__(f"函数 {name} 需要 {expected} 个参数，实际 {got} 个", text, position)


class EvaluationError(ValueError):
    """求值失败的基类"""


class DomainError(EvaluationError):
    """自变量不在函数的定义区间内"""

    def __init__(self, x: float, domain: tuple[float, float] | None):
        self.x = x
        self.domain = domain
        super().__init__(f"x={x!r} 不在定义区间 {domain} 内")


class NonFiniteValueError(EvaluationError):
    """求值结果为 NaN，或出现了未声明允许的 ±inf"""

    def __init__(self, x: float, value: float, label: str = ""):
        self.x = x
        self.value = value
        super().__init__(f"函数 {label or '<f>'} 在 x={x!r} 处取值 {value!r}")


# ---------------------------------------------------------------------------
# 词法分析
# ---------------------------------------------------------------------------

class Token(NamedTuple):
    kind: str  # number | name | op | lparen | rparen | comma | end
    text: str
    position: int


_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^])"
    r"|(?P<lparen>\()"
    r"|(?P<rparen>\))"
    r"|(?P<comma>,)"
    r")"
)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        match = _TOKEN_RE.match(text, pos)
        if match is None or match.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExpressionSyntaxError(f"无法识别的字符 '{text[bad]}'", text, bad)
        kind = match.lastgroup
        tokens.append(Token(kind, match.group(kind), match.start(kind)))
        pos = match.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


# ---------------------------------------------------------------------------
# 语法树
# ---------------------------------------------------------------------------

_UNARY_FUNCS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "sinh": np.sinh,
    "cosh": np.cosh,
}
_VARIADIC_FUNCS: dict[str, Callable[..., np.ndarray]] = {
    "min": np.minimum,
    "max": np.maximum,
}
_CONSTANTS = {"inf": math.inf}


class Node(ABC):
    @abstractmethod
    def eval(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def render(self) -> str: ...


@dataclass(frozen=True)
class Number(Node):
    value: float

    def eval(self, x):
        return np.full(x.shape, self.value, dtype=float)

    def render(self):
        if self.value < 0:
            return f"(-{(-self.value)!r})"
        return repr(float(self.value))


@dataclass(frozen=True)
class Variable(Node):
    def eval(self, x):
        return x

    def render(self):
        return "x"


@dataclass(frozen=True)
class Negate(Node):
    operand: Node

    def eval(self, x):
        return -self.operand.eval(x)

    def render(self):
        return f"(-{self.operand.render()})"


@dataclass(frozen=True)
class BinaryOp(Node):
    op: str
    left: Node
    right: Node

    def eval(self, x):
        a = self.left.eval(x)
        b = self.right.eval(x)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            return a / b
        return np.power(a, b)

    def render(self):
        return f"({self.left.render()} {self.op} {self.right.render()})"


@dataclass(frozen=True)
class Call(Node):
    name: str
    args: tuple[Node, ...]

    def eval(self, x):
        values = [arg.eval(x) for arg in self.args]
        if self.name in _UNARY_FUNCS:
            return _UNARY_FUNCS[self.name](values[0])
        func = _VARIADIC_FUNCS[self.name]
        result = values[0]
        for v in values[1:]:
            result = func(result, v)
        return result

    def render(self):
        return f"{self.name}({', '.join(arg.render() for arg in self.args)})"


class _Parser:
    """递归下降解析器

    expr  := term (('+'|'-') term)*
    term  := unary (('*'|'/') unary)*
    unary := ('-'|'+') unary | power
    power := atom ('^' unary)?
    atom  := number | 'x' | const | name '(' expr (',' expr)* ')' | '(' expr ')'
    """

    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, kind: str, what: str) -> Token:
        if self.current.kind != kind:
            found = self.current.text or "输入结束"
            raise ExpressionSyntaxError(f"期望{what}，却遇到 '{found}'", self.text, self.current.position)
        return self.advance()

    def parse(self) -> Node:
        if self.current.kind == "end":
            raise ExpressionSyntaxError("空表达式", self.text, 0)
        node = self.expr()
        if self.current.kind != "end":
            raise ExpressionSyntaxError(f"多余的输入 '{self.current.text}'", self.text, self.current.position)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.current.kind == "op" and self.current.text in "+-":
            op = self.advance().text
            node = BinaryOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.current.kind == "op" and self.current.text in "*/":
            op = self.advance().text
            node = BinaryOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.current.kind == "op" and self.current.text == "-":
            self.advance()
            return Negate(self.unary())
        if self.current.kind == "op" and self.current.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.current.kind == "op" and self.current.text == "^":
            self.advance()
            return BinaryOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        token = self.current
        if token.kind == "number":
            self.advance()
            return Number(float(token.text))
        if token.kind == "lparen":
            self.advance()
            node = self.expr()
            self.expect("rparen", "')'")
            return node
        if token.kind == "name":
            self.advance()
            name = token.text
            if name == "x":
                return Variable()
            if name in _CONSTANTS:
                return Number(_CONSTANTS[name])
            if name not in _UNARY_FUNCS and name not in _VARIADIC_FUNCS:
                raise UnknownIdentifierError(name, self.text, token.position)
            self.expect("lparen", f"函数 {name} 后的 '('")
            args = [self.expr()]
            while self.current.kind == "comma":
                self.advance()
                args.append(self.expr())
            self.expect("rparen", "')'")
            if name in _UNARY_FUNCS and len(args) != 1:
                raise ArityError(name, "1", len(args), self.text, token.position)
            if name in _VARIADIC_FUNCS and len(args) < 2:
                raise ArityError(name, "至少 2", len(args), self.text, token.position)
            return Call(name, tuple(args))
        found = token.text or "输入结束"
        raise ExpressionSyntaxError(f"意外的 '{found}'", self.text, token.position)


# ---------------------------------------------------------------------------
# ScalarFunction 及其具体形式
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarFunction(ABC):
    """一元实函数

    domain 为闭包区间 (lo, hi)，None 表示不检查；allow_infinite 只对速率函数打开，
    此时 +inf 是合法取值。
    """

    domain: tuple[float, float] | None = field(default=None, kw_only=True)
    allow_infinite: bool = field(default=False, kw_only=True)

    @abstractmethod
    def raw(self, x: np.ndarray) -> np.ndarray:
        """不做任何检查的向量化求值"""

    @abstractmethod
    def to_json(self) -> Any:
        """问题文件中的 JSON 表示"""

    @property
    def label(self) -> str:
        rendered = self.to_json()
        return rendered if isinstance(rendered, str) else str(rendered)

    def bind(self, domain: tuple[float, float] | None, allow_infinite: bool = False) -> "ScalarFunction":
        return replace(self, domain=domain, allow_infinite=allow_infinite)

    def __call__(self, x):
        return evaluate(self, x)


@dataclass(frozen=True)
class ExpressionFunction(ScalarFunction):
    tree: Node
    source: str = ""

    def raw(self, x):
        return self.tree.eval(x)

    def render(self) -> str:
        return self.tree.render()

    def to_json(self):
        return self.source or self.render()


@dataclass(frozen=True)
class Piece:
    left: float
    right: float
    function: ScalarFunction

    @property
    def is_point(self) -> bool:
        return self.left == self.right


@dataclass(frozen=True)
class PiecewiseFunction(ScalarFunction):
    pieces: tuple[Piece, ...]

    def __post_init__(self):
        spans = sorted((p for p in self.pieces if not p.is_point), key=lambda p: p.left)
        if not spans:
            raise ValueError("分段函数至少需要一个非退化区间")
        for p in self.pieces:
            if p.left > p.right:
                raise ValueError(f"分段区间左端点大于右端点: [{p.left}, {p.right})")
        for a, b in zip(spans, spans[1:]):
            if b.left < a.right:
                raise ValueError(f"分段区间重叠: [{a.left}, {a.right}) 与 [{b.left}, {b.right})")

    def covers(self, left: float, right: float) -> bool:
        """半开分段首尾相接并覆盖 [left, right]"""
        spans = sorted((p for p in self.pieces if not p.is_point), key=lambda p: p.left)
        if spans[0].left > left or spans[-1].right < right:
            return False
        return all(a.right == b.left for a, b in zip(spans, spans[1:]))

    def raw(self, x):
        out = np.full(x.shape, np.nan)
        covered = np.zeros(x.shape, dtype=bool)
        spans = sorted((p for p in self.pieces if not p.is_point), key=lambda p: p.left)
        last = spans[-1]
        for p in spans:
            mask = (x >= p.left) & (x < p.right)
            if p is last:
                mask |= x == p.right
            if mask.any():
                out[mask] = np.asarray(p.function.raw(x[mask]), dtype=float)
            covered |= mask
        for p in self.pieces:
            if p.is_point:
                mask = x == p.left
                if mask.any():
                    out[mask] = np.asarray(p.function.raw(x[mask]), dtype=float)
                covered |= mask
        if not covered.all():
            bad = x[~covered].flat[0]
            raise DomainError(float(bad), (spans[0].left, last.right))
        return out

    def to_json(self):
        return {
            "piecewise": [
                {"from": _real_to_json(p.left), "to": _real_to_json(p.right), "expr": p.function.to_json()}
                for p in self.pieces
            ]
        }


_BUILTIN_PARAMS: dict[str, tuple[str, ...]] = {
    "constant": ("c",),
    "linear": ("slope", "intercept"),
    "power": ("coef", "exponent"),
    "call-payoff": ("K",),
    "indicator-barrier": ("J", "low", "high"),
}


@dataclass(frozen=True)
class BuiltinFunction(ScalarFunction):
    name: str
    params: tuple[tuple[str, float], ...]

    def __post_init__(self):
        if self.name not in _BUILTIN_PARAMS:
            raise UnknownIdentifierError(self.name)
        expected = _BUILTIN_PARAMS[self.name]
        got = tuple(k for k, _ in self.params)
        if got != expected:
            raise ArityError(self.name, ", ".join(expected), len(got))

    def param(self, key: str) -> float:
        return dict(self.params)[key]

    @property
    def is_barrier(self) -> bool:
        return self.name == "indicator-barrier"

    def raw(self, x):
        p = dict(self.params)
        if self.name == "constant":
            return np.full(x.shape, p["c"], dtype=float)
        if self.name == "linear":
            return p["slope"] * x + p["intercept"]
        if self.name == "power":
            return p["coef"] * np.power(x, p["exponent"])
        if self.name == "call-payoff":
            return np.maximum(x - p["K"], 0.0)
        return np.where(x <= p["J"], p["low"], p["high"]).astype(float)

    def to_json(self):
        out: dict[str, Any] = {"builtin": self.name}
        out.update({k: _real_to_json(v) for k, v in self.params})
        return out


@dataclass(frozen=True)
class TabulatedFunction(ScalarFunction):
    """由数值过程定义的函数（例如尺度变换后的 η、ĝ、θ̂）

    support 为制表覆盖的范围，超出时 fn 自行抛出 DomainError。
    """

    fn: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    description: str = "tabulated"
    support: tuple[float, float] | None = None

    def raw(self, x):
        return self.fn(x)

    def to_json(self):
        return {"tabulated": self.description}


# ---------------------------------------------------------------------------
# 公共操作
# ---------------------------------------------------------------------------

def parse_expression(text: str) -> ExpressionFunction:
    """把表达式文本解析为 ScalarFunction"""
    if not isinstance(text, str):
        raise ExpressionSyntaxError(f"表达式必须是字符串，实际为 {type(text).__name__}")
    return ExpressionFunction(_Parser(text).parse(), source=text)


def render(f: ExpressionFunction) -> str:
    """全括号形式的表达式文本，重新解析后逐点取值完全一致"""
    return f.render()


def evaluate(f: ScalarFunction, x):
    """在 x（标量或数组）处求值

    x 超出 f.domain 时抛出 DomainError；出现 NaN 或未允许的 ±inf 时抛出 NonFiniteValueError。
    标量输入返回 float。
    """
    arr = np.asarray(x, dtype=float)
    if f.domain is not None:
        lo, hi = f.domain
        outside = (arr < lo) | (arr > hi) | np.isnan(arr)
        if outside.any():
            raise DomainError(float(arr[outside].flat[0]) if arr.ndim else float(arr), f.domain)
    flat = np.atleast_1d(arr)
    with np.errstate(all="ignore"):
        values = np.broadcast_to(np.asarray(f.raw(flat), dtype=float), flat.shape)
    bad = np.isnan(values) | (np.isinf(values) & ~(f.allow_infinite & (values > 0)))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise NonFiniteValueError(float(flat[i]), float(values[i]), f.label)
    if arr.ndim == 0:
        return float(values[0])
    return np.array(values.reshape(arr.shape))


def constant(c: float) -> BuiltinFunction:
    return BuiltinFunction("constant", (("c", float(c)),))


def is_zero_function(f: ScalarFunction) -> bool:
    """f 是否在语法上恒为 0（用来识别自然尺度，无需求积）"""
    if isinstance(f, BuiltinFunction):
        if f.name == "constant":
            return f.param("c") == 0.0
        if f.name == "linear":
            return f.param("slope") == 0.0 and f.param("intercept") == 0.0
        if f.name == "power":
            return f.param("coef") == 0.0
        return False
    if isinstance(f, ExpressionFunction):
        return isinstance(f.tree, Number) and f.tree.value == 0.0
    return False


def parse_real(value: Any) -> float:
    """解析扩展实数：数字或 "inf" / "-inf" / "+inf" 字符串"""
    if isinstance(value, bool):
        raise ValueError(f"无效的实数: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "+inf", "infinity"):
            return math.inf
        if text in ("-inf", "-infinity"):
            return -math.inf
        return float(text)
    raise ValueError(f"无效的实数: {value!r}")


def _real_to_json(value: float) -> Any:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def function_from_json(obj: Any) -> ScalarFunction:
    """从问题文件中的 JSON 值构造 ScalarFunction

    支持的形式：表达式字符串、数字（常数）、{"builtin": name, ...参数}、
    {"piecewise": [{"from": a, "to": b, "expr": ...}, ...]}。
    """
    if isinstance(obj, str):
        return parse_expression(obj)
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return constant(float(obj))
    if isinstance(obj, dict) and "builtin" in obj:
        name = obj["builtin"]
        if name not in _BUILTIN_PARAMS:
            raise UnknownIdentifierError(str(name))
        keys = _BUILTIN_PARAMS[name]
        extra = set(obj) - {"builtin", *keys}
        missing = [k for k in keys if k not in obj]
        if missing or extra:
            raise ArityError(name, ", ".join(keys), len(set(obj) - {"builtin"}))
        return BuiltinFunction(name, tuple((k, parse_real(obj[k])) for k in keys))
    if isinstance(obj, dict) and "piecewise" in obj:
        pieces = []
        for item in obj["piecewise"]:
            pieces.append(Piece(parse_real(item["from"]), parse_real(item["to"]), function_from_json(item["expr"])))
        return PiecewiseFunction(tuple(pieces))
    raise ValueError(f"无法识别的函数定义: {obj!r}")
