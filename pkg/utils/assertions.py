"""
Safe assertion expressions over a run report.

Grammar (a restricted Python expression):

    expr    := expr ("and" | "or") expr | "not" expr | compare
    compare := arith (("<" | "<=" | ">" | ">=" | "==" | "!=") arith)+
    arith   := number | path | arith ("+" | "-" | "*" | "/" | "**") arith | "-" arith
             | ("abs" | "min" | "max" | "len") "(" arith ("," arith)* ")"
    path    := ("results" | "warnings" | "provenance") ("." name | "[" int "]" | "[" string "]")*

Example:
    results.spectrum.subleading_modulus <= 0.7651977 + 1e-8
"""

import ast
import operator
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

from pipeline.core.exceptions import ConfigurationError

ROOTS = ("results", "warnings", "provenance")
FUNCTIONS = {"abs": abs, "min": min, "max": max, "len": len}

_COMPARE = {
    ast.Lt: operator.lt,
    ast.LtE: operator.le,
    ast.Gt: operator.gt,
    ast.GtE: operator.ge,
    ast.Eq: operator.eq,
    ast.NotEq: operator.ne,
}
_BINARY = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}


def _check(node: ast.AST, source: str) -> None:
    """Reject every node outside the grammar."""
    if isinstance(node, ast.Expression):
        return _check(node.body, source)
    if isinstance(node, ast.BoolOp):
        for value in node.values:
            _check(value, source)
        return
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.Not, ast.USub, ast.UAdd)):
        return _check(node.operand, source)
    if isinstance(node, ast.Compare):
        if not all(type(op) in _COMPARE for op in node.ops):
            raise ConfigurationError(f"Unsupported comparison in assertion: {source}", key="assert")
        for part in (node.left, *node.comparators):
            _check(part, source)
        return
    if isinstance(node, ast.BinOp) and type(node.op) in _BINARY:
        _check(node.left, source)
        _check(node.right, source)
        return
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS or node.keywords:
            raise ConfigurationError(f"Unsupported call in assertion: {source}", key="assert")
        for arg in node.args:
            _check(arg, source)
        return
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, str, bool, type(None))):
        return
    if isinstance(node, ast.Name):
        if node.id not in ROOTS:
            raise ConfigurationError(f"Unknown name '{node.id}' in assertion (roots: {', '.join(ROOTS)})", key="assert")
        return
    if isinstance(node, ast.Attribute):
        return _check(node.value, source)
    if isinstance(node, ast.Subscript):
        if not isinstance(node.slice, ast.Constant):
            raise ConfigurationError(f"Only constant indices are allowed in assertion: {source}", key="assert")
        return _check(node.value, source)
    raise ConfigurationError(f"Unsupported expression '{type(node).__name__}' in assertion: {source}", key="assert")


@dataclass(frozen=True)
class Assertion:
    """A parsed assertion; evaluate() against a report payload."""

    source: str
    tree: ast.Expression

    def _eval(self, node: ast.AST, env: Dict[str, Any]) -> Any:
        if isinstance(node, ast.BoolOp):
            values = (self._eval(v, env) for v in node.values)
            return all(values) if isinstance(node.op, ast.And) else any(values)
        if isinstance(node, ast.UnaryOp):
            value = self._eval(node.operand, env)
            if isinstance(node.op, ast.Not):
                return not value
            return -value if isinstance(node.op, ast.USub) else +value
        if isinstance(node, ast.Compare):
            left = self._eval(node.left, env)
            for op, comparator in zip(node.ops, node.comparators):
                right = self._eval(comparator, env)
                if not _COMPARE[type(op)](left, right):
                    return False
                left = right
            return True
        if isinstance(node, ast.BinOp):
            return _BINARY[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.Call):
            return FUNCTIONS[node.func.id](*(self._eval(a, env) for a in node.args))
        if isinstance(node, ast.Constant):
            return node.value
        if isinstance(node, ast.Name):
            return env[node.id]
        if isinstance(node, ast.Attribute):
            return self._lookup(self._eval(node.value, env), node.attr)
        if isinstance(node, ast.Subscript):
            return self._lookup(self._eval(node.value, env), node.slice.value)
        raise ConfigurationError(f"Cannot evaluate assertion: {self.source}", key="assert")

    def _lookup(self, container: Any, key: Any) -> Any:
        try:
            return container[key]
        except (KeyError, IndexError, TypeError) as e:
            raise ConfigurationError(f"Path '{key}' not found while evaluating: {self.source}", key="assert") from e

    def _first_compare(self) -> Optional[ast.Compare]:
        for node in ast.walk(self.tree):
            if isinstance(node, ast.Compare):
                return node
        return None

    def evaluate(self, report: Dict[str, Any]) -> Tuple[bool, Optional[float], Optional[float]]:
        """
        Returns:
            (passed, measured, threshold) with measured/threshold taken from
            the two sides of the first comparison when they are numeric
        """
        env = {root: report.get(root) for root in ROOTS}
        passed = bool(self._eval(self.tree.body, env))
        measured = threshold = None
        compare = self._first_compare()
        if compare is not None:
            left = self._eval(compare.left, env)
            right = self._eval(compare.comparators[0], env)
            measured = float(left) if isinstance(left, (int, float)) and not isinstance(left, bool) else None
            threshold = float(right) if isinstance(right, (int, float)) and not isinstance(right, bool) else None
        return passed, measured, threshold


def parse_assertion(source: str) -> Assertion:
    """
    Raises:
        ConfigurationError: syntax error or a construct outside the grammar
    """
    try:
        tree = ast.parse(source.strip(), mode="eval")
    except SyntaxError as e:
        raise ConfigurationError(f"Unparseable assertion '{source}': {e.msg}", key="assert") from e
    _check(tree, source)
    return Assertion(source=source, tree=tree)
