"""Run configuration for the verification harness.

Normalizes command-line values into a validated ``RunConfig``. Interface
abscissae and coefficients may be written as small arithmetic expressions
such as ``pi/6+0.06``.
"""

import ast
import math
import operator
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, Field, computed_field, field_validator, model_validator

from .coefficients import (
    PiecewiseConstantCoefficient,
    ProblemSpec,
    cosine_solution,
    manufactured_problem,
)
from .config import settings
from .errors import ConfigError

CONSTANTS = {"pi": math.pi, "e": math.e}

BINARY_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}

UNARY_OPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def _evaluate(node: ast.AST) -> float:
    if isinstance(node, ast.Expression):
        return _evaluate(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id in CONSTANTS:
        return CONSTANTS[node.id]
    if isinstance(node, ast.BinOp) and type(node.op) in BINARY_OPS:
        return BINARY_OPS[type(node.op)](_evaluate(node.left), _evaluate(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in UNARY_OPS:
        return UNARY_OPS[type(node.op)](_evaluate(node.operand))
    raise ConfigError(f"Unsupported expression element: {ast.dump(node)}")


def parse_real(text: str) -> float:
    """Evaluate a real literal or arithmetic expression over pi and e."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as e:
        raise ConfigError(f"Cannot parse {text!r} as a number") from e
    try:
        value = _evaluate(tree)
    except (ZeroDivisionError, OverflowError) as e:
        raise ConfigError(f"Cannot evaluate {text!r}: {e}") from e
    if not math.isfinite(value):
        raise ConfigError(f"{text!r} is not finite")
    return value


def parse_real_list(text: str) -> list[float]:
    """Comma-separated reals; an empty string is an empty list."""
    return [parse_real(item) for item in text.split(",") if item.strip()]


def parse_int_list(text: str) -> list[int]:
    values = []
    for item in text.split(","):
        if not item.strip():
            continue
        try:
            values.append(int(item))
        except ValueError as e:
            raise ConfigError(f"Mesh size {item!r} is not an integer") from e
    return values


class RunConfig(BaseModel):
    """One convergence sweep and its outputs."""

    degree: int = Field(ge=1)
    beta: list[float] = Field(min_length=1)
    alpha: list[float] = Field(default_factory=list)
    gamma: float = 0.0
    c: float = 0.0
    meshes: list[int] = Field(min_length=1)
    domain: tuple[float, float] = (0.0, 1.0)
    out: Optional[Path] = None
    dump_pointwise: Optional[Path] = None
    dump_basis: Optional[Path] = None
    log_level: Optional[str] = None

    @field_validator("degree")
    @classmethod
    def degree_supported(cls, v: int) -> int:
        if v > settings.max_degree:
            raise ValueError(f"degree must be <= {settings.max_degree}")
        return v

    @field_validator("beta")
    @classmethod
    def beta_positive(cls, v: list[float]) -> list[float]:
        if any(not (math.isfinite(b) and b > 0) for b in v):
            raise ValueError("beta values must be positive and finite")
        return v

    @field_validator("meshes")
    @classmethod
    def meshes_valid(cls, v: list[int]) -> list[int]:
        if any(n < 2 for n in v):
            raise ValueError("mesh sizes must be integers >= 2")
        return v

    @model_validator(mode="after")
    def interfaces_match(self) -> "RunConfig":
        if len(self.alpha) != len(self.beta) - 1:
            raise ValueError(
                f"{len(self.beta)} beta values need {len(self.beta) - 1} interfaces, "
                f"got {len(self.alpha)}"
            )
        a, b = self.domain
        if not a < b:
            raise ValueError(f"Degenerate domain {self.domain}")
        if any(not a < x < b for x in self.alpha):
            raise ValueError(f"Interfaces must lie inside {self.domain}")
        if any(x1 <= x0 for x0, x1 in zip(self.alpha, self.alpha[1:])):
            raise ValueError("Interfaces must be strictly increasing")
        return self

    @computed_field
    @property
    def kind(self) -> str:
        count = len(self.alpha)
        if count == 1:
            return "one-interface"
        if count == 2:
            return "two-interface"
        return f"{count}-interface"

    def coefficient(self) -> PiecewiseConstantCoefficient:
        return PiecewiseConstantCoefficient(
            breakpoints=tuple(self.alpha), values=tuple(self.beta), parent_interval=self.domain
        )

    def problem(self) -> ProblemSpec:
        """Cosine manufactured problem for this configuration."""
        exact = cosine_solution(self.coefficient())
        return manufactured_problem(exact, gamma=self.gamma, c=self.c)
