"""Experiment configuration: schema, parsing, and admissibility pre-flight.

A configuration is a JSON document with three blocks:

    problem: p, nonlinearity family and parameters, kernel family and
             parameters, first-order potential coefficient A, geometry
    run:     mesh parameters, continuation budget, evaluation window,
             tolerances, and the proof parameters eta, lambda, eps
    output:  directory and formats

Custom nonlinearities and kernels may be given as arithmetic expression
strings in one variable (u for f, t for k) over +, -, *, /, ^ and the
functions exp, ln, pow; the expressions are parsed against a whitelist, never
executed as code.
"""

from __future__ import annotations

import ast
import json
import math
import operator
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .geometry import Geometry, ball, interval
from .karamata import (Nonlinearity, PotentialModel, WeightKernel,
                       constant_kernel, check_f2, exponential_kernel,
                       kernel_limits, perturbed_power, power_kernel,
                       pure_power)
from .solver import MeshParams

__all__ = [
    "InadmissibleConfig",
    "ExperimentConfig",
    "parse_expression",
    "CustomNonlinearity",
    "load_config",
    "canonical_config",
]


class InadmissibleConfig(ValueError):
    """Raised by the pre-flight check; the message names every violated
    admissibility condition."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("inadmissible configuration: " + "; ".join(self.violations))


# -- safe arithmetic expressions ---------------------------------------------

_BIN_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY_OPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCTIONS = {"exp": math.exp, "ln": math.log, "pow": math.pow}


def parse_expression(expr: str, variable: str) -> Callable[[float], float]:
    """Compile a one-variable arithmetic expression into a float callable.

    Grammar: the named variable, numeric literals, + - * / ^, unary minus,
    and calls to exp, ln, pow.  Anything else is rejected.
    """
    if not isinstance(expr, str) or not expr.strip():
        raise ValueError("expression must be a non-empty string")
    try:
        tree = ast.parse(expr.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"expression does not parse: {exc.msg}") from exc

    def check(node):
        if isinstance(node, ast.Expression):
            check(node.body)
        elif isinstance(node, ast.BinOp) and type(node.op) in _BIN_OPS:
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY_OPS:
            check(node.operand)
        elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            pass
        elif isinstance(node, ast.Name):
            if node.id != variable:
                raise ValueError(
                    f"unknown identifier {node.id!r}; only {variable!r} is allowed")
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
                raise ValueError("only exp, ln, pow calls are allowed")
            if node.keywords:
                raise ValueError("keyword arguments are not allowed")
            arity = 2 if node.func.id == "pow" else 1
            if len(node.args) != arity:
                raise ValueError(
                    f"{node.func.id} takes {arity} argument(s), got {len(node.args)}")
            for arg in node.args:
                check(arg)
        else:
            raise ValueError(f"disallowed syntax: {ast.dump(node)[:60]}")

    check(tree)

    def evaluate(node, x):
        if isinstance(node, ast.Expression):
            return evaluate(node.body, x)
        if isinstance(node, ast.BinOp):
            return _BIN_OPS[type(node.op)](evaluate(node.left, x),
                                           evaluate(node.right, x))
        if isinstance(node, ast.UnaryOp):
            return _UNARY_OPS[type(node.op)](evaluate(node.operand, x))
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return x
        if isinstance(node, ast.Call):
            fn = _FUNCTIONS[node.func.id]
            return fn(*[evaluate(a, x) for a in node.args])
        raise AssertionError("unreachable after check()")

    return lambda x: float(evaluate(tree, float(x)))


@dataclass(frozen=True)
class CustomNonlinearity:
    """Expression-defined nonlinearity with a declared regular-variation
    index.  Quacks like Nonlinearity where the library needs it: callable,
    deriv, sigma, B."""

    fn: Callable[[float], float]
    sigma: float
    B: float = 1.0
    expr: str = ""

    def _eval_scalar(self, u: float) -> float:
        if not np.isfinite(u) or u < 0:
            raise ValueError(f"nonlinearity argument must be finite and >= 0, got {u}")
        if u == 0.0:
            return 0.0
        return self.fn(u)

    def __call__(self, u):
        if np.isscalar(u):
            return self._eval_scalar(float(u))
        arr = np.asarray(u, dtype=float)
        return np.array([self._eval_scalar(float(v)) for v in arr]).reshape(arr.shape)

    def deriv(self, u):
        if not np.isscalar(u):
            arr = np.asarray(u, dtype=float)
            return np.array([self.deriv(float(v)) for v in arr]).reshape(arr.shape)
        u = float(u)
        if u <= 0.0:
            return 0.0
        h = 1e-7 * max(u, 1.0)
        lo = max(u - h, u * 0.5)
        return (self._eval_scalar(u + h) - self._eval_scalar(lo)) / (u + h - lo)


_REQUIRED_BLOCKS = ("problem",)


def _build_nonlinearity(block: dict):
    family = block.get("family", "pure_power")
    if family == "pure_power":
        return pure_power(A0=block.get("A0", 1.0), sigma=block["sigma"],
                          B=block.get("B", 1.0))
    if family == "perturbed_power":
        return perturbed_power(A0=block.get("A0", 1.0), sigma=block["sigma"],
                               c=block.get("c", 1.0), alpha=block["alpha"],
                               B=block.get("B", 1.0))
    if family == "custom":
        fn = parse_expression(block["expr"], "u")
        return CustomNonlinearity(fn=fn, sigma=block["sigma"],
                                  B=block.get("B", 1.0), expr=block["expr"])
    raise ValueError(f"unknown nonlinearity family {family!r}")


def _build_kernel(block: dict) -> WeightKernel:
    family = block.get("family", "constant")
    nu = block.get("nu", 1.0)
    if family == "constant":
        return constant_kernel(nu=nu)
    if family == "power":
        return power_kernel(gamma=block["gamma"], nu=nu)
    if family == "exponential":
        return exponential_kernel(beta=block["beta"], nu=nu)
    if family == "custom":
        fn = parse_expression(block["expr"], "t")

        def k_deriv(t, fn=fn):
            h = 1e-7 * max(abs(t), 1e-3)
            return (fn(t + h) - fn(max(t - h, t * 0.5))) / (t + h - max(t - h, t * 0.5))

        return WeightKernel(k=fn, k_deriv=k_deriv, nu=nu,
                            ell1=block.get("ell1"), L1=block.get("L1"),
                            name="custom:" + block["expr"])
    raise ValueError(f"unknown kernel family {family!r}")


def _build_geometry(block: dict) -> Geometry:
    kind = block.get("kind", "ball")
    if kind == "interval":
        return interval(block.get("extent", 1.0))
    if kind == "ball":
        return ball(block.get("extent", 1.0), block.get("dimension", 3))
    raise ValueError(f"unknown geometry kind {kind!r}")


@dataclass
class ExperimentConfig:
    """Parsed and validated experiment description."""

    p: float
    nonlinearity: object
    kernel: WeightKernel
    A: float
    geometry: Geometry
    mesh: MeshParams = field(default_factory=MeshParams)
    max_levels: int = 80
    window: Optional[tuple] = None
    tol: float = 1e-5
    slope_tol: float = 0.2
    eta: Optional[float] = None
    lam: float = 0.5
    eps: float = 0.05
    out_dir: str = "out"
    formats: tuple = ("json", "csv")
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def potential(self) -> PotentialModel:
        return PotentialModel(kernel=self.kernel, A=self.A, p=self.p)

    def preflight(self) -> list:
        """Admissibility checks; returns the (possibly empty) list of
        violated conditions, each named."""
        violations = []
        if not self.p > 1:
            violations.append(f"exponent p must exceed 1 (got {self.p})")
        sigma = self.nonlinearity.sigma
        if not sigma > self.p - 2.0:
            violations.append(
                "blow-up index condition sigma > p - 2 fails "
                f"(sigma={sigma}, p={self.p}): the Keller-Osserman integral diverges")
        if isinstance(self.nonlinearity, Nonlinearity):
            f2 = check_f2(self.nonlinearity, self.p)
            if f2.status == "fail":
                violations.append(
                    "perturbation decay condition fails: alpha="
                    f"{self.nonlinearity.perturbation.alpha} outside the "
                    f"admissible window ({f2.window[0]:.6g}, {f2.window[1]:.6g})")
        ell1 = self.kernel.ell1
        if ell1 is None:
            ell1 = kernel_limits(self.kernel).ell1
        if not (0.0 <= ell1 <= 1.0 + 1e-9):
            violations.append(
                f"kernel first-order limit ell1={ell1} outside [0, 1]")
        if self.geometry.kind == "ball" and self.geometry.dimension < 2:
            violations.append("ball geometry needs dimension >= 2")
        if violations:
            return violations
        if sigma > self.p - 2.0:
            from .transform import Primitive, keller_osserman
            ko = keller_osserman(Primitive(self.nonlinearity, self.p))
            if ko.classification != "CONVERGES":
                violations.append(
                    "Keller-Osserman integral does not converge "
                    f"(classification {ko.classification})")
        return violations

    def require_admissible(self) -> None:
        violations = self.preflight()
        if violations:
            raise InadmissibleConfig(violations)


def load_config(source) -> ExperimentConfig:
    """Build an ExperimentConfig from a dict, a JSON string, or a path to a
    JSON file."""
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        if text.lstrip().startswith("{"):
            doc = json.loads(text)
        else:
            with open(text) as fh:
                doc = json.load(fh)
    for block in _REQUIRED_BLOCKS:
        if block not in doc:
            raise ValueError(f"configuration is missing the {block!r} block")
    prob = doc["problem"]
    run = doc.get("run", {})
    out = doc.get("output", {})
    mesh_block = run.get("mesh", {})
    window = run.get("window")
    return ExperimentConfig(
        p=float(prob["p"]),
        nonlinearity=_build_nonlinearity(prob["nonlinearity"]),
        kernel=_build_kernel(prob.get("kernel", {"family": "constant"})),
        A=float(prob.get("A", 0.0)),
        geometry=_build_geometry(prob.get("geometry", {})),
        mesh=MeshParams(finest_rel=mesh_block.get("finest_rel", 1e-6),
                        grading=mesh_block.get("grading", 1.06)),
        max_levels=int(run.get("max_levels", 80)),
        window=tuple(window) if window is not None else None,
        tol=float(run.get("tol", 1e-5)),
        slope_tol=float(run.get("slope_tol", 0.2)),
        eta=run.get("eta"),
        lam=float(run.get("lambda", 0.5)),
        eps=float(run.get("eps", 0.05)),
        out_dir=out.get("directory", "out"),
        formats=tuple(out.get("formats", ("json", "csv"))),
        raw=doc,
    )


def canonical_config() -> ExperimentConfig:
    """The reference configuration: unit ball in three dimensions, p = 2,
    cubic absorption, constant potential."""
    return load_config({
        "problem": {
            "p": 2.0,
            "nonlinearity": {"family": "pure_power", "sigma": 2.0, "B": 1e-6},
            "kernel": {"family": "constant"},
            "A": 0.0,
            "geometry": {"kind": "ball", "extent": 1.0, "dimension": 3},
        },
        "run": {},
        "output": {},
    })
