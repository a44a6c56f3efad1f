"""Solver-agnostic MILP formulation of the joint code/selection problem.

The nonlinear fixed-point of the problem is the 1/k factor inside the
expected node time.  Because k only takes the integer values 1..N, it is
linearized with one-hot binaries y_j (y_j = 1 exactly when k = j), which
turns the per-node time bound into a plain linear row.  The builder emits
that linear model; the checker audits any assignment against both the
linearized rows and the original nonlinear bound so the equivalence can
be validated numerically.

Two deliberate model-semantics notes, also recorded in export headers:

* the completion time T is bounded per designated node (T >= t_i, max
  semantics), never by a sum of node times;
* the expected node time is 2*tau/p + D/(k*eta) + D/(k*eta*alpha), the
  additive deterministic-plus-stochastic expectation used everywhere in
  this package.
"""

import hashlib
import math
from collections.abc import Mapping
from dataclasses import dataclass

from .model import Fleet, expected_comm_time, expected_node_time

MAX_NAME_LEN = 255  # free-format MPS readers commonly cap names here

_FEAS_TOL = 1e-9


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str  # "binary" | "integer" | "continuous"
    lb: float
    ub: float


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple[tuple[str, float], ...]  # (variable name, coefficient)
    sense: str  # "<=" | ">=" | "="
    rhs: float


@dataclass(frozen=True)
class MilpModel:
    """Immutable linear model: variables, rows, objective and big-M.

    ``comments`` carries the provenance header (fleet hash, task size,
    big-M, node-index map, semantics notes) reproduced verbatim by the
    exporters.
    """

    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    objective: tuple[tuple[str, float], ...]
    big_m: float
    comments: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")
        declared = set(names)
        for con in self.constraints:
            for var, _ in con.terms:
                if var not in declared:
                    raise ValueError(
                        f"constraint {con.name!r} references undeclared variable {var!r}"
                    )
        for var, _ in self.objective:
            if var not in declared:
                raise ValueError(f"objective references undeclared variable {var!r}")

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)


@dataclass(frozen=True)
class ConstraintViolation:
    name: str
    amount: float  # how far the assignment exceeds the bound


@dataclass(frozen=True)
class CheckVerdict:
    feasible: bool
    violations: tuple[ConstraintViolation, ...]
    max_rhs_discrepancy: float


@dataclass(frozen=True)
class Assignment:
    """Candidate values for every model variable, keyed by variable name."""

    values: Mapping[str, float]

    @classmethod
    def from_parts(
        cls,
        fleet: Fleet,
        *,
        n: float,
        k: float,
        c: Mapping[str, float],
        x: Mapping[str, float],
        y: Mapping[int, float],
        t: Mapping[str, float],
        T: float,
    ) -> "Assignment":
        """Build name-keyed values from per-node/per-index mappings.

        ``c``, ``x`` and ``t`` are keyed by node id; ``y`` by the code
        index j in 1..N.
        """
        values: dict[str, float] = {"n": float(n), "k": float(k), "T": float(T)}
        for idx, node in enumerate(fleet, start=1):
            values[f"c{idx}"] = float(c[node.id])
            values[f"x{idx}"] = float(x[node.id])
            values[f"t{idx}"] = float(t[node.id])
        for j in range(1, fleet.size + 1):
            values[f"y{j}"] = float(y.get(j, 0.0))
        return cls(values=values)


def big_m(fleet: Fleet, D: float) -> float:
    """Deactivation constant for the per-node time bounds.

    The largest right-hand side any node-time row can attain is the
    expected node time at k = 1, so this value makes the row vacuous for
    undesignated nodes while staying numerically tight.
    """
    return max(expected_node_time(node, D, 1) for node in fleet)


def fleet_fingerprint(fleet: Fleet) -> str:
    """Deterministic hash of the fleet's ids and parameters."""
    canonical = ";".join(
        f"{node.id},{node.tau!r},{node.p!r},{node.eta!r},{node.alpha!r}"
        for node in fleet
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _time_coeff(node, D: float, j: float) -> float:
    # expected computation time at code dimension j
    return D / (j * node.eta) + D / (j * node.eta * node.alpha)


def build_milp(fleet: Fleet, D: float) -> MilpModel:
    """Linearized model: minimize T over node selection and code choice.

    Variables (4N + 3): c_i / x_i select and designate nodes, y_j one-hot
    encodes k, t_i is node i's bounded expected time, plus T, n, k.
    """
    if not D > 0:
        raise ValueError(f"task size must be > 0, got {D}")
    N = fleet.size
    M = big_m(fleet, D)

    variables: list[Variable] = []
    variables += [Variable(f"c{i}", "binary", 0.0, 1.0) for i in range(1, N + 1)]
    variables += [Variable(f"x{i}", "binary", 0.0, 1.0) for i in range(1, N + 1)]
    variables += [Variable(f"y{j}", "binary", 0.0, 1.0) for j in range(1, N + 1)]
    variables += [
        Variable(f"t{i}", "continuous", 0.0, math.inf) for i in range(1, N + 1)
    ]
    variables.append(Variable("T", "continuous", 0.0, math.inf))
    variables.append(Variable("n", "integer", 1.0, float(N)))
    variables.append(Variable("k", "integer", 1.0, float(N)))

    cons: list[Constraint] = []
    cons.append(
        Constraint(
            "selected_count",
            tuple((f"c{i}", 1.0) for i in range(1, N + 1)) + (("n", -1.0),),
            "=",
            0.0,
        )
    )
    for i in range(1, N + 1):
        cons.append(
            Constraint(
                f"designate_within_selected_{i}",
                ((f"x{i}", 1.0), (f"c{i}", -1.0)),
                "<=",
                0.0,
            )
        )
    cons.append(
        Constraint(
            "designated_count",
            tuple((f"x{i}", 1.0) for i in range(1, N + 1)) + (("k", -1.0),),
            "=",
            0.0,
        )
    )
    for i in range(1, N + 1):
        cons.append(
            Constraint(
                f"completion_bound_{i}",
                (("T", 1.0), (f"t{i}", -1.0)),
                ">=",
                0.0,
            )
        )
    cons.append(Constraint("code_within_selected", (("k", 1.0), ("n", -1.0)), "<=", 0.0))
    cons.append(Constraint("selected_within_fleet", (("n", 1.0),), "<=", float(N)))
    cons.append(
        Constraint(
            "code_index_link",
            tuple((f"y{j}", float(j)) for j in range(1, N + 1)) + (("k", -1.0),),
            "=",
            0.0,
        )
    )
    cons.append(
        Constraint(
            "code_index_onehot",
            tuple((f"y{j}", 1.0) for j in range(1, N + 1)),
            "=",
            1.0,
        )
    )
    for i, node in enumerate(fleet, start=1):
        terms = [(f"t{i}", 1.0), (f"x{i}", -M)]
        terms += [
            (f"y{j}", -_time_coeff(node, D, j)) for j in range(1, N + 1)
        ]
        cons.append(
            Constraint(
                f"node_time_bound_{i}",
                tuple(terms),
                ">=",
                expected_comm_time(node) - M,
            )
        )

    node_map = " ".join(
        f"{i}={node.id}".replace("\n", " ") for i, node in enumerate(fleet, start=1)
    )
    comments = (
        "cdcplan MILP export",
        f"fleet_hash: sha256:{fleet_fingerprint(fleet)}",
        f"task_size_D: {D!r}",
        f"big_M: {M!r}",
        f"nodes: {node_map}",
        "expected node time: 2*tau/p + D/(k*eta) + D/(k*eta*alpha)",
        "completion bound: T >= t_i per designated node (max semantics, not a sum)",
    )
    return MilpModel(
        variables=tuple(variables),
        constraints=tuple(cons),
        objective=(("T", 1.0),),
        big_m=M,
        comments=comments,
    )


def _violation(con: Constraint, lhs: float) -> float:
    tol_scale = max(1.0, abs(con.rhs))
    if con.sense == "<=":
        amount = lhs - con.rhs
    elif con.sense == ">=":
        amount = con.rhs - lhs
    else:
        amount = abs(lhs - con.rhs)
    return amount if amount > _FEAS_TOL * tol_scale else 0.0


def check_assignment(
    model: MilpModel, fleet: Fleet, D: float, assignment: Assignment
) -> CheckVerdict:
    """Audit an assignment against the model and the nonlinear bound.

    Reports every violated row (with the violation amount), bound and
    integrality breaches, and the maximum absolute gap between the
    linearized per-node time bound's right-hand side (one-hot sum over
    y_j) and the nonlinear one evaluated at the assignment's k.
    """
    values = assignment.values
    for var in model.variables:
        if var.name not in values:
            raise ValueError(f"assignment is missing variable {var.name!r}")

    violations: list[ConstraintViolation] = []
    for con in model.constraints:
        lhs = sum(coef * values[name] for name, coef in con.terms)
        amount = _violation(con, lhs)
        if amount:
            violations.append(ConstraintViolation(con.name, amount))
    for var in model.variables:
        val = values[var.name]
        if val < var.lb - _FEAS_TOL or val > var.ub + _FEAS_TOL:
            over = max(var.lb - val, val - var.ub)
            violations.append(ConstraintViolation(f"bound_{var.name}", over))
        if var.kind in ("binary", "integer"):
            frac = abs(val - round(val))
            if frac > _FEAS_TOL:
                violations.append(ConstraintViolation(f"integrality_{var.name}", frac))

    k_val = values["k"]
    max_gap = 0.0
    for i, node in enumerate(fleet, start=1):
        comm = expected_comm_time(node)
        linear = comm + sum(
            values[f"y{j}"] * _time_coeff(node, D, j)
            for j in range(1, fleet.size + 1)
        )
        if k_val > 0:
            nonlinear = comm + _time_coeff(node, D, k_val)
            gap = abs(nonlinear - linear)
        else:
            gap = math.inf  # nonlinear form undefined at k <= 0
        max_gap = max(max_gap, gap)

    return CheckVerdict(
        feasible=not violations,
        violations=tuple(violations),
        max_rhs_discrepancy=max_gap,
    )


def _fmt(value: float) -> str:
    # shared numeric formatter: 12 significant digits, deterministic
    return format(value, ".12g")


def _check_names(model: MilpModel) -> None:
    for v in model.variables:
        if len(v.name) > MAX_NAME_LEN:
            raise ValueError(f"variable name too long for export: {v.name!r}")
    for con in model.constraints:
        if len(con.name) > MAX_NAME_LEN:
            raise ValueError(f"constraint name too long for export: {con.name!r}")


_MPS_SENSE = {"<=": "L", ">=": "G", "=": "E"}


def export_mps(model: MilpModel) -> str:
    """Render the model as free-format MPS text.

    Rows and columns follow model order; output is byte-for-byte
    deterministic for identical models.
    """
    _check_names(model)
    # column entries grouped per variable, in (objective, constraint) order
    entries: dict[str, list[tuple[str, float]]] = {v.name: [] for v in model.variables}
    for name, coef in model.objective:
        entries[name].append(("Obj", coef))
    for con in model.constraints:
        for name, coef in con.terms:
            entries[name].append((con.name, coef))

    lines: list[str] = []
    lines += [f"* {comment}" for comment in model.comments]
    lines.append("NAME cdcplan")
    lines.append("OBJSENSE")
    lines.append("    MIN")
    lines.append("ROWS")
    lines.append(" N  Obj")
    for con in model.constraints:
        lines.append(f" {_MPS_SENSE[con.sense]}  {con.name}")
    lines.append("COLUMNS")
    marker = 0
    in_int = False
    for var in model.variables:
        wants_int = var.kind in ("binary", "integer")
        if wants_int and not in_int:
            lines.append(f"    MARKER{marker} 'MARKER' 'INTORG'")
            marker += 1
            in_int = True
        elif not wants_int and in_int:
            lines.append(f"    MARKER{marker} 'MARKER' 'INTEND'")
            marker += 1
            in_int = False
        for row, coef in entries[var.name]:
            lines.append(f"    {var.name} {row} {_fmt(coef)}")
    if in_int:
        lines.append(f"    MARKER{marker} 'MARKER' 'INTEND'")
    lines.append("RHS")
    for con in model.constraints:
        if con.rhs != 0.0:
            lines.append(f"    RHS {con.name} {_fmt(con.rhs)}")
    lines.append("BOUNDS")
    for var in model.variables:
        if var.kind == "binary":
            lines.append(f" BV BND {var.name}")
        elif var.kind == "integer":
            lines.append(f" LI BND {var.name} {_fmt(var.lb)}")
            lines.append(f" UI BND {var.name} {_fmt(var.ub)}")
        else:
            lines.append(f" LO BND {var.name} {_fmt(var.lb)}")
            if math.isfinite(var.ub):
                lines.append(f" UP BND {var.name} {_fmt(var.ub)}")
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def _lp_terms(terms: tuple[tuple[str, float], ...]) -> str:
    parts: list[str] = []
    for name, coef in terms:
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {_fmt(abs(coef))} {name}")
    return " ".join(parts)


_LP_SENSE = {"<=": "<=", ">=": ">=", "=": "="}


def export_lp(model: MilpModel) -> str:
    """Render the model as CPLEX LP text (same determinism contract as MPS)."""
    _check_names(model)
    lines: list[str] = []
    lines += [f"\\ {comment}" for comment in model.comments]
    lines.append("Minimize")
    lines.append(f" Obj: {_lp_terms(model.objective)}")
    lines.append("Subject To")
    for con in model.constraints:
        lines.append(
            f" {con.name}: {_lp_terms(con.terms)} {_LP_SENSE[con.sense]} {_fmt(con.rhs)}"
        )
    lines.append("Bounds")
    for var in model.variables:
        if var.kind == "binary":
            continue  # declared in the Binaries section
        if math.isfinite(var.ub):
            lines.append(f" {_fmt(var.lb)} <= {var.name} <= {_fmt(var.ub)}")
        else:
            lines.append(f" {var.name} >= {_fmt(var.lb)}")
    binaries = [v.name for v in model.variables if v.kind == "binary"]
    if binaries:
        lines.append("Binaries")
        lines.append(" " + " ".join(binaries))
    generals = [v.name for v in model.variables if v.kind == "integer"]
    if generals:
        lines.append("Generals")
        lines.append(" " + " ".join(generals))
    lines.append("End")
    return "\n".join(lines) + "\n"
