"""Scenario files: a line-oriented block format.

Grammar (one item per line, ``#`` starts a comment)::

    run NAME {
      space { dim = 2  ... }          # one key = value per line
      problem {
        kind = explicit
        operator T1 { kind = diagonal ... }
        f { ... }
        G { ... }
      }
      gains { ... }
      schedule alpha { ... }
      schedule beta { ... }
      algorithm { ... }
      output { ... }
      certify { ... }                 # optional
    }

Values are Python literals (numbers, lists, quoted strings, True/False/None)
or bare words such as ``synchronal``; ``true``, ``false`` and ``none`` are
also accepted.  All errors are collected with line numbers before reporting.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field

import numpy as np

from .. import space as sp
from ..iterate import MODES, PRESETS, AlgorithmConfig, Stopping
from ..operators import Affine, Claims, FixedSet, ProblemInstance, ScaledIdentity, canonical_problem, generate_problem
from ..params import Gains, Schedule, derive_tau, mu_upper_bound, validate_gains

REQUIRED = object()
_BARE = re.compile(r"^[A-Za-z_][\w\-./]*$")
_WORDS = {"true": True, "false": False, "none": None}


class ScenarioError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


# -- value checkers: return the normalized value or raise ValueError ---------


def _int(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ValueError(f"expected an integer, got {v!r}")
    return int(v)


def _float(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"expected a number, got {v!r}")
    return float(v)


def _opt(check):
    return lambda v: None if v is None else check(v)


def _or_auto(check):
    return lambda v: "auto" if v == "auto" else check(v)


def _bool(v):
    if not isinstance(v, bool):
        raise ValueError(f"expected true or false, got {v!r}")
    return v


def _str(v):
    if not isinstance(v, str):
        raise ValueError(f"expected a word or string, got {v!r}")
    return v


def _choice(*options):
    def check(v):
        if v not in options:
            raise ValueError(f"expected one of {', '.join(map(str, options))}, got {v!r}")
        return v
    return check


def _vector(v):
    if not isinstance(v, (list, tuple)) or not all(isinstance(a, (int, float)) and not isinstance(a, bool) for a in v):
        raise ValueError(f"expected a list of numbers, got {v!r}")
    return [float(a) for a in v]


def _pair(v):
    v = _vector(v)
    if len(v) != 2:
        raise ValueError(f"expected two numbers, got {v!r}")
    return v


def _matrix(v):
    if not isinstance(v, (list, tuple)) or not v:
        raise ValueError(f"expected a list of rows, got {v!r}")
    rows = [_vector(r) for r in v]
    if len({len(r) for r in rows}) != 1:
        raise ValueError("matrix rows differ in length")
    return rows


SCHEMA = {
    "space": {"dim": (_int, REQUIRED), "p": (_float, 2.0), "q": (_float, 2.0), "d_q": (_opt(_float), None)},
    "problem": {
        "kind": (_choice("canonical", "generated", "explicit"), REQUIRED),
        "seed": (_int, 0),
        "N": (_int, 2),
        "fixed_dim": (_opt(_int), None),
        "eig_range": (_pair, [-0.9, 0.9]),
        "strictness_cap": (_float, 0.5),
        "contraction_range": (_pair, [0.05, 0.5]),
        "g_spectrum": (_pair, [0.5, 2.0]),
        "offset_scale": (_float, 1.0),
        "weights": (_opt(_vector), None),
        "fixed_anchor": (_opt(_vector), None),
        "fixed_basis": (_opt(_matrix), None),
    },
    "operator": {
        "kind": (_choice("affine", "diagonal", "scaled-identity"), REQUIRED),
        "matrix": (_opt(_matrix), None),
        "diag": (_opt(_vector), None),
        "offset": (_opt(_vector), None),
        "c": (_opt(_float), None),
        "strict": (_opt(_float), None),
        "contraction": (_opt(_float), None),
        "lipschitz": (_opt(_float), None),
        "accretive": (_opt(_float), None),
        "nonexpansive": (_bool, False),
    },
    "gains": {
        "mu": (_or_auto(_float), "auto"),
        "gamma": (_or_auto(_float), "auto"),
        "mu_ratio": (_float, 0.5),
        "gamma_ratio": (_float, 0.5),
    },
    "schedule": {
        "family": (_choice("power", "constant", "formula"), REQUIRED),
        "a": (_opt(_float), None),
        "r": (_opt(_float), None),
        "b": (_opt(_float), None),
        "expr": (_opt(_str), None),
    },
    "algorithm": {
        "mode": (_choice(*MODES), "synchronal"),
        "preset": (_opt(_choice(*PRESETS)), None),
        "x0": (_opt(_vector), None),
        "max_iter": (_int, 100_000),
        "step_tol": (_float, 1e-10),
        "residual_tol": (_float, 1e-6),
        "backend": (_choice("auto", "python", "numba"), "auto"),
        "override": (_bool, False),
    },
    "output": {
        "dir": (_opt(_str), None),
        "cadence": (_int, 1),
        "trace": (_str, "trace.csv"),
        "summary": (_str, "summary.json"),
        "plotdata": (_str, "plotdata.csv"),
    },
    "certify": {
        "seed": (_int, 0),
        "count": (_int, 1000),
        "radius": (_float, 1.0),
        "distribution": (_choice("uniform-ball", "gaussian"), "uniform-ball"),
        "t_grid": (_opt(_vector), None),
    },
}
RUN_BLOCKS = ("space", "problem", "gains", "schedule alpha", "schedule beta", "algorithm", "output", "certify")
REQUIRED_BLOCKS = ("space", "problem", "gains", "schedule alpha", "schedule beta", "algorithm")
OPERATOR_ROLES = ("f", "G")


@dataclass
class RunSpec:
    """One run: validated block dictionaries plus derived values (not serialized)."""

    name: str
    blocks: dict
    operators: list = field(default_factory=list)  # explicit problems: [(name, dict)]
    roles: dict = field(default_factory=dict)  # explicit problems: f, G -> dict
    derived: dict = field(default_factory=dict, compare=False)


@dataclass
class ScenarioFile:
    runs: list
    path: str | None = field(default=None, compare=False)

    def __getitem__(self, name):
        for r in self.runs:
            if r.name == name:
                return r
        raise KeyError(name)


# -- tokenizer --------------------------------------------------------------


@dataclass
class _Node:
    head: list
    line: int
    entries: list = field(default_factory=list)  # (key, raw, line)
    children: list = field(default_factory=list)


def _strip_comment(line):
    out, quote = [], None
    for ch in line:
        if quote:
            if ch == quote:
                quote = None
        elif ch in "'\"":
            quote = ch
        elif ch == "#":
            break
        out.append(ch)
    return "".join(out).strip()


def _value(raw):
    raw = raw.strip()
    if raw.lower() in _WORDS:
        return _WORDS[raw.lower()]
    try:
        return ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        if _BARE.match(raw):
            return raw
        raise ValueError(f"cannot read value {raw!r}")


def _tokenize(text, errors):
    root = _Node(["<root>"], 0)
    stack = [root]
    for no, line in enumerate(text.splitlines(), 1):
        body = _strip_comment(line)
        if not body:
            continue
        if body == "}":
            if len(stack) == 1:
                errors.append(f"line {no}: unmatched '}}'")
            else:
                stack.pop()
            continue
        if body.endswith("{"):
            head = body[:-1].split()
            if not head:
                errors.append(f"line {no}: block without a name")
                head = ["<anonymous>"]
            node = _Node(head, no)
            stack[-1].children.append(node)
            stack.append(node)
            continue
        if "=" in body:
            key, _, raw = body.partition("=")
            key = key.strip()
            if not re.match(r"^[A-Za-z_]\w*$", key):
                errors.append(f"line {no}: bad key {key!r}")
                continue
            if len(stack) == 1:
                errors.append(f"line {no}: entry {key!r} outside any block")
                continue
            stack[-1].entries.append((key, raw, no))
            continue
        errors.append(f"line {no}: cannot parse {body!r}")
    for node in stack[1:]:
        errors.append(f"line {node.line}: block {' '.join(node.head)!r} is never closed")
    return root


def _read_block(node, schema, where, errors):
    out = {}
    for key, raw, no in node.entries:
        if key not in schema:
            errors.append(f"line {no}: unknown key {key!r} in {where}")
            continue
        if key in out:
            errors.append(f"line {no}: duplicate key {key!r} in {where}")
            continue
        try:
            out[key] = schema[key][0](_value(raw))
        except ValueError as exc:
            errors.append(f"line {no}: {where}.{key}: {exc}")
            out[key] = None
    for key, (_, default) in schema.items():
        if key not in out:
            if default is REQUIRED:
                errors.append(f"line {node.line}: {where} is missing required key {key!r}")
            else:
                out[key] = list(default) if isinstance(default, list) else default
    return out


# -- parse ------------------------------------------------------------------


def parse_text(text, path=None, override=False) -> ScenarioFile:
    """Parse and validate; raises ``ScenarioError`` listing every problem found."""
    errors = []
    root = _tokenize(text, errors)
    runs = []
    for node in root.children:
        if node.head[0] != "run" or len(node.head) != 2:
            errors.append(f"line {node.line}: expected 'run NAME {{', got {' '.join(node.head)!r}")
            continue
        runs.append(_parse_run(node, errors))
        if errors:
            continue
    if not runs and not errors:
        errors.append("no runs defined")
    names = [r.name for r in runs]
    for n in set(names):
        if names.count(n) > 1:
            errors.append(f"duplicate run name {n!r}")
    if not errors:
        for r in runs:
            _derive(r, override, errors)
    if errors:
        raise ScenarioError(errors)
    return ScenarioFile(runs, path)


def parse_scenario(path, override=False) -> ScenarioFile:
    with open(path) as fh:
        text = fh.read()
    return parse_text(text, str(path), override)


def _parse_run(node, errors):
    name = node.head[1]
    blocks, ops, roles = {}, [], {}
    for child in node.children:
        key = " ".join(child.head)
        if key not in RUN_BLOCKS:
            errors.append(f"line {child.line}: unknown block {key!r} in run {name!r}")
            continue
        if key in blocks:
            errors.append(f"line {child.line}: duplicate block {key!r} in run {name!r}")
            continue
        schema = SCHEMA[child.head[0]]
        blocks[key] = _read_block(child, schema, f"{name}.{key}", errors)
        if key == "problem":
            for sub in child.children:
                if sub.head[0] == "operator" and len(sub.head) == 2:
                    ops.append((sub.head[1], _read_block(sub, SCHEMA["operator"], f"{name}.operator {sub.head[1]}", errors)))
                elif len(sub.head) == 1 and sub.head[0] in OPERATOR_ROLES:
                    roles[sub.head[0]] = _read_block(sub, SCHEMA["operator"], f"{name}.{sub.head[0]}", errors)
                else:
                    errors.append(f"line {sub.line}: unknown block {' '.join(sub.head)!r} in problem")
        elif child.children:
            errors.append(f"line {child.children[0].line}: block {key!r} takes no nested blocks")
    for key in REQUIRED_BLOCKS:
        if key not in blocks:
            errors.append(f"line {node.line}: run {name!r} is missing the {key!r} block")
    for key in ("output", "certify"):
        if key not in blocks:
            blocks[key] = {k: (list(d) if isinstance(d, list) else d) for k, (_, d) in SCHEMA[key].items()}
    return RunSpec(name, blocks, ops, roles)


# -- building objects ---------------------------------------------------------


def build_space(run: RunSpec) -> sp.SpaceSpec:
    b = run.blocks["space"]
    return sp.SpaceSpec(b["dim"], b["p"], b["q"], b["d_q"])


def _build_operator(d, dim, label):
    claims = Claims(contraction=d["contraction"], lipschitz=d["lipschitz"], accretive=d["accretive"],
                    strict=d["strict"], nonexpansive=d["nonexpansive"])
    if d["kind"] == "scaled-identity":
        if d["c"] is None:
            raise ValueError(f"{label}: scaled-identity needs c")
        op = ScaledIdentity(d["c"], dim)
        if any(v is not None for v in (d["contraction"], d["lipschitz"], d["accretive"], d["strict"])):
            op = ScaledIdentity(d["c"], dim, claims)
        return op
    if d["kind"] == "diagonal":
        if d["diag"] is None:
            raise ValueError(f"{label}: diagonal operator needs diag")
        return Affine.diagonal(d["diag"], d["offset"], claims=claims)
    if d["matrix"] is None:
        raise ValueError(f"{label}: affine operator needs matrix")
    return Affine(np.array(d["matrix"]), d["offset"], claims)


def build_problem(run: RunSpec, seed=None) -> ProblemInstance:
    s = build_space(run)
    b = run.blocks["problem"]
    if b["kind"] == "canonical":
        if not (s.is_hilbert and s.dim == 2):
            raise ValueError("the canonical problem lives in the Hilbert plane (dim = 2, p = q = 2)")
        return canonical_problem()
    if b["kind"] == "generated":
        return generate_problem(
            b["seed"] if seed is None else seed, s.dim, b["N"], s, fixed_dim=b["fixed_dim"],
            eig_range=tuple(b["eig_range"]), strictness_cap=b["strictness_cap"],
            contraction_range=tuple(b["contraction_range"]), g_spectrum=tuple(b["g_spectrum"]),
            offset_scale=b["offset_scale"])
    if not run.operators:
        raise ValueError("explicit problem needs at least one operator block")
    for role in OPERATOR_ROLES:
        if role not in run.roles:
            raise ValueError(f"explicit problem needs a {role} block")
    ops = tuple(_build_operator(d, s.dim, n) for n, d in run.operators)
    fixed = None
    if b["fixed_anchor"] is not None:
        basis = np.array(b["fixed_basis"]).T if b["fixed_basis"] else np.zeros((s.dim, 0))
        fixed = FixedSet(np.array(b["fixed_anchor"]), basis)
    return ProblemInstance(s, ops, _build_operator(run.roles["f"], s.dim, "f"),
                           _build_operator(run.roles["G"], s.dim, "G"),
                           None if b["weights"] is None else tuple(b["weights"]), fixed, run.name)


def build_gains(run: RunSpec, problem) -> Gains:
    g = run.blocks["gains"]
    s = problem.space
    if problem.beta is None or problem.eta is None or problem.L is None:
        raise ValueError("f must claim a contraction constant and G accretive and Lipschitz constants")
    if g["mu"] == "auto":
        mu = g["mu_ratio"] * mu_upper_bound(problem.eta, problem.L, s.q, s.d_q)
    else:
        mu = g["mu"]
    if g["gamma"] == "auto":
        tau = derive_tau(mu, problem.eta, problem.L, s.q, s.d_q)
        gamma = g["gamma_ratio"] * tau / problem.beta
    else:
        gamma = g["gamma"]
    return Gains.for_problem(problem, mu, gamma)


def build_schedule(d) -> Schedule:
    fam = d["family"]
    if fam == "power":
        return Schedule.power(1.0 if d["a"] is None else d["a"], 1.0 if d["r"] is None else d["r"])
    if fam == "constant":
        if d["b"] is None:
            raise ValueError("constant schedule needs b")
        return Schedule.constant(d["b"])
    if d["expr"] is None:
        raise ValueError("formula schedule needs expr")
    return Schedule.formula(d["expr"])


def build_config(run: RunSpec, *, max_iter=None, seed=None, override=None, cadence=None) -> AlgorithmConfig:
    """Turn a parsed run into an ``AlgorithmConfig``; keyword arguments override file values."""
    from ..iterate import preset as make_preset

    prob = build_problem(run, seed)
    gains = build_gains(run, prob)
    a = run.blocks["algorithm"]
    out = run.blocks["output"]
    x0 = np.zeros(prob.space.dim) if a["x0"] is None else np.array(a["x0"])
    cfg = AlgorithmConfig(
        mode=a["mode"], problem=prob, gains=gains,
        alpha=build_schedule(run.blocks["schedule alpha"]), beta=build_schedule(run.blocks["schedule beta"]),
        x0=x0,
        stopping=Stopping(a["max_iter"] if max_iter is None else max_iter, a["step_tol"], a["residual_tol"]),
        cadence=out["cadence"] if cadence is None else cadence,
        override=a["override"] if override is None else (override or a["override"]),
        backend=a["backend"], name=run.name,
    )
    if a["preset"] is not None:
        cfg = make_preset(a["preset"])(cfg)
    return cfg


def _derive(run, override, errors):
    try:
        cfg = build_config(run)
    except (ValueError, ArithmeticError) as exc:
        errors.append(f"run {run.name!r}: {exc}")
        return
    g = cfg.gains
    run.derived.update(tau=g.tau, mu=g.mu, gamma=g.gamma, mu_bound=g.mu_bound,
                       gamma_bound=g.gamma_bound if g.beta else None)
    if cfg.preset in ("yamada", "yamada-cyclic"):
        return
    rep = validate_gains(g)
    if not rep.ok and not (override or cfg.override):
        for c in rep.failures():
            errors.append(f"run {run.name!r}: gains rule {c.name} violated: {c.message}")


# -- serialize --------------------------------------------------------------


def _literal(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return v if _BARE.match(v) and v.lower() not in _WORDS else repr(v)
    return repr(v)


def _emit(lines, indent, head, d):
    lines.append(f"{'  ' * indent}{head} {{")
    for k, v in d.items():
        lines.append(f"{'  ' * (indent + 1)}{k} = {_literal(v)}")


def serialize(sf: ScenarioFile) -> str:
    lines = []
    for run in sf.runs:
        lines.append(f"run {run.name} {{")
        for key in RUN_BLOCKS:
            if key not in run.blocks:
                continue
            _emit(lines, 1, key, run.blocks[key])
            if key == "problem":
                for name, d in run.operators:
                    _emit(lines, 2, f"operator {name}", d)
                    lines.append("    }")
                for role in OPERATOR_ROLES:
                    if role in run.roles:
                        _emit(lines, 2, role, run.roles[role])
                        lines.append("    }")
            lines.append("  }")
        lines.append("}")
        lines.append("")
    return "\n".join(lines)
