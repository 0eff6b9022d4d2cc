"""Map-spec documents, tensor coordinate files and MDP tables.

A map-spec document is JSON with a ``kind`` discriminator::

    {"kind": "matrix", "rows": [[2, 1], [1, 2]]}
    {"kind": "tensor", "order": 3, "dim": 2, "entries": [[1, 1, 1, 1.0], [1, 2, 2, 2.0]]}
    {"kind": "tensor", "file": "a.tns"}
    {"kind": "expr", "coords": [["max", ["var", 1], ["var", 2]],
                                 ["mono", 1.0, [0.5, 0.5]]]}
    {"kind": "builtin", "tag": "example1"}
    {"kind": "topical", "coords": [["max", ["aff", [1, 0], 2.0], ["aff", [0, 1], 0.0]], ...]}
    {"kind": "topical", "mdp": [[1, 0.5, [0.2, 0.8]], [2, 0.0, [1.0, 0.0]]]}
    {"kind": "topical", "table": "mdp.txt"}

Indices in documents and files are 1-based. ``["var", j]`` is shorthand
for ``["mono", 1, e_j]`` and is expanded when a document is re-serialized.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from perronrate import topical
from perronrate.maps import (BuiltinMap, ExprMap, MatrixMap, Max, Min, ModelError,
                             Monomial, Sum, TensorMap)

KINDS = ("matrix", "tensor", "expr", "builtin", "topical")
PROB_ATOL = 1e-12


class ParseError(ValueError):
    """Malformed input; `line`/`column` are 1-based when known."""

    def __init__(self, msg: str, source: str = "", line: int | None = None,
                 column: int | None = None):
        self.source, self.line, self.column = source, line, column
        where = source
        if line is not None:
            where += f":{line}" + (f":{column}" if column is not None else "")
        super().__init__(f"{where}: {msg}" if where else msg)


# ------------------------------------------------------------- tensor files


def read_tensor_text(text: str, source: str = "<tensor>") -> TensorMap:
    """Header line ``m n``, then ``i1 ... im value`` per line; ``#`` comments."""
    header = None
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        try:
            if header is None:
                if len(fields) != 2:
                    raise ValueError("header must be 'm n'")
                header = (int(fields[0]), int(fields[1]))
                continue
            m, _ = header
            if len(fields) != m + 1:
                raise ValueError(f"expected {m} indices and a value, got {len(fields)} fields")
            idx = tuple(int(f) - 1 for f in fields[:m])
            entries.append((idx, float(fields[m])))
        except ValueError as exc:
            raise ParseError(str(exc), source, lineno) from None
    if header is None:
        raise ParseError("missing header line 'm n'", source)
    try:
        return TensorMap(header[0], header[1], entries)
    except ModelError as exc:
        raise ParseError(f"invalid tensor: {exc}", source) from None


def read_tensor(path) -> TensorMap:
    path = Path(path)
    return read_tensor_text(path.read_text(), str(path))


def write_tensor_text(t: TensorMap) -> str:
    lines = [f"{t.order} {t.dim}"]
    for idx, val in t.entries:
        lines.append(" ".join(str(i + 1) for i in idx) + f" {val!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- MDP tables


def read_mdp_text(text: str, source: str = "<mdp>") -> topical.MinMaxMap:
    """One action per line: ``state; action; reward b; probabilities p1 ... pn``.

    The words ``reward`` and ``probabilities`` are optional. Each row of
    probabilities must sum to 1 within 1e-12.
    """
    blocks: dict[int, list] = {}
    n = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(";")]
        try:
            if len(parts) != 4:
                raise ValueError("expected 'state; action; reward b; probabilities p1 ... pn'")
            state = int(parts[0])
            reward = _strip_word(parts[2], "reward").split()
            if len(reward) != 1:
                raise ValueError("reward field must hold one number")
            b = float(reward[0])
            probs = [float(v) for v in _strip_word(parts[3], "probabilities").split()]
            if n is None:
                n = len(probs)
            if len(probs) != n:
                raise ValueError(f"expected {n} probabilities, got {len(probs)}")
            if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > PROB_ATOL:
                raise ValueError(f"probabilities must be nonnegative and sum to 1, got {sum(probs)!r}")
        except ValueError as exc:
            raise ParseError(str(exc), source, lineno) from None
        blocks.setdefault(state, []).append((b, probs))
    if not blocks:
        raise ParseError("no actions found", source)
    if sorted(blocks) != list(range(1, n + 1)):
        raise ParseError(f"states must be exactly 1..{n}, got {sorted(blocks)}", source)
    return topical.mdp_operator([blocks[s] for s in range(1, n + 1)])


_KEYWORDS = {"reward": ("reward",), "probabilities": ("probabilities", "probs")}


def _strip_word(field: str, word: str) -> str:
    f = field.strip()
    for w in _KEYWORDS[word]:
        if f.lower().startswith(w):
            return f[len(w):].strip()
    return f


# ------------------------------------------------------------ spec documents


@dataclass
class MapSpec:
    """A parsed document: the model plus optional metadata."""

    kind: str
    model: Any
    name: str = ""


def _fail(msg: str, path: str, source: str):
    raise ParseError(f"{path}: {msg}" if path else msg, source)


def _number(v, path, source) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(f"expected a number, got {v!r}", path, source)
    return float(v)


def _numbers(v, path, source) -> list[float]:
    if not isinstance(v, list):
        _fail(f"expected an array of numbers, got {v!r}", path, source)
    return [_number(x, f"{path}[{i}]", source) for i, x in enumerate(v)]


def _expr_node(node, n: int, path: str, source: str):
    if not isinstance(node, list) or not node or not isinstance(node[0], str):
        _fail("expression node must be an array starting with a tag", path, source)
    tag = node[0].lower()
    if tag == "var":
        if len(node) not in (2, 3):
            _fail("'var' takes an index and an optional coefficient", path, source)
        j = node[1]
        if not isinstance(j, int) or not 1 <= j <= n:
            _fail(f"variable index must be an integer in 1..{n}", path, source)
        c = _number(node[2], path + "[2]", source) if len(node) == 3 else 1.0
        a = [0.0] * n
        a[j - 1] = 1.0
        return Monomial(c, tuple(a))
    if tag == "mono":
        if len(node) != 3:
            _fail("'mono' takes a coefficient and an exponent array", path, source)
        a = _numbers(node[2], path + "[2]", source)
        if len(a) != n:
            _fail(f"exponent array must have {n} entries", path, source)
        return Monomial(_number(node[1], path + "[1]", source), tuple(a))
    kinds = {"sum": Sum, "max": Max, "min": Min}
    if tag not in kinds:
        _fail(f"unknown expression tag {node[0]!r}", path, source)
    if len(node) < 2:
        _fail(f"'{tag}' needs at least one child", path, source)
    return kinds[tag](tuple(_expr_node(c, n, f"{path}[{i}]", source)
                            for i, c in enumerate(node[1:], 1)))


def _topical_node(node, n: int, path: str, source: str):
    if not isinstance(node, list) or not node or not isinstance(node[0], str):
        _fail("topical node must be an array starting with a tag", path, source)
    tag = node[0].lower()
    if tag == "aff":
        if len(node) != 3:
            _fail("'aff' takes a coefficient array and an offset", path, source)
        a = _numbers(node[1], path + "[1]", source)
        if len(a) != n:
            _fail(f"coefficient array must have {n} entries", path, source)
        return topical.Affine(tuple(a), _number(node[2], path + "[2]", source))
    kinds = {"max": topical.Max, "min": topical.Min}
    if tag not in kinds:
        _fail(f"unknown topical tag {node[0]!r}", path, source)
    if len(node) < 2:
        _fail(f"'{tag}' needs at least one child", path, source)
    return kinds[tag](tuple(_topical_node(c, n, f"{path}[{i}]", source)
                            for i, c in enumerate(node[1:], 1)))


def _coords(doc, source) -> list:
    coords = doc.get("coords")
    if not isinstance(coords, list) or not coords:
        _fail("'coords' must be a nonempty array", "coords", source)
    return coords


def build_model(doc: dict, source: str = "<spec>", base_dir: str | os.PathLike = ".") -> MapSpec:
    """Turn a decoded JSON document into a model; model invariants are checked."""
    if not isinstance(doc, dict):
        raise ParseError("document must be a JSON object", source)
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ParseError(f"'kind' must be one of {', '.join(KINDS)}; got {kind!r}", source)
    name = str(doc.get("name", ""))
    base = Path(base_dir)
    try:
        if kind == "matrix":
            rows = doc.get("rows")
            if not isinstance(rows, list) or not rows:
                _fail("'rows' must be a nonempty array of arrays", "rows", source)
            model = MatrixMap([_numbers(r, f"rows[{i}]", source) for i, r in enumerate(rows)])
        elif kind == "tensor":
            if "file" in doc:
                model = read_tensor(base / doc["file"])
            else:
                m, n = doc.get("order"), doc.get("dim")
                if not isinstance(m, int) or not isinstance(n, int):
                    _fail("'order' and 'dim' must be integers", "", source)
                entries = []
                for i, e in enumerate(doc.get("entries") or []):
                    vals = _numbers(e, f"entries[{i}]", source)
                    if len(vals) != m + 1 or any(v != int(v) for v in vals[:m]):
                        _fail(f"entry must be {m} integer indices and a value", f"entries[{i}]", source)
                    entries.append((tuple(int(v) - 1 for v in vals[:m]), vals[m]))
                model = TensorMap(m, n, entries)
        elif kind == "expr":
            coords = _coords(doc, source)
            n = len(coords)
            model = ExprMap([_expr_node(c, n, f"coords[{i}]", source) for i, c in enumerate(coords)])
        elif kind == "builtin":
            model = BuiltinMap(str(doc.get("tag", "")))
        else:
            if "table" in doc:
                path = base / doc["table"]
                model = read_mdp_text(path.read_text(), str(path))
            elif "mdp" in doc:
                model = _mdp_rows(doc["mdp"], source)
            else:
                coords = _coords(doc, source)
                n = len(coords)
                model = topical.MinMaxMap([_topical_node(c, n, f"coords[{i}]", source)
                                           for i, c in enumerate(coords)])
    except (ModelError, topical.TopicalError) as exc:
        raise ParseError(f"invariant violated: {exc}", source) from None
    except OSError as exc:
        raise ParseError(f"cannot read referenced file: {exc}", source) from None
    return MapSpec(kind, model, name)


def _mdp_rows(rows, source) -> topical.MinMaxMap:
    if not isinstance(rows, list) or not rows:
        _fail("'mdp' must be a nonempty array of [state, reward, probabilities]", "mdp", source)
    blocks: dict[int, list] = {}
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != 3 or not isinstance(row[0], int):
            _fail("row must be [state, reward, probabilities]", f"mdp[{i}]", source)
        probs = _numbers(row[2], f"mdp[{i}][2]", source)
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > PROB_ATOL:
            _fail("probabilities must be nonnegative and sum to 1", f"mdp[{i}][2]", source)
        blocks.setdefault(row[0], []).append((_number(row[1], f"mdp[{i}][1]", source), probs))
    n = len(blocks)
    if sorted(blocks) != list(range(1, n + 1)):
        _fail(f"states must be exactly 1..{n}", "mdp", source)
    return topical.mdp_operator([blocks[s] for s in range(1, n + 1)])


def parse_spec(text: str, source: str = "<spec>", base_dir=".") -> MapSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, source, exc.lineno, exc.colno) from None
    return build_model(doc, source, base_dir)


def load_spec(path) -> MapSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc}", str(path)) from None
    return parse_spec(text, str(path), path.parent)


# -------------------------------------------------------------- serializing


def _num(v: float):
    v = float(v)
    return int(v) if v.is_integer() and abs(v) < 2 ** 53 else v


def _expr_doc(node) -> list:
    if isinstance(node, Monomial):
        return ["mono", _num(node.coef), [_num(a) for a in node.exponents]]
    tag = {Sum: "sum", Max: "max", Min: "min"}[type(node)]
    return [tag, *[_expr_doc(c) for c in node.children]]


def _topical_doc(node) -> list:
    if isinstance(node, topical.Affine):
        return ["aff", [_num(a) for a in node.coeffs], _num(node.offset)]
    tag = "max" if isinstance(node, topical.Max) else "min"
    return [tag, *[_topical_doc(c) for c in node.children]]


def spec_document(model, name: str = "") -> dict:
    """Canonical document for `model`; files are inlined, shorthands expanded."""
    if isinstance(model, MatrixMap):
        doc = {"kind": "matrix", "rows": [[_num(v) for v in row] for row in model.A]}
    elif isinstance(model, TensorMap):
        doc = {"kind": "tensor", "order": model.order, "dim": model.dim,
               "entries": [[*(i + 1 for i in idx), _num(v)] for idx, v in model.entries]}
    elif isinstance(model, ExprMap):
        doc = {"kind": "expr", "coords": [_expr_doc(c) for c in model.coords]}
    elif isinstance(model, BuiltinMap):
        doc = {"kind": "builtin", "tag": model.tag}
    elif isinstance(model, topical.MinMaxMap):
        doc = {"kind": "topical", "coords": [_topical_doc(c) for c in model.coords]}
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    if name:
        doc["name"] = name
    return doc


def dumps_spec(model, name: str = "") -> str:
    return json.dumps(spec_document(model, name), sort_keys=True, indent=2) + "\n"
