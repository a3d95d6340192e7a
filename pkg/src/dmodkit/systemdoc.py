"""The SystemDoc JSON format: serialized operator matrices with metadata.

A document holds variable, parameter and unknown names plus one term list per
equation; every term is an object {"c": coefficient string, "d": multi-index
array, "u": unknown name}.  Round-trips are lossless up to coefficient
canonicalization.  Validation failures carry the document location.
"""

from __future__ import annotations

import json
from typing import Any, Mapping

from dmodkit.exact import CoeffParseError, Context, parse_coeff
from dmodkit.ore import OpMatrix, OpRow, OrePoly

__all__ = ["SchemaError", "parse", "parse_file", "emit", "dump_file", "matrix_to_doc", "doc_to_matrix"]


class SchemaError(ValueError):
    """A malformed document; ``location`` points at the offending element."""

    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


def _expect_name_list(doc: Mapping, key: str, required: bool = True) -> list[str]:
    if key not in doc:
        if required:
            raise SchemaError(f"missing key {key!r}", key)
        return []
    val = doc[key]
    if not isinstance(val, list) or not all(isinstance(x, str) and x for x in val):
        raise SchemaError("must be a list of nonempty strings", key)
    if len(set(val)) != len(val):
        raise SchemaError("names must be distinct", key)
    return list(val)


def doc_to_matrix(doc: Mapping[str, Any]) -> OpMatrix:
    if not isinstance(doc, Mapping):
        raise SchemaError("document must be a JSON object")
    x_vars = _expect_name_list(doc, "vars")
    params = _expect_name_list(doc, "params", required=False)
    unknowns = _expect_name_list(doc, "unknowns")
    if not x_vars:
        raise SchemaError("needs at least one variable", "vars")
    if not unknowns:
        raise SchemaError("needs at least one unknown", "unknowns")
    ctx = Context(tuple(x_vars), tuple(params))
    eqs = doc.get("equations")
    if not isinstance(eqs, list):
        raise SchemaError("missing or non-list 'equations'", "equations")
    n = len(x_vars)
    col = {u: k for k, u in enumerate(unknowns)}
    rows: list[OpRow] = []
    for i, eq in enumerate(eqs):
        loc_eq = f"equations[{i}]"
        if not isinstance(eq, list):
            raise SchemaError("equation must be a list of terms", loc_eq)
        terms: dict = {}
        for j, term in enumerate(eq):
            loc = f"{loc_eq}[{j}]"
            if not isinstance(term, Mapping):
                raise SchemaError("term must be an object", loc)
            for key in ("c", "d", "u"):
                if key not in term:
                    raise SchemaError(f"term missing {key!r}", loc)
            d = term["d"]
            if (
                not isinstance(d, list)
                or len(d) != n
                or not all(isinstance(x, int) and x >= 0 for x in d)
            ):
                raise SchemaError(
                    f"multi-index must be a list of {n} nonnegative integers", f"{loc}.d"
                )
            u = term["u"]
            if u not in col:
                raise SchemaError(f"unknown name {u!r} not among {unknowns}", f"{loc}.u")
            if not isinstance(term["c"], str):
                raise SchemaError("coefficient must be a string", f"{loc}.c")
            try:
                c = parse_coeff(term["c"], ctx)
            except CoeffParseError as e:
                raise SchemaError(str(e), f"{loc}.c") from None
            key = (tuple(d), col[u])
            terms[key] = terms[key] + c if key in terms else c
        rows.append(OpRow(ctx, len(unknowns), terms))
    labels = doc.get("labels")
    if labels is not None:
        labels = _expect_name_list(doc, "labels")
        if len(labels) != len(rows):
            raise SchemaError("label count must match equation count", "labels")
    return OpMatrix.from_op_rows(ctx, unknowns, rows, row_labels=labels)


def matrix_to_doc(matrix: OpMatrix) -> dict[str, Any]:
    eqs = []
    for i in range(matrix.p):
        row = matrix.row(i)
        eq = [
            {"c": str(c), "d": list(mu), "u": matrix.unknowns[k]}
            for (mu, k), c in row.sorted_terms()
        ]
        eqs.append(eq)
    return {
        "vars": list(matrix.ctx.x_vars),
        "params": list(matrix.ctx.params),
        "unknowns": list(matrix.unknowns),
        "labels": list(matrix.row_labels),
        "equations": eqs,
    }


def parse(source: str | Mapping[str, Any]) -> OpMatrix:
    """Parse a JSON string or an already-decoded document."""
    if isinstance(source, str):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as e:
            raise SchemaError(f"invalid JSON: {e}") from None
    else:
        doc = source
    return doc_to_matrix(doc)


def parse_file(path: str) -> OpMatrix:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise SchemaError(f"invalid JSON in {path}: {e}") from None
    return doc_to_matrix(doc)


def emit(matrix: OpMatrix) -> str:
    return json.dumps(matrix_to_doc(matrix), indent=2)


def dump_file(matrix: OpMatrix, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(emit(matrix) + "\n")


def op_to_terms(op: OrePoly) -> list[dict[str, Any]]:
    """Serialize a scalar operator as a list of {c, d} objects."""
    return [
        {"c": str(op.terms[mu]), "d": list(mu)}
        for mu in sorted(op.terms, key=lambda m: (sum(m), tuple(reversed(m))), reverse=True)
    ]
