import json

import numpy as np
import pytest

from perronrate import topical
from perronrate.formats import (ParseError, dumps_spec, load_spec, parse_spec, read_mdp_text,
                                read_tensor_text, spec_document, write_tensor_text)
from perronrate.maps import BuiltinMap, ExprMap, MatrixMap, TensorMap

TENSOR_TEXT = """# order-3 example
3 2
1 1 1 1
1 2 2 2   # A_122
2 1 2 1
"""

DOCS = [
    {"kind": "matrix", "rows": [[2, 1], [1, 2]]},
    {"kind": "tensor", "order": 3, "dim": 2, "entries": [[1, 1, 1, 1], [1, 2, 2, 2], [2, 1, 2, 1]]},
    {"kind": "expr", "coords": [["max", ["var", 1], ["mono", 2, [0.5, 0.5]]],
                                ["min", ["var", 2], ["sum", ["var", 1], ["var", 2]]]]},
    {"kind": "builtin", "tag": "example2"},
    {"kind": "topical", "coords": [["max", ["aff", [1, 0], 2], ["aff", [0, 1], 0]],
                                   ["min", ["aff", [0.5, 0.5], 0], ["aff", [0, 1], 1]]]},
    {"kind": "topical", "mdp": [[1, 0.5, [0.2, 0.8]], [1, 0.0, [1, 0]], [2, 1.0, [0, 1]]]},
]


def test_tensor_text_round_trip():
    t = read_tensor_text(TENSOR_TEXT)
    assert isinstance(t, TensorMap) and t.order == 3 and t.dim == 2
    assert t.evaluate([1.0, 1.0]) == pytest.approx([np.sqrt(3.0), 1.0])
    again = read_tensor_text(write_tensor_text(t))
    assert again.entries == t.entries


def test_tensor_error_has_line_number():
    with pytest.raises(ParseError) as err:
        read_tensor_text("3 2\n1 1 1 1\n1 2 x 2\n")
    assert err.value.line == 3
    with pytest.raises(ParseError):
        read_tensor_text("# nothing\n")


def test_mdp_table():
    F = read_mdp_text("""
        1; a; reward 0.5; probabilities 0.2 0.8
        1; b; 0.0; 1 0
        2; a; reward 1; probs 0 1
    """)
    x = np.array([1.0, 3.0])
    assert F(x) == pytest.approx([max(0.5 + 0.2 + 2.4, 1.0), 4.0])


def test_mdp_rejects_bad_probabilities():
    with pytest.raises(ParseError) as err:
        read_mdp_text("1; a; reward 0; probabilities 0.5 0.6\n")
    assert err.value.line == 1


@pytest.mark.parametrize("doc", DOCS, ids=lambda d: d["kind"])
def test_round_trip_idempotent(doc):
    once = dumps_spec(parse_spec(json.dumps(doc)).model)
    twice = dumps_spec(parse_spec(once).model)
    assert once == twice


def test_var_shorthand_expanded():
    doc = spec_document(parse_spec(json.dumps(DOCS[2])).model)
    assert doc["coords"][0][1] == ["mono", 1, [1, 0]]


def test_parsed_models_evaluate():
    assert isinstance(parse_spec(json.dumps(DOCS[0])).model, MatrixMap)
    assert isinstance(parse_spec(json.dumps(DOCS[3])).model, BuiltinMap)
    e = parse_spec(json.dumps(DOCS[2])).model
    assert isinstance(e, ExprMap)
    assert e.evaluate([4.0, 1.0]) == pytest.approx([4.0, 1.0])
    F = parse_spec(json.dumps(DOCS[4])).model
    assert isinstance(F, topical.MinMaxMap)


def test_json_syntax_error_has_position():
    with pytest.raises(ParseError) as err:
        parse_spec('{"kind": "matrix",\n "rows": [[1, 2]')
    assert err.value.line == 2 and err.value.column is not None


@pytest.mark.parametrize("doc, needle", [
    ({"kind": "nope"}, "kind"),
    ({"kind": "matrix", "rows": [[1, 0], [0, 0]]}, "invariant"),
    ({"kind": "expr", "coords": [["mono", 1, [0.5, 0.6]], ["var", 2]]}, "invariant"),
    ({"kind": "expr", "coords": [["var", 3], ["var", 1]]}, ""),
    ({"kind": "topical", "coords": [["aff", [0.5, 0.4], 0], ["aff", [0, 1], 0]]}, "invariant"),
    ({"kind": "builtin", "tag": "example9"}, ""),
])
def test_invalid_documents(doc, needle):
    with pytest.raises(ParseError) as err:
        parse_spec(json.dumps(doc))
    assert needle in str(err.value)


def test_tensor_file_reference(tmp_path):
    (tmp_path / "a.tns").write_text(TENSOR_TEXT)
    spec_path = tmp_path / "t.json"
    spec_path.write_text(json.dumps({"kind": "tensor", "file": "a.tns"}))
    spec = load_spec(spec_path)
    assert spec.kind == "tensor"
    # the canonical document inlines the referenced file
    assert "entries" in spec_document(spec.model)
    with pytest.raises(ParseError):
        load_spec(tmp_path / "missing.json")
