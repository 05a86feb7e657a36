import json
import subprocess
import sys

import pytest

import gradualmech as gm
from gradualmech.cli import main
from gradualmech.fileformat import (ParseError, parse_mechanism,
                                    serialize_mechanism)


def roundtrip(mech, f):
    text = serialize_mechanism(mech, f)
    m2, model2, f2 = parse_mechanism(text)
    return text, m2, model2, f2


def test_roundtrip_voting(voting):
    model, f, mechs = voting
    for name, mech in mechs.items():
        text, m2, model2, f2 = roundtrip(mech, f)
        assert gm.mechanisms_equal(m2, mech), name
        assert model2 == model and f2 == f
        assert serialize_mechanism(m2, f2) == text


def test_roundtrip_survives_renumbering(voting):
    model, f, mechs = voting
    text = serialize_mechanism(mechs["g3"], f)
    doc = json.loads(text)

    def bump(node):
        node["id"] += 100
        for edge in node.get("children", ()):
            bump(edge["node"])

    bump(doc["tree"])
    for entry in doc["infosets"]:
        entry["nodes"] = [v + 100 for v in entry["nodes"]]
    m2, _, f2 = parse_mechanism(json.dumps(doc))
    assert gm.mechanisms_equal(m2, mechs["g3"])


def test_parse_reports_syntax_position():
    with pytest.raises(ParseError, match="line"):
        parse_mechanism("{ not json")


def test_parse_reports_semantic_violation(voting):
    model, f, mechs = voting
    doc = json.loads(serialize_mechanism(mechs["direct"], f))
    # voter 1's first two reports overlap on M
    doc["tree"]["children"][0]["step"]["voter1"] = ["L", "M"]
    doc["tree"]["children"][1]["step"]["voter1"] = ["M"]
    from gradualmech.fileformat import load_mechanism
    with pytest.raises(ParseError, match="overlapping|partition|product"):
        load_mechanism(json.dumps(doc))


def test_parse_unknown_outcome(voting):
    model, f, mechs = voting
    doc = json.loads(serialize_mechanism(mechs["direct"], f))
    doc["tree"]["children"][0]["node"]["outcome"] = "nope"
    with pytest.raises(ParseError, match="unknown outcome"):
        parse_mechanism(json.dumps(doc))


def run_cli(args, stdin_text=None, capsys=None):
    import io
    from contextlib import redirect_stdout
    old_stdin = sys.stdin
    if stdin_text is not None:
        sys.stdin = io.StringIO(stdin_text)
    buf = io.StringIO()
    try:
        with redirect_stdout(buf):
            code = main(args)
    finally:
        sys.stdin = old_stdin
    return code, buf.getvalue()


def test_cli_gen_and_check_pipeline(tmp_path, voting):
    model, f, mechs = voting
    path = tmp_path / "g3.json"
    code, out = run_cli(["gen", "voting", "--which", "g3", "-o", str(path)])
    assert code == 0
    code, out = run_cli(["check-ic", str(path)])
    assert code == 0 and "holds" in out
    code, out = run_cli(["check-irp", str(path)])
    assert code == 0
    code, out = run_cli(["check-sp", str(path)])
    assert code == 0


def test_cli_failing_check_exits_one(tmp_path):
    path = tmp_path / "bad.json"
    code, _ = run_cli(["gen", "sd", "--which", "bad", "-o", str(path)])
    assert code == 0
    code, out = run_cli(["check-ic", str(path)])
    assert code == 1
    assert "fails" in out and "harmed agent" in out


def test_cli_parse_error_exits_two(tmp_path):
    path = tmp_path / "junk.json"
    path.write_text("{")
    code, _ = run_cli(["check-ic", str(path)])
    assert code == 2


def test_cli_validate_reports(tmp_path, voting):
    model, f, mechs = voting
    doc = json.loads(serialize_mechanism(mechs["direct"], f))
    doc["tree"]["children"][0]["step"]["voter1"] = ["L", "M"]
    doc["tree"]["children"][1]["step"]["voter1"] = ["M"]
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(doc))
    code, out = run_cli(["validate", str(path)])
    assert code == 1
    assert "overlapping" in out or "product" in out or "partition" in out


def test_cli_reduce_prints_chain(tmp_path):
    path = tmp_path / "g1.json"
    run_cli(["gen", "voting", "--which", "g1", "-o", str(path)])
    code, out = run_cli(["reduce", str(path)])
    assert code == 0
    assert "all illuminations preserving: True" in out
    code, out = run_cli(["reduce", str(path), "--json"])
    doc = json.loads(out)
    assert doc["all_illuminations_preserving"] is True
    kinds = [s["kind"] for s in doc["steps"]]
    assert kinds.count("merge") == 1 and kinds.count("split") == 1


def test_cli_check_ill(tmp_path):
    path = tmp_path / "gstar.json"
    run_cli(["gen", "auction", "--n", "2", "--m", "2", "-o", str(path)])
    mech, model, f = gm.example1_mechanism(), *gm.second_price_scf(2, 2)
    pooled = next(k for k, s in enumerate(gm.build_gstar(2, 2).infosets)
                  if s.agent == 1 and len(s.nodes) == 2)
    g = gm.build_gstar(2, 2)
    first_node = g.infosets[pooled].nodes[0]
    code, out = run_cli(["check-ill", str(path), "--agent", "bidder2",
                         "--infoset", str(pooled), "--part", str(first_node)])
    assert code == 1 and "fails" in out


def test_cli_transform_split_roundtrip(tmp_path, voting):
    model, f, mechs = voting
    src = tmp_path / "g1.json"
    run_cli(["gen", "voting", "--which", "g1", "-o", str(src)])
    g1 = mechs["g1"]
    (spl,) = gm.find_opportunities(g1, "split")
    out_path = tmp_path / "split.json"
    code, _ = run_cli(["transform", str(src), "--kind", "split",
                       "--agent", "voter2", "--infoset", str(spl.infoset),
                       "--action", "L,R", "--part", "L", "-o", str(out_path)])
    assert code == 0
    m2, _, _ = parse_mechanism(out_path.read_text())
    assert gm.mechanisms_equal(m2, gm.apply_split(g1, spl))


def test_cli_gen_random_deterministic(tmp_path):
    code1, out1 = run_cli(["gen", "random", "--seed", "11"])
    code2, out2 = run_cli(["gen", "random", "--seed", "11"])
    assert code1 == code2 == 0
    assert out1 == out2
    code3, out3 = run_cli(["gen", "random", "--seed", "12"])
    assert out3 != out1


def test_cli_export_dot(tmp_path):
    src = tmp_path / "g3.json"
    run_cli(["gen", "voting", "--which", "g3", "-o", str(src)])
    code, out = run_cli(["export-dot", str(src)])
    assert code == 0
    assert out.startswith("digraph mechanism {")
    assert "style=dashed" in out  # voter 2's pooled pair is linked
    code2, out2 = run_cli(["export-dot", str(src)])
    assert out == out2


def test_cli_ttc_gen_with_priorities(tmp_path):
    code, out = run_cli(["gen", "ttc", "--n", "2", "--priorities", "0,1;1,0"])
    assert code == 0
    m2, model2, f2 = parse_mechanism(out)
    assert gm.validate(m2) == []
    pr = ((0, 1), (1, 0))
    model, f = gm.ttc_scf(pr, 2)
    assert gm.mechanisms_equal(m2, gm.build_rda(pr, 2))


def test_fixture_documents_load(voting, sd_pair):
    from pathlib import Path
    fixtures = Path(__file__).parent / "fixtures"
    model, f, mechs = voting
    m, _, ff = parse_mechanism((fixtures / "voting_g3.json").read_text())
    assert gm.validate(m) == []
    assert gm.mechanisms_equal(m, mechs["g3"]) and ff == f
    m2, _, f2 = parse_mechanism((fixtures / "figure_style_sd.json").read_text())
    assert gm.validate(m2) == []
    assert not gm.is_ic(m2, f2).holds


def test_cli_gen_direct_from_document(tmp_path):
    src = tmp_path / "g1.json"
    run_cli(["gen", "voting", "--which", "g1", "-o", str(src)])
    code, out = run_cli(["gen", "direct", str(src)])
    assert code == 0
    m, model, f = parse_mechanism(out)
    assert gm.is_static(m)
    assert gm.mechanisms_equal(m, gm.direct_mechanism(model, f))


def test_cli_relaxed_rp_flag(tmp_path):
    src = tmp_path / "g3.json"
    run_cli(["gen", "voting", "--which", "g3", "-o", str(src)])
    code, out = run_cli(["check-rp", str(src), "--relaxed"])
    assert code == 0 and "relaxed" in out


def test_gstar_dot_deterministic():
    from gradualmech.dot import export_dot
    g = gm.build_gstar(3, 2)
    text = export_dot(g)
    assert text == export_dot(gm.build_gstar(3, 2))
    # the pooled trio of bidder 3 renders as a dashed chain
    assert text.count("style=dashed") >= 3


def test_console_script_runs():
    result = subprocess.run([sys.executable, "-m", "gradualmech.cli", "gen",
                             "voting", "--which", "direct"],
                            capture_output=True, text=True)
    assert result.returncode == 0
    assert '"format": "gm/1"' in result.stdout
