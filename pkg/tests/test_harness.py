"""Instance files, generators, experiments, and the command line."""

import pytest

from rangeroots import oracle
from rangeroots.harness import (
    EXPERIMENTS,
    InstanceError,
    build_model,
    emit_instance,
    model_b_instance,
    mystery_instance,
    parse_text,
    roots_instance,
    run_experiment,
    write_tsv,
)
from rangeroots.harness.cli import main
from rangeroots.harness.generators import shopper_count
from rangeroots.roots import BC

SAMPLE = """\
# a little of everything
universe 1 6
int X1 in {1,2,3}
int X2 in {2,4}   # trailing comment
int X3 in {1,5,6}
int I in {1,2}
int R in {1,2,3,4}
set S lb {2} ub {1,2,3}
con roots [X1,X2,X3] S T
con among [X1,X2] {2,5} N
con card T = N
con gcc [X1,X2] {1,2} [O1,O2]
con element [X1,X2] I R
con table [X1,X2] {(1,2),(2,4)}
con open-gcc [X1,X2,X3] S {1} [1]
"""


# ----------------------------------------------------------------------
# parsing and emission


def test_round_trip():
    inst = parse_text(SAMPLE)
    text = emit_instance(inst)
    again = parse_text(text)
    assert again == inst
    assert emit_instance(again) == text


def test_parse_fields():
    inst = parse_text(SAMPLE)
    assert (inst.lo, inst.hi) == (1, 6)
    assert inst.ints[1] == ("X2", (2, 4))
    assert inst.ints[3] == ("I", (1, 2))
    assert inst.sets == (("S", (2,), (1, 2, 3)),)
    roots = inst.cons[0]
    assert roots.tag == "roots" and roots.svars == ("S", "T")
    among = inst.cons[1]
    assert among.values == (2, 5) and among.counts == (("var", "N"),)
    card = inst.cons[2]
    assert card.values == ("=",)
    gcc = inst.cons[3]
    assert gcc.counts == (("var", "O1"), ("var", "O2"))
    table = inst.cons[5]
    assert table.values == ((1, 2), (2, 4))


@pytest.mark.parametrize(
    "text,msg",
    [
        ("int X in {1}", r"line 1: the universe line must come first"),
        ("universe 1 3\nuniverse 1 3", r"line 2: duplicate universe"),
        ("universe 3 1", r"line 1: empty universe"),
        ("universe 1 3\nfrob x", r"line 2: unknown directive 'frob'"),
        ("universe 1 3\nint X in {}", r"line 2: X needs a non-empty domain"),
        ("universe 1 3\nint X in {-2}", r"below the representable range"),
        ("universe 1 3\nint X in {1}\nint X in {2}", r"line 3: duplicate variable 'X'"),
        ("universe 1 3\nset S lb {2} ub {1}", r"lb must lie within ub"),
        ("universe 1 3\nset S lb {} ub {4}", r"bound leaves the universe"),
        ("universe 1 3\ncon frobnicate [X]", r"line 2: unknown constraint tag 'frobnicate'"),
        ("universe 1 3\ncon among [X] {1}", r"among takes 3 arguments, got 2"),
        ("universe 1 3\ncon among [X] {1} {2}", r"expected a count"),
        ("universe 1 3\ncon card S == 1", r"bad relation"),
        ("universe 1 3\ncon table [X,Y] {(1,2),(3)}", r"malformed pair list"),
        ("universe 1 3\ncon roots X S T", r"expected a variable list"),
        ("", r"missing universe line"),
    ],
)
def test_parse_errors(text, msg):
    with pytest.raises(InstanceError, match=msg):
        parse_text(text)


# ----------------------------------------------------------------------
# model construction


def test_auto_variables():
    text = (
        "universe 1 5\n"
        "int X1 in {1,2}\n"
        "int X2 in {2,3}\n"
        "con roots [X1,X2] S T\n"
        "con among [X1,X2] {2} N\n"
    )
    built = build_model(parse_text(text))
    store = built.model.store
    assert store.lb_values(built.set_ids["S"]) == []
    assert store.ub_values(built.set_ids["T"]) == [1, 2, 3, 4, 5]
    # the count of two variables can be 0, 1 or 2
    assert store.int_values(built.int_ids["N"]) == [0, 1, 2]


def test_undeclared_integer_rejected():
    with pytest.raises(InstanceError, match="unknown integer variable 'Z1'"):
        build_model(parse_text("universe 1 3\ncon alldifferent [Z1]"))


def test_kind_clash_rejected():
    text = "universe 1 3\nint X1 in {1}\nset S lb {} ub {1}\ncon roots [X1] X1 T"
    with pytest.raises(InstanceError, match="X1 is an integer variable"):
        build_model(parse_text(text))
    text = "universe 1 3\nint X1 in {1}\nset S lb {} ub {1}\ncon alldifferent [S]"
    with pytest.raises(InstanceError, match="S is a set variable"):
        build_model(parse_text(text))


def test_solve_validates_against_oracle():
    text = (
        "universe 1 4\n"
        "int X1 in {1,2,3}\n"
        "int X2 in {1,2,3}\n"
        "int X3 in {1,2,3}\n"
        "con alldifferent [X1,X2,X3]\n"
        "con atmost [X1,X2,X3] {3} 1\n"
        "con table [X1,X2] {(1,2),(2,3),(3,1)}\n"
    )
    built = build_model(parse_text(text))
    res = built.model.solve()
    assert res.status == "sat"
    for spec in built.model.specs:
        assert oracle.holds(spec, res.ints, res.sets)


def test_build_in_bound_mode():
    built = build_model(parse_text(SAMPLE), mode=BC)
    assert built.model.fixpoint() in (True, False)


# ----------------------------------------------------------------------
# generators


def test_roots_instance_is_deterministic():
    a = roots_instance(5, 4, 2, 6, "s1")
    b = roots_instance(5, 4, 2, 6, "s1")
    assert a == b
    assert emit_instance(a) == emit_instance(b)
    assert a != roots_instance(5, 4, 2, 6, "s2")


def test_roots_instance_shape():
    inst = roots_instance(5, 4, 2, 6, "shape")
    assert len(inst.ints) == 5
    assert sum(4 - len(vals) for _, vals in inst.ints) == 6
    assert all(vals and set(vals) <= set(range(1, 5)) for _, vals in inst.ints)
    (_, s_lb, s_ub), (_, t_lb, t_ub) = inst.sets
    assert len(s_lb) + (5 - len(s_ub)) == 2
    assert len(t_lb) + (4 - len(t_ub)) == 2
    assert inst.cons[0].tag == "roots"


def test_roots_instance_free_t():
    inst = roots_instance(4, 6, 3, 2, "ft", free_t=True)
    assert inst.sets[1] == ("T", (), (1, 2, 3, 4, 5, 6))
    (_, s_lb, s_ub) = inst.sets[0]
    assert len(s_lb) + (4 - len(s_ub)) == 3


def test_roots_instance_validation():
    with pytest.raises(ValueError):
        roots_instance(0, 4, 0, 0, "x")
    with pytest.raises(ValueError):
        roots_instance(4, 4, 5, 0, "x")
    with pytest.raises(ValueError):
        roots_instance(4, 4, 2, 13, "x")


def test_model_b_instance_shape():
    inst = model_b_instance(nx=2, ny=3, nz=10, d=4, m1=5, t=6, m2=2, overlap=False, seed="g")
    assert len(inst.ints) == 10
    tables = [c for c in inst.cons if c.tag == "table"]
    uses = [c for c in inst.cons if c.tag == "uses_range"]
    assert len(tables) == 5 and len(uses) == 2
    for con in tables:
        assert len(con.values) == 4 * 4 - 6
        assert all(1 <= a <= 4 and 1 <= b <= 4 for a, b in con.values)
    # disjoint scopes cut consecutive blocks
    assert uses[0].xs == ("X1", "X2") and uses[0].ys == ("X3", "X4", "X5")
    assert uses[1].xs == ("X6", "X7") and uses[1].ys == ("X8", "X9", "X10")
    assert model_b_instance(2, 3, 10, 4, 5, 6, 2, False, "g") == inst


def test_model_b_instance_validation():
    with pytest.raises(ValueError):
        model_b_instance(3, 3, 10, 4, 5, 6, 2, overlap=False, seed="x")
    with pytest.raises(ValueError):
        model_b_instance(2, 3, 10, 4, 50, 6, 2, overlap=True, seed="x")
    with pytest.raises(ValueError):
        model_b_instance(2, 3, 10, 4, 5, 17, 2, overlap=True, seed="x")


def test_shopper_count():
    assert [shopper_count(s) for s in (1, 2, 3, 6, 10, 14)] == [4, 4, 8, 8, 12, 16]


def test_mystery_instance_shape():
    inst = mystery_instance(2, "m")
    # 8 visit variables, 4 shopper loads, 8 group counters
    assert len(inst.ints) == 20
    assert inst.ints[0] == ("V1_1", (1, 2, 3, 4))
    loads = [vals for name, vals in inst.ints if name.startswith("O")]
    assert loads == [(2,)] * 4
    tags = [c.tag for c in inst.cons]
    assert tags.count("alldifferent") == 6
    assert tags.count("gcc") == 1
    assert tags.count("among") == 8
    groups = {c.values for c in inst.cons if c.tag == "among"}
    assert len(groups) == 4
    assert sorted(v for g in groups for v in g) == [1, 2, 3, 4]
    assert mystery_instance(2, "m") == inst
    sums = mystery_instance(2, "m", among_via="sum")
    assert [c.tag for c in sums.cons].count("among_sum") == 8


def test_mystery_instance_validation():
    with pytest.raises(ValueError):
        mystery_instance(0, "x")
    with pytest.raises(ValueError):
        mystery_instance(2, "x", among_via="gcc")


# ----------------------------------------------------------------------
# experiments


def test_unknown_experiment():
    with pytest.raises(ValueError, match="unknown experiment"):
        run_experiment("no-such-study")
    assert set(EXPERIMENTS) == {
        "roots-miss-rate", "roots-miss-rate-freeT", "uses-pruning",
        "uses-solve", "mystery",
    }


def test_roots_miss_rate_rows():
    report = run_experiment("roots-miss-rate", seed=1, instances=2, budget=0.5)
    assert report.columns[:4] == ("n", "m", "k", "r")
    assert report.rows
    for n, m, k, r, cnt, pruned, missed, over, rate, seed in report.rows:
        assert cnt == 2 and over == 0 and 0 <= missed <= pruned
        assert rate == (missed / pruned if pruned else 0.0)
        assert seed == f"1:{n}:{m}:{k}:{r}"
    assert report.meta["combos"] >= 1
    assert "miss_rate" in report.meta
    assert report.meta.get("partial") == "budget-exceeded" or len(report.rows) == 669


def test_uses_pruning_rows():
    report = run_experiment("uses-pruning", cls="A", instances=1, max_depth=3, seed=2)
    assert [row[2] for row in report.rows] == [1, 2, 3]
    for cls, i, depth, rr, rd, seed in report.rows:
        assert cls == "A" and i == 0
        assert 0.0 <= rr <= 1.0 and 0.0 <= rd <= 1.0
        assert seed == "2:uses:A:0"
    assert "mean_range" in report.meta and "mean_decomp" in report.meta


def test_mystery_rows():
    report = run_experiment("mystery", size=2, instances=1, seed=3)
    assert len(report.rows) == 2
    assert {row[2] for row in report.rows} == {"alld-roots-roots", "alld-gcc-amongsum"}
    for size, i, name, status, fails, nodes, t, seed in report.rows:
        assert size == 2 and status == "sat" and fails >= 0 and nodes >= 1
    assert report.meta["shoppers"] == 4


def test_uses_solve_rows():
    report = run_experiment(
        "uses-solve", cls="C", t=40, instances=1, seed=4, time_limit=5.0, fail_limit=300
    )
    assert len(report.rows) == 2
    assert {row[3] for row in report.rows} == {"uses-range", "uses-decomp"}
    for row in report.rows:
        assert row[4] in ("sat", "unsat", "cutoff")


def test_write_tsv(tmp_path):
    report = run_experiment("mystery", size=1, instances=1, seed=5)
    path = tmp_path / "report.tsv"
    write_tsv(report, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# experiment=mystery"
    meta = [l for l in lines if l.startswith("#")]
    header = lines[len(meta)]
    assert header == "\t".join(report.columns)
    data = lines[len(meta) + 1 :]
    assert len(data) == len(report.rows)
    assert all(len(l.split("\t")) == len(report.columns) for l in data)


# ----------------------------------------------------------------------
# command line


def write(tmp_path, text, name="case.inst"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_cli_gen_matches_library(tmp_path, capsys):
    out = tmp_path / "r.inst"
    assert main(["gen", "roots", "4", "4", "2", "3", "--seed", "7", "--out", str(out)]) == 0
    assert out.read_text() == emit_instance(roots_instance(4, 4, 2, 3, "7"))
    assert main(["gen", "mystery", "1", "--seed", "5"]) == 0
    assert capsys.readouterr().out == emit_instance(mystery_instance(1, "5"))


def test_cli_gen_modelb_needs_layout():
    with pytest.raises(SystemExit) as err:
        main(["gen", "modelb", "2", "3", "10", "4", "5", "6", "2"])
    assert err.value.code == 3


def test_cli_solve_sat(tmp_path, capsys):
    path = write(
        tmp_path,
        "universe 1 3\nint X1 in {1,2}\nint X2 in {1,2}\ncon alldifferent [X1,X2]\n",
    )
    assert main(["solve", path]) == 0
    out = capsys.readouterr().out
    assert "X1 = " in out and "# nodes=" in out


def test_cli_solve_unsat(tmp_path, capsys):
    path = write(
        tmp_path,
        "universe 1 3\nint X1 in {1,2}\nint X2 in {1,2}\nint X3 in {1,2}\n"
        "con alldifferent [X1,X2,X3]\n",
    )
    assert main(["solve", path]) == 1
    assert "unsat" in capsys.readouterr().out


def test_cli_solve_cutoff(tmp_path, capsys):
    path = write(
        tmp_path,
        "universe 1 3\nint X1 in {1,2,3}\nint X2 in {1,2,3}\ncon alldifferent [X1,X2]\n",
    )
    assert main(["solve", path, "--time", "0"]) == 2
    assert "cutoff" in capsys.readouterr().out


def test_cli_check(tmp_path, capsys):
    path = write(
        tmp_path,
        "universe 1 3\nint X1 in {1,2,3}\nint X2 in {2}\ncon alldifferent [X1,X2]\n",
    )
    assert main(["check", path]) == 0
    assert "consistent" in capsys.readouterr().out


def test_cli_check_infeasible(tmp_path, capsys):
    path = write(
        tmp_path,
        "universe 1 3\nint X1 in {1,2}\nint X2 in {1,2}\nint X3 in {1,2}\n"
        "con alldifferent [X1,X2,X3]\n",
    )
    assert main(["check", path]) == 1
    assert "oracle: infeasible" in capsys.readouterr().out


def test_cli_parse_error(tmp_path, capsys):
    path = write(tmp_path, "universe 1 3\nbogus line\n")
    assert main(["solve", path]) == 3
    assert "line 2" in capsys.readouterr().err


def test_cli_exp_rejects_foreign_params():
    with pytest.raises(SystemExit) as err:
        main(["exp", "mystery", "--cls", "A"])
    assert err.value.code == 3


def test_cli_exp_writes_report(tmp_path, capsys):
    out = tmp_path / "mystery.tsv"
    rc = main(["exp", "mystery", "--size", "1", "--instances", "1", "--out", str(out)])
    assert rc == 0
    assert out.exists()
    assert "wrote" in capsys.readouterr().out
