import json

from dpopt.cli import main
from dpopt.sexpr import parse_design


def test_bench_list(capsys):
    assert main(["bench-list"]) == 0
    out = capsys.readouterr().out
    assert "fig1" in out and "mcm" in out and "non-authoritative" in out


def test_optimize_fig1_to_file(tmp_path):
    out = tmp_path / "opt.sexpr"
    report = tmp_path / "report.json"
    code = main(["optimize", "--bench", "fig1", "--out", str(out),
                 "--report", str(report)])
    assert code == 0
    d = parse_design(out.read_text())
    assert d.outputs[0][1].op.value == "var"
    data = json.loads(report.read_text())
    assert data["equivalence"]["status"] == "equivalent"
    assert data["cost"]["optimized"] == 0.0
    assert data["egraph"]["saturated"] is True
    assert "timings_ms" in data


def test_optimize_reports_are_deterministic(tmp_path):
    r1, r2 = tmp_path / "a.json", tmp_path / "b.json"
    args = ["optimize", "--bench", "muxarray_kernel", "--emit", "netlist",
            "--out", str(tmp_path / "n.txt")]
    assert main(args + ["--report", str(r1)]) == 0
    assert main(args + ["--report", str(r2)]) == 0
    a = json.loads(r1.read_text())
    b = json.loads(r2.read_text())
    a.pop("timings_ms")
    b.pop("timings_ms")
    assert a == b


def test_optimize_netlist_output(tmp_path):
    out = tmp_path / "n.txt"
    assert main(["optimize", "--bench", "muxarray_kernel", "--emit", "netlist",
                 "--out", str(out), "--check", "exhaustive"]) == 0
    text = out.read_text()
    assert text.startswith("input b[3:0]")
    assert "?" in text  # muxar expansion emits mux lines


def test_optimize_from_input_file(tmp_path):
    src = tmp_path / "d.sexpr"
    src.write_text("(design (inputs (x 4)) (outputs (y (+ 5 (var x 4) (var x 4)))))")
    out = tmp_path / "o.sexpr"
    assert main(["optimize", "--input", str(src), "--out", str(out)]) == 0
    assert "(design" in out.read_text()


def test_usage_errors_exit_1(tmp_path):
    assert main([]) == 1
    assert main(["optimize"]) == 1
    assert main(["optimize", "--bench", "fig1", "--rules", "bogus",
                 "--out", str(tmp_path / "x")]) == 1
    assert main(["optimize", "--bench", "nope", "--out", str(tmp_path / "x")]) == 1
    assert main(["optimize", "--bench", "fig1", "--drop-rules", "nonsense",
                 "--out", str(tmp_path / "x")]) == 1


def test_phase_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.sexpr"
    bad.write_text("(design (inputs (x 8)) (outputs (y (var z 8))))")
    assert main(["optimize", "--input", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert main(["optimize", "--input", str(tmp_path / "missing.sexpr"),
                 "--out", str(tmp_path / "o")]) == 2


def test_equivalence_failure_exits_3(tmp_path, monkeypatch):
    # substitute a pipeline that "optimizes" fig1 into the wrong design
    import dpopt.pipeline as pipeline
    from dpopt.ir import OpKind, make_design, node, var

    def broken(cfg, rules=None):
        d = pipeline._load_design(cfg)
        wrong = make_design(list(d.inputs),
                            [(d.outputs[0][0], node(OpKind.NOT, 8, (var("x", 8),)))])
        return pipeline.RunArtifacts(
            config=cfg, original=d, optimized=wrong,
            report=pipeline.RunReport(), original_cost=0, optimized_cost=0,
            selection=pipeline.Selection({}, []), solver_status=None,
            verdict=pipeline.equiv_exhaustive(d, wrong),
            fingerprint="x", timings_ms={})

    monkeypatch.setattr("dpopt.cli.run_pipeline", broken)
    code = main(["optimize", "--bench", "fig1", "--out", str(tmp_path / "o")])
    assert code == 3


def test_emit_subcommand(tmp_path):
    out = tmp_path / "n.txt"
    assert main(["emit", "--bench", "adpcm_recon", "--emit", "netlist",
                 "--out", str(out)]) == 0
    assert out.read_text().startswith("input step[15:0]")
    assert main(["emit", "--bench", "fig1", "--out", str(tmp_path / "s.sexpr")]) == 0


def test_check_rules_subset_quickly(capsys, tmp_path):
    # full-width run is the acceptance suite's job; smoke the CLI at width 2
    report = tmp_path / "rules.json"
    code = main(["check-rules", "--max-width", "2", "--bit-budget", "8",
                 "--report", str(report)])
    assert code == 0
    out = capsys.readouterr().out
    assert "commutativity-add" in out
    data = json.loads(report.read_text())
    assert len(data) == 31


def test_sweep_cli(tmp_path):
    out = tmp_path / "sweep.json"
    code = main(["sweep", "--bench", "fir4", "--range", "4:16:4",
                 "--check", "none", "--out", str(out)])
    assert code == 0
    rows = json.loads(out.read_text())
    assert [r["param"] for r in rows] == [4, 8, 12, 16]
    assert all("fingerprint" in r for r in rows)


def test_cost_config_flag(tmp_path):
    cfg = tmp_path / "cost.cfg"
    cfg.write_text("fa_row_gate = 8\n")
    report = tmp_path / "r.json"
    assert main(["optimize", "--bench", "fig1", "--cost-config", str(cfg),
                 "--out", str(tmp_path / "o"), "--report", str(report)]) == 0
    data = json.loads(report.read_text())
    assert data["config"]["cost_config"]["fa_row_gate"] == "8"


def test_optimize_json_emit(tmp_path):
    out = tmp_path / "run.json"
    assert main(["optimize", "--bench", "fig1", "--emit", "json",
                 "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["fingerprint"]
    assert data["optimized_sexpr"].startswith("(design")


def test_check_rules_failure_exits_nonzero(monkeypatch, tmp_path):
    import dpopt.cli as cli
    from dpopt.rules import RewriteRule

    base = next(r for r in cli.rules_mod.rule_table()
                if r.name == "distribute-mult-over-add")
    broken = RewriteRule(name="distribute-broken", klass=base.klass, row=None,
                         lhs=base.lhs, rhs=base.rhs, conjuncts=(),
                         free_widths=base.free_widths)
    monkeypatch.setattr(cli.rules_mod, "rule_table", lambda: [broken])
    code = main(["check-rules", "--max-width", "3", "--bit-budget", "8"])
    assert code == 2
