import dataclasses
import json
import math
from pathlib import Path

import numpy as np
import pytest

from fixvi import iterate as it
from fixvi.harness import cli, runner
from fixvi.harness import scenario as scn
from fixvi.params import Schedule

from conftest import CANONICAL_LIMIT

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
FIXTURES = sorted(SCENARIOS.glob("*.scn"))

MINIMAL = """
run minimal {
  space {
    dim = 2
  }
  problem {
    kind = canonical
  }
  gains {
    mu = 1.0
    gamma = %s
  }
  schedule alpha {
    family = power
  }
  schedule beta {
    family = constant
    b = 0.5
  }
  algorithm {
    x0 = [5.0, 5.0]
    max_iter = %d
  }
}
"""


def minimal(gamma="1.0", max_iter=100_000):
    return MINIMAL % (gamma, max_iter)


def test_parse_minimal_echoes_tau():
    sf = scn.parse_text(minimal())
    r = sf["minimal"]
    assert r.derived["tau"] == 0.5 and r.derived["gamma_bound"] == pytest.approx(5.0)
    assert r.blocks["output"]["cadence"] == 1 and r.blocks["certify"]["count"] == 1000


def test_missing_gains_block_named():
    text = minimal().replace("  gains {\n    mu = 1.0\n    gamma = 1.0\n  }\n", "")
    with pytest.raises(scn.ScenarioError) as ei:
        scn.parse_text(text)
    assert any("'gains' block" in e for e in ei.value.errors)


def test_gamma_on_boundary_rejected():
    with pytest.raises(scn.ScenarioError) as ei:
        scn.parse_text(minimal(gamma=repr(0.5 / 0.1)))
    assert any("strict inequality required" in e for e in ei.value.errors)
    assert scn.parse_text(minimal(gamma=repr(0.5 / 0.1)), override=True)


def test_all_errors_collected_with_lines():
    text = minimal().replace("    dim = 2\n", "    dim = 2\n    colour = red\n    dim = 3\n")
    text = text.replace("family = power", "family = power\n    a = [1, 2")
    text += "stray = 1\n"
    with pytest.raises(scn.ScenarioError) as ei:
        scn.parse_text(text)
    errs = ei.value.errors
    assert any("line 5: unknown key 'colour'" in e for e in errs)
    assert any("line 6: duplicate key 'dim'" in e for e in errs)
    assert any("cannot read value" in e for e in errs)
    assert any("outside any block" in e for e in errs)
    with pytest.raises(scn.ScenarioError, match="never closed"):
        scn.parse_text("run x {\n  space {\n    dim = 2\n")
    with pytest.raises(scn.ScenarioError, match="no runs"):
        scn.parse_text("# nothing\n")


def test_unknown_block_and_bad_choice():
    text = minimal().replace("  algorithm {", "  plotting {\n    dpi = 3\n  }\n  algorithm {")
    text = text.replace("x0 = [5.0, 5.0]", "x0 = [5.0, 5.0]\n    mode = parallel")
    with pytest.raises(scn.ScenarioError) as ei:
        scn.parse_text(text)
    assert any("unknown block 'plotting'" in e for e in ei.value.errors)
    assert any("mode" in e and "parallel" in e for e in ei.value.errors)


@pytest.mark.parametrize("path", FIXTURES, ids=lambda p: p.name)
def test_round_trip(path):
    a = scn.parse_scenario(path, override=True)
    b = scn.parse_text(scn.serialize(a), override=True)
    assert a == b
    assert scn.serialize(b) == scn.serialize(a)


def test_auto_gains_deterministic():
    sf = scn.parse_scenario(SCENARIOS / "generated.scn")
    for r in sf.runs:
        g1 = scn.build_config(r).gains
        g2 = scn.build_config(r).gains
        assert g1 == g2
        assert g1.mu == pytest.approx(0.5 * g1.mu_bound)
        assert g1.gamma == pytest.approx(0.5 * g1.tau / g1.beta)


@pytest.mark.parametrize("name,code", [("explicit.scn", 0), ("yamada.scn", 0), ("generated.scn", 0),
                                       ("violated.scn", 2)])
def test_cli_exit_codes(name, code, tmp_path, capsys):
    assert cli.main(["run", "--scenario", str(SCENARIOS / name), "--out", str(tmp_path)]) == code


def test_cli_canonical_is_honest(tmp_path, capsys):
    # 1e5 steps of the harmonic schedule leave a residual near 2e-5 > 1e-6: not converged, exit 1
    code = cli.main(["run", "--scenario", str(SCENARIOS / "canonical.scn"), "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 1 and "max_iter" in out
    s = json.loads((tmp_path / "canonical-synchronal" / "summary.json").read_text())
    assert s["status"] == "max_iter" and s["dist_to_oracle"] <= 1e-4 and s["exit_code"] == 1


def test_cli_override_runs_and_reports(tmp_path, capsys):
    code = cli.main(["run", "--scenario", str(SCENARIOS / "violated.scn"), "--out", str(tmp_path),
                     "--override-validation", "--max-iter", "2000"])
    out = capsys.readouterr().out
    assert code == 1 and "violated:" in out and "gamma_range" in out
    s = json.loads((tmp_path / "too-much-gamma" / "summary.json").read_text())
    assert s["override_used"] and s["violations"] and s["exit_code"] == 1


def test_cli_parse_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.scn"
    bad.write_text("run x {\n  space {\n    dimm = 2\n  }\n}\n")
    assert cli.main(["certify", "--scenario", str(bad)]) == 2
    assert "unknown key 'dimm'" in capsys.readouterr().err
    assert cli.main(["run", "--scenario", str(tmp_path / "missing.scn")]) == 2


def test_cli_certify_and_oracle(capsys):
    assert cli.main(["certify", "--scenario", str(SCENARIOS / "canonical.scn")]) == 0
    out = capsys.readouterr().out
    assert "all certificates pass" in out and "step_contraction" in out
    assert cli.main(["oracle", "--scenario", str(SCENARIOS / "canonical.scn")]) == 0
    lines = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    np.testing.assert_allclose(lines[0]["x"], CANONICAL_LIMIT, atol=1e-15)
    assert cli.main(["oracle", "--scenario", str(SCENARIOS / "generated.scn")]) == 1  # l_3 run has none


def test_cli_compare(capsys):
    assert cli.main(["compare", "--scenario", str(SCENARIOS / "canonical.scn"), "--max-iter", "20000"]) == 1
    out = capsys.readouterr().out
    d = float(out.strip().splitlines()[-1].split("=")[1])
    assert d <= 2e-4


def test_summary_schema(tmp_path):
    sf = scn.parse_scenario(SCENARIOS / "explicit.scn")
    summary, _ = runner.run_scenario(sf.runs[0], tmp_path)
    d = json.loads((tmp_path / "explicit-plane" / "summary.json").read_text())
    assert d["schema_version"] == runner.SCHEMA_VERSION
    for key in ("status", "iterations", "final", "dist_to_oracle", "gains", "schedule_flags", "certificates",
                "wall_clock", "violations", "override_used", "exit_code", "oracle"):
        assert key in d and d[key] is not None, key
    assert d["gains"]["tau"] == pytest.approx(0.5) and d["schedule_flags"]["K1"] == "holds"
    assert d["final"]["fixpoint_residual"] <= 1e-3 and summary.exit_code == 0


def test_summary_populated_on_divergence(canonical_cfg, tmp_path):
    g = dataclasses.replace(canonical_cfg.gains, mu=100.0)
    cfg = canonical_cfg.replace(gains=g, alpha=Schedule.constant(0.9), override=True,
                                stopping=it.Stopping(5000, 1e-300, 1e-300))
    summary, trace = runner.run_config(cfg, tmp_path)
    assert summary.status == "diverged" and summary.exit_code == 1
    d = json.loads((tmp_path / "summary.json").read_text())
    assert d["status"] == "diverged" and d["final"]["x"]
    rows = (tmp_path / "plotdata.csv").read_text().splitlines()
    assert rows[0] == ",".join(runner.PLOT_COLUMNS)
    assert all(r.endswith(",diverged") for r in rows[1:])
    last = rows[-1].split(",")
    assert all(v == "" or math.isfinite(float(v)) for v in last[:-1])


def test_plotdata_cadence(canonical_cfg, tmp_path):
    cfg = canonical_cfg.replace(cadence=10, stopping=it.Stopping(20_000, 1e-3, 1e-3))
    tr = it.run(cfg)
    assert tr.converged
    runner.emit_plotdata(tr, tmp_path / "p.csv")
    rows = (tmp_path / "p.csv").read_text().splitlines()[1:]
    assert len(rows) == math.ceil(tr.iterations / 10) + 1
    assert float(rows[-1].split(",")[1]) <= 1e-3 and rows[-1].endswith(",converged")


def test_reproducible_bytes(tmp_path):
    for sub in ("a", "b"):
        cli.main(["run", "--scenario", str(SCENARIOS / "generated.scn"), "--out", str(tmp_path / sub)])
    for run in ("hilbert-8", "lp3-4"):
        for f in ("trace.csv", "plotdata.csv"):
            assert (tmp_path / "a" / run / f).read_bytes() == (tmp_path / "b" / run / f).read_bytes()


def test_compare_api(canonical_cfg):
    one = runner.compare({"only": canonical_cfg.replace(stopping=it.Stopping(1000))})
    assert len(one["rows"]) == 1 and one["distances"] == {}
    other = scn.build_config(scn.parse_scenario(SCENARIOS / "generated.scn")["hilbert-8"])
    with pytest.raises(ValueError, match="share one problem"):
        runner.compare({"a": canonical_cfg, "b": other})
    with pytest.raises(ValueError):
        runner.compare({})


def test_compare_yamada_baseline(canonical_cfg):
    base = canonical_cfg.replace(gains=dataclasses.replace(canonical_cfg.gains, mu=0.5),
                                 alpha=Schedule.power(0.5), stopping=it.Stopping(3000, 1e-300, 1e-300))
    cfg = it.preset("yamada")(base)
    ref = it.yamada_reference(cfg.problem.operators[0], cfg.problem.G, 0.5, cfg.alpha.terms(0, 3000), base.x0)
    table = runner.compare({"preset": cfg, "hand": ref})
    assert table["distances"][("preset", "hand")] <= 1e-12
