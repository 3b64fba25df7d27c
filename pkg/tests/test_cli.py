import json

import pytest

from moonflower.cli import RunManifest, default_seed, main
from moonflower.setfam import gen_lower_bound_family, write_family
from moonflower.sparsify import Code, Sparsifier, write_code


@pytest.fixture
def ones_code(tmp_path):
    path = tmp_path / "ones.code"
    write_code(Code(1024, ((1 << 1024) - 1,)), path)
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def test_mf_lower_bound_family(tmp_path, capsys):
    path = tmp_path / "lb.fam"
    write_family(gen_lower_bound_family(3, 3), path)
    code, out = run(capsys, "--format", "json", "mf", path)
    assert code == 0
    data = json.loads(out.out)
    assert data["mf"] == 2 and data["exact"]
    assert data["manifest"]["inputs"][str(path)]


def test_mf_singletons(tmp_path, capsys):
    path = tmp_path / "s.fam"
    path.write_text("n 4\n0\n1\n2\n3\n")
    code, out = run(capsys, "mf", path)
    assert code == 0 and "MF            4" in out.out


def test_mf_malformed(tmp_path, capsys):
    path = tmp_path / "bad.fam"
    path.write_text("n 4\n0 1\n2 z\n")
    code, out = run(capsys, "mf", path)
    assert code == 2 and "line 3" in out.err


def test_mf_budget(tmp_path, capsys):
    path = tmp_path / "lb.fam"
    write_family(gen_lower_bound_family(5, 4), path)
    code, out = run(capsys, "mf", path, "--budget", "2")
    assert code == 3 and "lower bound" in out.out


def test_sparsify_unit_vectors(tmp_path, capsys):
    path = tmp_path / "unit.code"
    write_code(Code(4096, tuple(1 << (512 * i) for i in range(8))), path)
    out_path = tmp_path / "unit.sp.json"
    code, out = run(capsys, "--format", "json", "sparsify", path, "--epsilon", "0.2",
                    "--out", out_path)
    assert code == 0
    data = json.loads(out.out)
    assert data["T"] == 8 and data["max_rel_err"] == 0
    manifest = json.loads((tmp_path / "unit.sp.json.manifest.json").read_text())
    assert RunManifest.from_json(manifest).to_json() == manifest
    assert str(out_path) in manifest["outputs"]


def test_sparsify_then_verify(tmp_path, capsys, ones_code):
    out_path = tmp_path / "ones.sp.json"
    code, out = run(capsys, "sparsify", ones_code, "--epsilon", "0.25", "--retries", "5",
                    "--out", out_path)
    assert code == 0
    code, out = run(capsys, "verify", ones_code, out_path, "--epsilon", "0.25")
    assert code == 0 and "pass" in out.out


def test_sparsify_epsilon_range(capsys, ones_code):
    code, out = run(capsys, "sparsify", ones_code, "--epsilon", "0.5")
    assert code == 2


def test_sparsify_retries_exhausted(tmp_path, capsys, monkeypatch):
    import moonflower.cli as cli
    from moonflower.sparsify import BuildFailed, BuildLog, build_parameters, SparsifierConfig

    def failing(code, cfg, k=None):
        log = BuildLog(build_parameters(code.n, 2, cfg), "nrd", attempts=[{}])
        from moonflower.sparsify import verify_sparsifier
        sp = Sparsifier(code.n, {})
        raise BuildFailed("nope", sp, verify_sparsifier(code, sp, cfg.epsilon), log)

    monkeypatch.setattr(cli, "build_sparsifier", failing)
    path = tmp_path / "c.code"
    write_code(Code(4, (3,)), path)
    out_path = tmp_path / "best.json"
    code, out = run(capsys, "sparsify", path, "--out", out_path)
    assert code == 4 and out_path.exists()


def test_verify_identity_and_empty(tmp_path, capsys, ones_code):
    ident = tmp_path / "id.json"
    ident.write_text(json.dumps(Sparsifier.identity(1024).to_json()))
    assert run(capsys, "verify", ones_code, ident)[0] == 0
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps(Sparsifier(1024, {}).to_json()))
    assert run(capsys, "verify", ones_code, empty)[0] == 1
    small = tmp_path / "small.json"
    small.write_text(json.dumps(Sparsifier(8, {}).to_json()))
    assert run(capsys, "verify", ones_code, small)[0] == 2


def test_lowerbound(tmp_path, capsys):
    prefix = tmp_path / "chain"
    code, out = run(capsys, "--format", "json", "lowerbound", "--n", 8, "--k", 2,
                    "--epsilon", 0.5, "--out", prefix)
    assert code == 0
    data = json.loads(out.out)
    assert data["codewords"] == 4 and data["spec"]["s"] == 2
    assert (tmp_path / "chain.code").exists() and (tmp_path / "chain.spec.json").exists()


def test_lowerbound_against(tmp_path, capsys):
    ident = tmp_path / "id.json"
    ident.write_text(json.dumps(Sparsifier.identity(8).to_json()))
    code, out = run(capsys, "lowerbound", "--n", 8, "--k", 2, "--epsilon", 0.5,
                    "--against", ident)
    assert code == 0 and "consistent" in out.out
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps(Sparsifier(8, {}).to_json()))
    code, out = run(capsys, "--format", "json", "lowerbound", "--n", 8, "--k", 2,
                    "--epsilon", 0.5, "--against", empty)
    data = json.loads(out.out)
    assert code == 1 and data["certify"]["verdict"] == "invalid"
    assert data["certify"]["witness"]["weights"] == [1, 2]


def test_lowerbound_divisibility(capsys):
    assert run(capsys, "lowerbound", "--n", 9, "--k", 2, "--epsilon", 0.5)[0] == 2


def test_suite_chernoff(tmp_path, capsys):
    code, out = run(capsys, "suite", "--suite", "chernoff", "--trials", 20000,
                    "--out", tmp_path / "rep")
    assert code == 0
    assert (tmp_path / "rep" / "summary.csv").read_text().startswith("criterion,")
    summary = json.loads((tmp_path / "rep" / "summary.json").read_text())
    assert summary["passed"]


def test_suite_duality(capsys):
    code, out = run(capsys, "--format", "json", "suite", "--suite", "duality", "--trials", 40)
    data = json.loads(out.out)
    assert code == 0
    assert data["checks"][0]["summary"]["exact_mismatch"] == 0


def test_suite_extremal(capsys):
    code, out = run(capsys, "suite", "--suite", "extremal", "--trials", 30)
    assert code == 0 and "3/3 checks passed" in out.out


def test_unknown_suite(capsys):
    assert run(capsys, "suite", "--suite", "nope")[0] == 2


def test_seed_env(monkeypatch):
    monkeypatch.setenv("MOONFLOWER_SEED", "17")
    assert default_seed() == 17
    monkeypatch.delenv("MOONFLOWER_SEED")
    assert default_seed() == 20240601


def test_gen_commands(tmp_path, capsys):
    assert run(capsys, "gen", "lower-bound", "--k", 3, "--w", 2, "--out", tmp_path / "a")[0] == 0
    assert (tmp_path / "a").read_text().startswith("n 3\n")
    assert run(capsys, "gen", "chain", "--n", 8, "--k", 2, "--out", tmp_path / "b")[0] == 0
    assert run(capsys, "gen", "random-code", "--n", 32, "--out", tmp_path / "c")[0] == 0
