import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsparc import __version__
from gsparc.cli import main
from gsparc.config import (
    ExperimentSpec,
    normalize,
    parse_spec,
    read_records_csv,
    records_csv,
    run_experiment,
    schema_text,
    serialize,
    simulate,
    sweep_points,
)
from gsparc.errors import ConfigError

MINIMAL = {"dict": "mub", "n": 6, "scheme": "sse", "K": 6, "M": 4, "decoder": "pmad", "T": 16}
DOCS = Path(__file__).resolve().parents[1] / "docs"


def quick(**kw):
    doc = {"dict": "mub", "n": 4, "K": 2, "sweep": [0.0, 2.0], "max_trials": 60,
           "max_errors": 20, "seed": 3}
    doc.update(kw)
    return doc


# ---------------------------------------------------------------- parsing

def test_minimal_spec_gives_128_68_code():
    spec = parse_spec(json.dumps(MINIMAL))
    manifest = run_experiment(spec, dry_run=True)
    assert manifest["code"]["label"] == "(128,68)"
    assert spec["max_errors"] == 200 and spec["offset"] is False


@pytest.mark.parametrize("bad,path", [
    ({"K": 0}, "K"),
    ({"dict": "random"}, "dict"),
    ({"sweep": {"start": 0, "stop": 1}}, "sweep"),
    ({"unknown": 1}, "<root>"),
    ({"seed": -1}, "seed"),
])
def test_schema_errors_name_field(bad, path):
    doc = dict(MINIMAL, **bad)
    with pytest.raises(ConfigError, match=f"^{path}"):
        parse_spec(doc)


@pytest.mark.parametrize("bad", [
    {"M": 3},
    {"decoder": "mad", "T": 4},
    {"offset": True, "M": 2},
    {"K": 5000},
    {"users": 2},
    {"scheme": "sfe", "mode": "mac"},
    {"sweep": {"start": 2, "stop": 1, "step": 1}},
])
def test_semantic_errors(bad):
    with pytest.raises(ConfigError):
        parse_spec(dict(MINIMAL, **bad))


def test_invalid_json():
    with pytest.raises(ConfigError, match="invalid JSON"):
        parse_spec("{nope")


def test_sweep_expansion():
    assert sweep_points({"start": 0, "stop": 1, "step": 0.25}) == [0, 0.25, 0.5, 0.75, 1.0]
    assert sweep_points({"start": 0, "stop": 0.95, "step": 0.5}) == [0, 0.5]
    assert sweep_points([3, 1]) == [3.0, 1.0]


valid_docs = st.fixed_dictionaries(
    {"dict": st.just("mub"), "n": st.integers(2, 6), "K": st.integers(1, 3)},
    optional={
        "scheme": st.sampled_from(["sse", "sfe"]),
        "M": st.sampled_from([1, 2, 4, 8]),
        "decoder": st.sampled_from(["mad", "omp"]),
        "sweep": st.one_of(
            st.lists(st.floats(-5, 10, allow_nan=False), min_size=1, max_size=4),
            st.builds(lambda a, n, h: {"start": a, "stop": a + n * h, "step": h},
                      st.integers(-3, 3), st.integers(0, 4), st.sampled_from([0.5, 1]))),
        "max_trials": st.integers(1, 10**6),
        "max_errors": st.one_of(st.none(), st.integers(1, 1000)),
        "seed": st.integers(0, 2**64 - 1),
        "out": st.text(min_size=1, max_size=8),
    },
)


@settings(max_examples=150, deadline=None)
@given(valid_docs)
def test_serialize_parse_roundtrip(doc):
    spec = parse_spec(doc)
    assert json.loads(serialize(spec)) == normalize(doc)
    assert parse_spec(serialize(spec)).doc == spec.doc


@settings(max_examples=50, deadline=None)
@given(valid_docs, st.randoms())
def test_digest_stable_under_reordering(doc, rnd):
    items = list(doc.items())
    rnd.shuffle(items)
    assert parse_spec(dict(items)).digest == parse_spec(doc).digest


def test_digest_changes_with_spec():
    base = parse_spec(quick())
    assert parse_spec(quick(seed=4)).digest != base.digest
    assert parse_spec(quick(max_trials=61)).digest != base.digest
    # filling a default explicitly is the same spec
    assert parse_spec(quick(scheme="sse")).digest == base.digest


def test_published_schema_in_sync():
    assert (DOCS / "experiment-schema.json").read_text() == schema_text()


# ---------------------------------------------------------------- running

def test_run_experiment_writes_artifacts(tmp_path):
    spec = parse_spec(quick())
    manifest = run_experiment(spec, tmp_path / "run")
    for ext in ("csv", "json", "manifest.json", "dat", "gp"):
        assert (tmp_path / f"run.{ext}").exists()
    assert manifest["digest"] == spec.digest
    assert manifest["version"] == __version__
    assert manifest["wall_time_s"] >= 0
    recs = read_records_csv((tmp_path / "run.csv").read_text())
    assert [r.ebn0_db for r in recs] == [0.0, 2.0]
    assert all(r.config_digest == spec.digest for r in recs)
    data = json.loads((tmp_path / "run.json").read_text())
    assert [d["errors"] if "errors" in d else d["block_errors"] for d in data] == \
        [r.block_errors for r in recs]


def test_rerun_byte_identical(tmp_path):
    spec = parse_spec(quick(decoder="pmad", T=3))
    run_experiment(spec, tmp_path / "a")
    run_experiment(spec, tmp_path / "b", threads=3)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.dat").read_bytes() == (tmp_path / "b.dat").read_bytes()


def test_csv_header_versioned():
    recs = simulate(parse_spec(quick()))
    text = records_csv(recs)
    assert text.startswith("# gsparc-sim-records/1\nscheme,dict,N,L,K,M,decoder,T,ebn0_db,"
                           "trials,errors,bler,seed")
    with pytest.raises(ValueError):
        read_records_csv(text.replace("records/1", "records/0"))


def test_missing_output_dir(tmp_path):
    with pytest.raises(OSError, match="does not exist"):
        run_experiment(parse_spec(quick()), tmp_path / "nope" / "run")


def test_multiuser_spec(tmp_path):
    doc = {"dict": "mub", "n": 4, "K": 4, "mode": "interference", "users": 2,
           "gains": [[1, [0, 1]], [0, 1]], "sweep": [float(10)], "max_trials": 30,
           "seed": 1}
    recs = simulate(parse_spec(doc))
    assert recs[0].mode == "interference" and len(recs[0].per_user_errors) == 2


def test_experiment_spec_multiuser_assignment():
    spec = parse_spec({"dict": "mub", "n": 4, "K": 3, "mode": "mac",
                       "assignment": [[2], [0, 1]], "user_M": [2, 4]})
    mu = spec.multiuser(3)
    assert mu.assignment == ((2,), (0, 1)) and mu.M == (2, 4)
    assert isinstance(spec, ExperimentSpec)


# ---------------------------------------------------------------- CLI

def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_cli_dict(capsys):
    code, out, _ = run_cli(capsys, "dict", "gold", "5")
    d = json.loads(out)
    assert code == 0 and d["N"] == 31 and d["L"] == 1024
    assert d["mu"] == pytest.approx(9 / 31)


def test_cli_encode_decode_bits_roundtrip(capsys):
    args = ["--dict", "mub", "--n", "4", "--K", "3"]
    code, out, _ = run_cli(capsys, "encode", *args, "1abcdef")
    enc = json.loads(out)
    assert code == 0 and enc["n_bits"] == 25
    code, out, _ = run_cli(capsys, "decode-bits", *args,
                           "--support", ",".join(map(str, enc["support"])),
                           "--symbols", ",".join(map(str, enc["symbol_indices"])))
    assert code == 0 and json.loads(out)["message"] == enc["message"]


def test_cli_decode_noiseless(capsys, tmp_path):
    args = ["--dict", "mub", "--n", "4", "--K", "2"]
    _, out, _ = run_cli(capsys, "encode", *args, "3c5a")
    enc = json.loads(out)
    obs = tmp_path / "y.json"
    obs.write_text(json.dumps({"y_real": enc["s_real"], "y_imag": enc["s_imag"]}))
    code, out, _ = run_cli(capsys, "decode", *args, "--decoder", "pmad", "--T", "4", str(obs))
    assert code == 0 and json.loads(out)["message"] == enc["message"]


def test_cli_bler_and_dry_run(capsys, tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(quick()))
    code, out, _ = run_cli(capsys, "bler", "--spec", str(spec), "--dry-run")
    assert code == 0 and json.loads(out)["dry_run"] is True
    assert not list(tmp_path.glob("*.csv"))
    code, out, _ = run_cli(capsys, "bler", "--spec", str(spec), "--seed", "11",
                           "--out", str(tmp_path / "r"))
    assert code == 0
    assert json.loads(out)["spec"]["seed"] == 11
    assert (tmp_path / "r.csv").exists()


def test_cli_print_spec(capsys):
    code, out, _ = run_cli(capsys, "mac", "--dict", "gold", "--n", "7", "--K", "6", "--M", "2",
                           "--users", "6", "--print-spec")
    assert code == 0
    doc = json.loads(out)
    assert doc["mode"] == "mac" and doc["users"] == 6


def test_cli_exit_codes(capsys, tmp_path):
    assert run_cli(capsys, "bler", "--dict", "mub", "--n", "6", "--K", "0")[0] == 2
    assert run_cli(capsys, "dict", "gold", "4")[0] == 2
    assert run_cli(capsys, "bogus")[0] == 2
    assert run_cli(capsys, "bler", "--spec", str(tmp_path / "missing.json"))[0] == 2
    code, _, err = run_cli(capsys, "bler", "--dict", "mub", "--n", "4", "--K", "2",
                           "--max-trials", "5", "--out", str(tmp_path / "no" / "x"))
    assert code == 3 and "does not exist" in err


def test_cli_guarantee(capsys):
    code, out, _ = run_cli(capsys, "guarantee", "--dict", "mub", "--n", "6", "--K", "4")
    assert code == 0 and json.loads(out)["guaranteed"] is True
    code, out, _ = run_cli(capsys, "guarantee", "--mu", "0.125", "--gamma", "0", "--K", "5")
    assert code == 0 and json.loads(out)["guaranteed"] is False
    assert run_cli(capsys, "guarantee", "--mu", "2", "--gamma", "0", "--K", "1")[0] == 2


def test_cli_schema(capsys):
    code, out, _ = run_cli(capsys, "schema")
    assert code == 0 and out == schema_text()
