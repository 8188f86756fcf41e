import csv
import io
import json
from importlib import resources

import jsonschema
import numpy as np
import pytest

from aca import synth
from aca.cli import main
from aca.signal import write_wav


@pytest.fixture(scope="module")
def schema():
    return json.loads(resources.files("aca").joinpath("schema/report.schema.json").read_text())


@pytest.fixture(scope="module")
def audio(tmp_path_factory):
    d = tmp_path_factory.mktemp("audio")
    write_wav(d / "cmaj.wav", synth.cadence(0, "major"))
    write_wav(d / "clicks.wav", synth.click_track(120, 8.0, sr=22050)[0])
    write_wav(d / "tone.wav", synth.sawtooth(220.0, 1.0, sr=22050))
    (d / "broken.wav").write_bytes(b"RIFF\x00\x00\x00\x00WAVEjunk")
    lib = d / "lib"
    lib.mkdir()
    for i in range(3):
        write_wav(lib / f"track{i}.wav", synth.noise_burst(5.0, sr=44100, seed=i, bursts=6))
    return d


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_key_report(capsys, audio, schema):
    code, out, _ = run(capsys, "key", audio / "cmaj.wav")
    assert code == 0
    rep = json.loads(out)
    jsonschema.validate(rep, schema)
    assert (rep["result"]["tonic"], rep["result"]["mode"]) == ("C", "major")
    assert rep["config"]["block"] == 4096 and rep["config"]["profile"] == "krumhansl"


def test_tempo_report(capsys, audio, schema):
    code, out, _ = run(capsys, "tempo", audio / "clicks.wav")
    rep = json.loads(out)
    jsonschema.validate(rep, schema)
    assert code == 0 and abs(rep["result"]["bpm"] - 120) <= 1
    assert rep["config"]["block"] == 1024


@pytest.mark.parametrize("argv", [
    ["features"], ["chroma"], ["f0"], ["f0", "--method", "hps"], ["nmf", "--rank", "2", "--iterations", "20"],
    ["novelty"], ["onsets"], ["beats"], ["tempo", "--method", "comb"], ["tempo", "--method", "ioi"],
])
def test_reports_validate(capsys, audio, schema, argv):
    target = audio / ("clicks.wav" if argv[0] in ("novelty", "onsets", "beats", "tempo") else "tone.wav")
    code, out, _ = run(capsys, *argv, target)
    assert code == 0
    jsonschema.validate(json.loads(out), schema)


def test_structure_report(capsys, audio, schema):
    code, out, _ = run(capsys, "structure", audio / "cmaj.wav", "--kernel", "2", "--min-lag", "1.0")
    assert code == 0
    jsonschema.validate(json.loads(out), schema)


def test_unknown_subcommand(capsys):
    assert run(capsys, "bogus")[0] == 2


def test_bad_block_is_usage_error(capsys, audio):
    assert run(capsys, "key", audio / "cmaj.wav", "--block", "1000")[0] == 2


def test_corrupt_input_exit_1(capsys, audio, schema):
    code, _, err = run(capsys, "key", audio / "broken.wav")
    assert code == 1
    payload = json.loads(err)
    jsonschema.validate(payload["error"], schema["$defs"]["error"])
    assert payload["command"] == "key"


def test_deterministic_bytes(capsys, audio):
    a = run(capsys, "nmf", audio / "tone.wav", "--rank", "2", "--iterations", "30", "--seed", "7", "--no-timing")[1]
    b = run(capsys, "nmf", audio / "tone.wav", "--rank", "2", "--iterations", "30", "--seed", "7", "--no-timing")[1]
    assert a == b and json.loads(a)["config"]["seed"] == 7
    assert json.loads(a)["duration_s"] is None


def test_config_precedence(capsys, audio, tmp_path, monkeypatch):
    cfg = tmp_path / "aca.toml"
    cfg.write_text('profile = "temperley"\n[tonal]\nblock = 8192\nhop = 4096\n[rhythm]\nbpm_max = 150\n')
    monkeypatch.setenv("ACA_CONFIG", str(cfg))
    rep = json.loads(run(capsys, "key", audio / "cmaj.wav")[1])
    assert rep["config"]["profile"] == "temperley" and rep["config"]["block"] == 8192
    rep = json.loads(run(capsys, "key", audio / "cmaj.wav", "--block", "2048", "--hop", "1024",
                         "--profile", "diatonic")[1])
    assert rep["config"]["block"] == 2048 and rep["config"]["profile"] == "diatonic"
    rep = json.loads(run(capsys, "tempo", audio / "clicks.wav")[1])
    assert rep["config"]["bpm_max"] == 150 and rep["config"]["block"] == 1024


def test_config_unknown_key(capsys, audio, tmp_path, monkeypatch):
    cfg = tmp_path / "aca.toml"
    cfg.write_text("colour = 3\n")
    monkeypatch.setenv("ACA_CONFIG", str(cfg))
    assert run(capsys, "key", audio / "cmaj.wav")[0] == 2


def test_csv_outputs(capsys, audio, tmp_path):
    code, out, _ = run(capsys, "chroma", audio / "cmaj.wav", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["time", "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"]
    assert len(rows[1]) == 13
    out = run(capsys, "structure", audio / "cmaj.wav", "--format", "csv", "--downsample", "2")[1]
    rows = list(csv.reader(io.StringIO(out)))
    assert len(rows) == len(rows[0])
    prefix = tmp_path / "fac"
    code, out, _ = run(capsys, "nmf", audio / "tone.wav", "--rank", "2", "--iterations", "10",
                       "--format", "csv", "-o", prefix)
    assert code == 0
    W = np.loadtxt(f"{prefix}_W.csv", delimiter=",")
    H = np.loadtxt(f"{prefix}_H.csv", delimiter=",")
    assert W.shape[1] == 2 and H.shape[0] == 2


def test_fingerprint_build_and_match(capsys, audio, tmp_path, schema):
    db = tmp_path / "lib.db"
    code, out, _ = run(capsys, "fingerprint", "build", audio / "lib", "-o", db)
    assert code == 0 and len(json.loads(out)["result"]["tracks"]) == 3
    code, out, _ = run(capsys, "fingerprint", "match", audio / "lib" / "track1.wav", "--db", db)
    rep = json.loads(out)
    jsonschema.validate(rep, schema)
    assert rep["result"]["match"]["track_id"] == "track1"
    assert rep["result"]["match"]["bit_error_rate"] == 0.0
    assert run(capsys, "fingerprint", "match", audio / "lib" / "track1.wav")[0] == 2


def test_classify_workflow(capsys, tmp_path):
    for i in range(4):
        write_wav(tmp_path / f"n{i}.wav", synth.noise_burst(1.0, seed=i))
        write_wav(tmp_path / f"t{i}.wav", synth.sawtooth(200.0 + 50 * i, 1.0, sr=22050))
    data, model = tmp_path / "d.csv", tmp_path / "m.json"
    code, _, _ = run(capsys, "classify", "extract", f"noise={tmp_path}/n*.wav", f"tone={tmp_path}/t*.wav",
                     "-o", data)
    assert code == 0
    assert run(capsys, "classify", "train", data, "--algo", "knn", "--k", "1", "--model", model)[0] == 0
    rep = json.loads(run(capsys, "classify", "eval", data, "--model", model)[1])
    assert rep["result"]["accuracy"] == 1.0
    rep = json.loads(run(capsys, "classify", "loo", data)[1])
    assert rep["result"]["accuracy"] >= 0.75


def test_batch(capsys, audio, schema):
    pattern = str(audio / "*.wav")
    code, out, _ = run(capsys, "batch", pattern, "key", "--jobs", "1", "--no-timing")
    rep = json.loads(out)
    jsonschema.validate(rep, schema)
    assert code == 1
    assert rep["result"]["failed"] == 1 and rep["result"]["succeeded"] == 3
    inputs = [e["input"] for e in rep["result"]["files"]]
    assert inputs == sorted(inputs)
    parallel = run(capsys, "batch", pattern, "key", "--jobs", "4", "--no-timing")[1]
    assert parallel == out


def test_batch_forwards_options(capsys, audio):
    rep = json.loads(run(capsys, "batch", str(audio / "c*.wav"), "key", "--profile", "temperley",
                         "--no-timing")[1])
    assert rep["config"]["profile"] == "temperley"
    assert {e["input"].rsplit("/", 1)[-1] for e in rep["result"]["files"]} == {"clicks.wav", "cmaj.wav"}


def test_batch_no_matches(capsys, tmp_path):
    assert run(capsys, "batch", str(tmp_path / "*.wav"), "key")[0] == 2
