import json

import pytest

from emostress.checkpoint import load_bundle
from emostress.cli import main


def run_cli(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


SMALL_MODEL_SETS = [
    "--set", "train_count=14",
    "--set", "model.epochs=2",
    "--set", "model.conv_channels=[4, 8]",
    "--set", "model.embedding_dim=16",
    "--set", "model.batch_size=8",
]


@pytest.fixture(scope="module")
def cli_run(small_corpus, tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("cli_run")
    code = main(
        ["pipeline", "--dataset-root", str(small_corpus), "--out", str(out_dir), "--seed", "11"]
        + SMALL_MODEL_SETS
    )
    assert code == 0
    return out_dir


@pytest.fixture(scope="module")
def sample_wavs(small_corpus):
    sad = sorted((small_corpus / "sad").glob("*.wav"))
    happy = sorted((small_corpus / "happy").glob("*.wav"))
    return [str(sad[0]), str(happy[0])]


def test_pipeline_command_reports_and_writes(cli_run, capsys):
    # the module fixture already ran the command; spot-check its outputs
    for name in ("manifest.csv", "train_report.csv", "metrics.json", "model.emoc"):
        assert (cli_run / name).is_file()
    doc = json.loads((cli_run / "metrics.json").read_text())
    assert doc["n_train"] == 14


def test_train_command_writes_model_only_checkpoint(small_corpus, tmp_path, capsys):
    out = tmp_path / "train_out"
    code, stdout, _ = run_cli(
        capsys,
        ["train", "--dataset-root", str(small_corpus), "--out", str(out), "--seed", "11"]
        + SMALL_MODEL_SETS,
    )
    assert code == 0
    assert "train accuracy" in stdout
    bundle = load_bundle(out / "model.emoc")
    assert bundle.normalizer is not None
    assert bundle.pca is None and bundle.calibration is None


def test_stress_command_on_full_checkpoint(cli_run, sample_wavs, capsys):
    ckpt = str(cli_run / "model.emoc")
    code, stdout, _ = run_cli(capsys, ["stress", "--checkpoint", ckpt] + sample_wavs)
    assert code == 0
    lines = stdout.strip().splitlines()
    assert len(lines) == 2
    for line, wav in zip(lines, sample_wavs):
        fields = line.split("\t")
        assert fields[0] == wav
        assert fields[1].startswith("stress_score=")
        assert 0.0 <= float(fields[1].split("=")[1]) <= 1.0
        assert fields[2] in ("is_stressed=yes", "is_stressed=no")
        assert fields[3].startswith("nearest=")


def test_stress_threshold_zero_marks_everything(cli_run, sample_wavs, capsys):
    ckpt = str(cli_run / "model.emoc")
    code, stdout, _ = run_cli(
        capsys, ["stress", "--checkpoint", ckpt, "--theta", "0.0"] + sample_wavs
    )
    assert code == 0
    assert all("is_stressed=yes" in line for line in stdout.strip().splitlines())


def test_stress_rejects_model_only_checkpoint(small_corpus, tmp_path, sample_wavs, capsys):
    out = tmp_path / "train_out"
    assert (
        main(
            ["train", "--dataset-root", str(small_corpus), "--out", str(out), "--seed", "11"]
            + SMALL_MODEL_SETS
        )
        == 0
    )
    capsys.readouterr()
    code, _, stderr = run_cli(
        capsys, ["stress", "--checkpoint", str(out / "model.emoc"), sample_wavs[0]]
    )
    assert code == 2
    assert "lacks PCA or cube calibration" in stderr


def test_features_command_writes_caches(cli_run, sample_wavs, tmp_path, capsys):
    out_dir = tmp_path / "feats"
    code, stdout, _ = run_cli(
        capsys,
        ["features", "--out-dir", str(out_dir), "--checkpoint", str(cli_run / "model.emoc")]
        + sample_wavs,
    )
    assert code == 0
    assert "(199x39)" in stdout
    emofs = sorted(out_dir.glob("*.emof"))
    assert len(emofs) == 2


def test_features_command_without_checkpoint(sample_wavs, tmp_path, capsys):
    code, stdout, _ = run_cli(
        capsys, ["features", "--out-dir", str(tmp_path), sample_wavs[0]]
    )
    assert code == 0
    assert "(199x39)" in stdout


def test_embed_command_stdout_and_file(cli_run, sample_wavs, tmp_path, capsys):
    ckpt = str(cli_run / "model.emoc")
    code, stdout, _ = run_cli(capsys, ["embed", "--checkpoint", ckpt] + sample_wavs)
    assert code == 0
    lines = stdout.strip().splitlines()
    assert lines[0] == "path," + ",".join(f"e{j:02d}" for j in range(16))
    assert len(lines) == 3

    out_csv = tmp_path / "emb.csv"
    code, stdout, _ = run_cli(
        capsys, ["embed", "--checkpoint", ckpt, "--out", str(out_csv)] + sample_wavs
    )
    assert code == 0
    assert "wrote 2 embeddings" in stdout
    assert out_csv.read_text().splitlines()[0].startswith("path,e00")


def test_eval_command_with_manifest(cli_run, small_corpus, capsys):
    code, stdout, _ = run_cli(
        capsys,
        [
            "eval",
            "--checkpoint", str(cli_run / "model.emoc"),
            "--manifest", str(cli_run / "manifest.csv"),
            "--dataset-root", str(small_corpus),
            "--split", "test",
        ],
    )
    assert code == 0
    assert "clips: 7" in stdout
    assert "accuracy:" in stdout
    assert "class 6: precision=" in stdout


def test_eval_command_scanning_the_corpus(cli_run, small_corpus, capsys):
    code, stdout, _ = run_cli(
        capsys,
        [
            "eval",
            "--checkpoint", str(cli_run / "model.emoc"),
            "--dataset-root", str(small_corpus),
            "--dataset-kind", "synth",
        ],
    )
    assert code == 0
    assert "clips: 21" in stdout


def test_eval_command_needs_a_source(cli_run, capsys):
    code, _, stderr = run_cli(
        capsys, ["eval", "--checkpoint", str(cli_run / "model.emoc")]
    )
    assert code == 2
    assert "need --manifest" in stderr


def test_cube_fit_command(cli_run, small_corpus, tmp_path, capsys):
    refit = tmp_path / "refit.emoc"
    code, stdout, _ = run_cli(
        capsys,
        [
            "cube-fit",
            "--checkpoint", str(cli_run / "model.emoc"),
            "--dataset-root", str(small_corpus),
            "--dataset-kind", "synth",
            "--out", str(refit),
        ],
    )
    assert code == 0
    assert "calibration: perm=" in stdout
    bundle = load_bundle(refit)
    assert bundle.calibration is not None

    code, _, stderr = run_cli(
        capsys,
        [
            "cube-fit",
            "--checkpoint", str(cli_run / "model.emoc"),
            "--dataset-root", str(small_corpus),
            "--dataset-kind", "synth",
            "--map", "sad=NOWHERE",
        ],
    )
    assert code == 2
    assert "unknown cube corner" in stderr

    code, _, stderr = run_cli(
        capsys,
        [
            "cube-fit",
            "--checkpoint", str(cli_run / "model.emoc"),
            "--dataset-root", str(small_corpus),
            "--dataset-kind", "synth",
            "--map", "garbage",
        ],
    )
    assert code == 2
    assert "must look like emotion=CORNER" in stderr


def test_synth_command(tmp_path, capsys):
    out = tmp_path / "corpus"
    code, stdout, _ = run_cli(
        capsys, ["synth", "--out", str(out), "--clips-per-class", "1", "--seed", "3"]
    )
    assert code == 0
    assert "wrote 7 clips" in stdout
    assert len(list(out.rglob("*.wav"))) == 7


def test_usage_and_dataset_error_codes(tmp_path, capsys):
    code, _, stderr = run_cli(capsys, ["pipeline", "--out", str(tmp_path)])
    assert code == 2
    assert "dataset_root is required" in stderr

    code, _, stderr = run_cli(
        capsys, ["pipeline", "--dataset-root", str(tmp_path / "missing")]
    )
    assert code == 3

    code, _, stderr = run_cli(
        capsys,
        ["pipeline", "--dataset-root", "x", "--set", "model.epochs"],
    )
    assert code == 2
    assert "must look like path=value" in stderr

    bad_config = tmp_path / "bad.json"
    bad_config.write_text("[1]")
    code, _, stderr = run_cli(
        capsys, ["pipeline", "--config", str(bad_config), "--dataset-root", "x"]
    )
    assert code == 2
    assert "must be a JSON object" in stderr

    unreadable = tmp_path / "absent.json"
    code, _, stderr = run_cli(
        capsys, ["pipeline", "--config", str(unreadable), "--dataset-root", "x"]
    )
    assert code == 2
    assert "cannot read config" in stderr

    code, _, stderr = run_cli(
        capsys, ["pipeline", "--dataset-root", "x", "--set", "bogus_key=1"]
    )
    assert code == 2
    assert "unknown config keys" in stderr
