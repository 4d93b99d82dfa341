"""Frontend tests: fixtures come from the primary package's external surface
(the `sclhom` CLI and the files it writes); rendering is checked for nonempty
images and clean failure on corrupted manifests."""

import json
import shutil
import subprocess
import sys

import pytest

from sclplots.cli import main as plots_main
from sclplots.jobs import HashMismatch, MissingColumns, PlotJob, load_manifest
from sclplots.render import (render_convergence, render_fields,
                             render_histogram, render_moments)

SWEEP_CONFIG = """
[problem]
variant = p2
kappa0 = 0.5
T = 0.25

[flux]
f1 = linear
delta0 = 1.0
u_min = -3.0
u_max = 3.0

[oscillation]
V = sin

[grid]
L = 1.0
n = 256

[sweep]
eps_list = 0.125,0.0625
seeds = 1
"""


@pytest.fixture(scope="module")
def sweep_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "sweep"
    cfg = tmp_path_factory.mktemp("cfgs") / "sweep.cfg"
    cfg.write_text(SWEEP_CONFIG)
    proc = subprocess.run(
        [sys.executable, "-m", "sclhom.cli", "run", "eps-sweep-p2",
         "--config", str(cfg), "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    return out


@pytest.fixture(scope="module")
def concentration_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "young"
    proc = subprocess.run(
        [sys.executable, "-m", "sclhom.cli", "run", "young-concentration",
         "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    return out


@pytest.fixture(scope="module")
def contraction_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "contraction"
    proc = subprocess.run(
        [sys.executable, "-m", "sclhom.cli", "run", "contraction",
         "--out", str(out), "--paths", "16"],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    return out


def test_render_convergence_nonempty(sweep_run, tmp_path):
    manifest = load_manifest(sweep_run / "manifest.json")
    outs = render_convergence(manifest, tmp_path)
    assert len(outs) == 1
    assert outs[0].stat().st_size > 1000
    assert outs[0].name.startswith(manifest.hash_prefix)


def test_render_fields_overlays(sweep_run, tmp_path):
    manifest = load_manifest(sweep_run / "manifest.json")
    outs = render_fields(manifest, tmp_path)
    index = json.loads((sweep_run / "snapshots.json").read_text())
    assert len(outs) == len(index["times"])
    assert all(o.stat().st_size > 1000 for o in outs)


def test_render_histogram(concentration_run, tmp_path):
    manifest = load_manifest(concentration_run / "manifest.json")
    outs = render_histogram(manifest, tmp_path)
    assert outs[0].stat().st_size > 1000


def test_render_moments(contraction_run, tmp_path):
    manifest = load_manifest(contraction_run / "manifest.json")
    outs = render_moments(manifest, tmp_path)
    assert outs[0].stat().st_size > 1000


def test_corrupted_hash_fails_cleanly(sweep_run, tmp_path):
    run = tmp_path / "corrupted"
    shutil.copytree(sweep_run, run)
    target = run / "convergence.csv"
    target.write_text(target.read_text() + "# tampered\n")
    manifest = load_manifest(run / "manifest.json")
    with pytest.raises(HashMismatch):
        render_convergence(manifest, tmp_path / "img")
    # and no image was written
    assert not (tmp_path / "img").exists() or not list((tmp_path / "img").iterdir())
    rc = plots_main([str(run / "manifest.json"), "--kind", "convergence",
                     "--out", str(tmp_path / "img2")])
    assert rc == 1


def test_missing_columns_error(tmp_path):
    run = tmp_path / "fake"
    run.mkdir()
    (run / "convergence.csv").write_text("a,b\n1,2\n")
    import hashlib
    digest = hashlib.sha256((run / "convergence.csv").read_bytes()).hexdigest()
    (run / "manifest.json").write_text(json.dumps({
        "experiment": "fake", "outputs": [
            {"name": "convergence.csv", "sha256": digest, "bytes": 8}]}))
    manifest = load_manifest(run / "manifest.json")
    with pytest.raises(MissingColumns):
        render_convergence(manifest, tmp_path / "img")


def test_empty_table_no_file(tmp_path):
    run = tmp_path / "empty"
    run.mkdir()
    (run / "convergence.csv").write_text("seed,eps,time,phi,weak_err,corrector_err,n,dx\n")
    import hashlib
    digest = hashlib.sha256((run / "convergence.csv").read_bytes()).hexdigest()
    (run / "manifest.json").write_text(json.dumps({
        "experiment": "fake", "outputs": [
            {"name": "convergence.csv", "sha256": digest, "bytes": 1}]}))
    manifest = load_manifest(run / "manifest.json")
    with pytest.raises(MissingColumns):
        render_convergence(manifest, tmp_path / "img")
    assert not (tmp_path / "img").exists()


def test_cli_roundtrip(sweep_run, tmp_path):
    rc = plots_main([str(sweep_run / "manifest.json"), "--kind", "snapshot",
                     "--out", str(tmp_path / "cli_imgs")])
    assert rc == 0
    assert list((tmp_path / "cli_imgs").glob("*.png"))


def test_unknown_kind_rejected(sweep_run, tmp_path):
    with pytest.raises(ValueError):
        PlotJob(sweep_run / "manifest.json", "sparkles", tmp_path)


def test_2d_heatmap(tmp_path_factory, tmp_path):
    out = tmp_path_factory.mktemp("runs") / "shear"
    cfg = tmp_path_factory.mktemp("cfgs") / "shear.cfg"
    cfg.write_text("""
[problem]
variant = p1
T = 0.125
kappa0 = 0.5

[flux]
f1 = linear
u_min = -3.0
u_max = 3.0

[noise]
sigma = unit

[oscillation]
V = sin

[grid]
n = 32
L = 0.25

[sweep]
eps_list = 0.25
seeds = 1
""")
    proc = subprocess.run(
        [sys.executable, "-m", "sclhom.cli", "run", "eps-sweep-p1-shear",
         "--config", str(cfg), "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    manifest = load_manifest(out / "manifest.json")
    outs = render_fields(manifest, tmp_path)
    assert outs[0].stat().st_size > 1000
