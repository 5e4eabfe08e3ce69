"""End-to-end checks of the mosaic command-line tool: outputs, manifests and exit codes."""
import csv
import hashlib
import json
import pathlib
import subprocess
import sys
import tempfile

TOOL = sys.argv[1]
SMALL_CONFIG = """\
[train]
epochs = 3
[data]
patch_size = 4
train_patches = 40
test_patches = 10
train_spectra = 60
test_spectra = 20
[sweep]
n_filters = 2, 3
n_steps = 1, 2
learning_rates = 1e-3
l2_weights = 0
configurations = regular-lvf, optimized-squarish
random_inits = 1
"""

failures = []


def run(*args, expect=0):
    p = subprocess.run([TOOL, *map(str, args)], capture_output=True, text=True)
    if p.returncode != expect:
        failures.append(f"{' '.join(map(str, args))}: exit {p.returncode}, expected {expect}\n{p.stderr}")
    elif expect != 0:
        line = json.loads(p.stderr.strip().splitlines()[-1])
        if "error" not in line or "message" not in line:
            failures.append(f"unstructured error line: {p.stderr}")
    return p


def sha(path):
    return hashlib.sha256(pathlib.Path(path).read_bytes()).hexdigest()


def check(cond, what):
    if not cond:
        failures.append(what)


with tempfile.TemporaryDirectory() as tmp:
    t = pathlib.Path(tmp)
    cfg = t / "small.cfg"
    cfg.write_text(SMALL_CONFIG)

    run("synth", "--rows", 32, "--cols", 32, "--bands", 8, "--seed", 7, "--out", t / "a")
    run("synth", "--rows", 32, "--cols", 32, "--bands", 8, "--seed", 7, "--out", t / "b")
    cube = t / "a" / "cube.hcub"
    check(sha(cube) == sha(t / "b" / "cube.hcub"), "synth is not deterministic")
    manifest = json.loads((t / "a" / "manifest.json").read_text())
    listed = {pathlib.Path(a["path"]).name: a["sha256"] for a in manifest["artifacts"]}
    check(listed.get("cube.hcub") == sha(cube), "manifest checksum of cube.hcub")

    run("analyze", cube, "--band-index", 3, "--max-pairs", 2000, "--out", t / "an")
    for name in ["power_spectrum.csv", "radial_profile.csv", "psnr_vs_distance.csv", "pca_variance.csv", "summary.json"]:
        check((t / "an" / name).exists(), f"analyze did not write {name}")

    run("--config", cfg, "optimize-filters", cube, "--n-filters", 2, "--fix-filters", "--out", t / "f")
    with open(t / "f" / "filters.csv") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    check(len(rows) >= 2, "filters.csv has no filters")

    run("--config", cfg, "optimize-layout", cube, "--configuration", "regular-lvf", "--n-filters", 3, "--steps", 2,
        "--out", t / "l")
    run("--config", cfg, "evaluate", cube, "--layout", t / "l" / "layout.txt", "--reconstructor",
        t / "l" / "reconstructor.rcon", "--steps", 2, "--out", t / "e")
    check((t / "e" / "metrics.csv").exists(), "evaluate wrote no metrics")

    run("--config", cfg, "sweep", cube, "--out", t / "s")
    first = (t / "s" / "sweep.csv").read_text()
    with open(t / "s" / "sweep.csv") as fh:
        cells = list(csv.DictReader(fh))
    check(len(cells) == 8, f"sweep produced {len(cells)} cells, expected 8")
    check(all(float(c["compression_ratio"]) == 40 / int(c["n_steps"]) for c in cells), "compression ratio column")
    run("--config", cfg, "sweep", cube, "--out", t / "s")
    check((t / "s" / "sweep.csv").read_text() == first, "resumed sweep differs")

    # Error contract.
    run("synth", "--rows", 0, "--out", t / "x", expect=2)
    run("analyze", t / "missing.hcub", "--out", t / "x", expect=2)
    run("--config", cfg, "optimize-filters", cube, "--n-filters", 0, "--out", t / "x", expect=2)
    run("--config", cfg, "optimize-layout", cube, "--configuration", "nope", "--out", t / "x", expect=2)
    run("--config", cfg, "evaluate", cube, "--layout", t / "l" / "layout.txt", "--reconstructor",
        t / "l" / "reconstructor.rcon", "--steps", 3, "--out", t / "x", expect=2)

for f in failures:
    print("FAIL:", f)
print("cli smoke:", "ok" if not failures else f"{len(failures)} failures")
sys.exit(1 if failures else 0)
