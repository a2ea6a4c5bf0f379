#!/usr/bin/env python3
"""End-to-end checks of the scenecat command line tool.

usage: cli_test.py <scenecat binary> <scratch directory>
"""

import csv
import filecmp
import json
import math
import shutil
import subprocess
import sys
from collections import Counter
from pathlib import Path

BIN = sys.argv[1]
WORK = Path(sys.argv[2])
failures = []


def run(*args, expect=0):
    proc = subprocess.run([BIN, *map(str, args)], capture_output=True, text=True)
    if proc.returncode != expect:
        raise AssertionError(
            f"{' '.join(map(str, args))}: exit {proc.returncode}, expected {expect}\n"
            f"stdout: {proc.stdout}\nstderr: {proc.stderr}")
    return proc


def check(name, fn):
    try:
        fn()
        print(f"ok   {name}")
    except Exception as e:  # noqa: BLE001 - report and continue
        print(f"FAIL {name}: {e}")
        failures.append(name)


def same_tree(a, b):
    names = sorted(p.name for p in Path(a).iterdir())
    assert names == sorted(p.name for p in Path(b).iterdir()), f"{a} and {b} differ in files"
    for n in names:
        assert filecmp.cmp(Path(a) / n, Path(b) / n, shallow=False), f"{n} differs"


def lines(path):
    return [l for l in Path(path).read_text().splitlines() if l.strip()]


shutil.rmtree(WORK, ignore_errors=True)
WORK.mkdir(parents=True)
data, data2 = WORK / "data", WORK / "data2"
model, profiles, cls, ev = WORK / "model", WORK / "profiles", WORK / "cls", WORK / "eval"


def test_gen():
    run("gen", "--seed", 42, "--out", data)
    run("gen", "--seed", 42, "--out", data2)
    same_tree(data, data2)
    assert len(lines(data / "segment_labels.txt")) == 40
    frames = len(lines(data / "stream.csv")) - 1
    assert len(lines(data / "labels.txt")) == frames
    anchors = [int(x) for x in lines(data / "anchors.txt")]
    assert anchors[0] == 0 and all(a < b for a, b in zip(anchors, anchors[1:]))
    assert "seed=42" in lines(data / "config.txt")


def test_train():
    run("train", "--stream", data / "stream.csv", "--anchors", data / "anchors.txt",
        "--out", model)
    rows = list(csv.DictReader(open(model / "loss.csv")))
    assert len(rows) == 30 * 40, len(rows)
    run("train", "--stream", data / "stream.csv", "--anchors", data / "anchors.txt",
        "--out", WORK / "model2")
    same_tree(model, WORK / "model2")


def test_profile():
    run("profile", "--model", model / "model.bin", "--stream", data / "stream.csv",
        "--anchors", data / "anchors.txt", "--segment-labels", data / "segment_labels.txt",
        "--per-category", 3, "--out", profiles)
    summary = json.loads((profiles / "summary.json").read_text())
    cats = summary["categories"]
    assert sorted(cats) == ["C0", "C1", "C2"]
    for cat, entry in cats.items():
        prof = json.loads((profiles / f"profile_{cat}.json").read_text())
        assert prof["support_count"] >= 1 and entry["support_count"] == prof["support_count"]
        assert prof["bin_count"] == len(prof["probs"]) == 64
        assert abs(sum(prof["probs"]) - 1.0) < 1e-9
        assert entry["stability_max_jsd"] < summary["min_cross_category_jsd"], cat
        curve = [c["support_count"] for c in entry["support_curve"]]
        assert curve == sorted(curve) and all(c >= 1 for c in curve)


def test_profile_manual_typical():
    out = WORK / "profiles_manual"
    run("profile", "--model", model / "model.bin", "--stream", data / "stream.csv",
        "--typical", "A=10", "--typical", "B=900,950", "--sigma", 0.2, "--bins", 32,
        "--out", out)
    a = json.loads((out / "profile_A.json").read_text())
    assert a["bin_count"] == 32 and a["typical_frame"] == 10 and a["sigma"] == 0.2
    summary = json.loads((out / "summary.json").read_text())
    assert summary["categories"]["A"]["stability_max_jsd"] is None
    assert summary["categories"]["B"]["stability_max_jsd"] is not None


def profile_files():
    return sorted(str(p) for p in profiles.glob("profile_*.json"))


def test_classify():
    outs = []
    for threads in (1, 2, 8):
        out = WORK / f"cls_t{threads}"
        run("classify", "--model", model / "model.bin", "--stream", data / "stream.csv",
            "--profiles", *profile_files(), "--threads", threads, "--out", out)
        outs.append(out)
    first = (outs[0] / "predictions.csv").read_bytes()
    for out in outs[1:]:
        assert (out / "predictions.csv").read_bytes() == first, out
    shutil.copytree(outs[0], cls)
    rows = list(csv.DictReader(open(cls / "predictions.csv")))
    assert len(rows) == len(lines(data / "stream.csv")) - 1
    for r in rows:
        divs = {k[4:]: float(v) for k, v in r.items() if k.startswith("div_")}
        best = min(divs.values())
        assert divs[r["predicted"]] == best
        assert r["predicted"] == min(k for k, v in divs.items() if v == best)
    timing = json.loads((cls / "timing.json").read_text())
    assert timing["frames"] == len(rows) and timing["ds_per_frame_ms"] > 0


def test_classify_new_stream():
    run("gen", "--seed", 4242, "--out", WORK / "test_data")
    out = WORK / "cls_new"
    run("classify", "--model", model / "model.bin", "--stream", WORK / "test_data" / "stream.csv",
        "--reference-stream", data / "stream.csv", "--profiles", *profile_files(), "--out", out)
    run("evaluate", "--predictions", out / "predictions.csv",
        "--labels", WORK / "test_data" / "labels.txt", "--out", WORK / "eval_new")
    m = json.loads((WORK / "eval_new" / "metrics.json").read_text())
    assert m["overall_accuracy"] >= 0.80, m["overall_accuracy"]


def test_evaluate():
    run("evaluate", "--predictions", cls / "predictions.csv", "--labels", data / "labels.txt",
        "--model", model / "model.bin", "--stream", data / "stream.csv", "--out", ev)
    m = json.loads((ev / "metrics.json").read_text())
    assert m["overall_accuracy"] >= 0.90
    assert len(m["category_similarity"]) == 3
    # Recompute everything from the per-frame CSV.
    rows = list(csv.DictReader(open(ev / "frames.csv")))
    ref = lines(data / "labels.txt")
    assert [r["reference"] for r in rows] == ref
    pred = [r["predicted"] for r in rows]
    matched = sum(a == b for a, b in zip(ref, pred))
    assert m["total_frames"] == len(ref) and m["matched_frames"] == matched
    assert math.isclose(m["overall_accuracy"], matched / len(ref), rel_tol=1e-12)
    assert math.isclose(m["tp_percent"], 100.0 * matched / len(ref), rel_tol=1e-12)
    pairs = Counter(zip(ref, pred))
    labels = m["labels"]
    for i, a in enumerate(labels):
        for j, b in enumerate(labels):
            assert m["confusion"][i][j] == pairs[(a, b)], (a, b)
    support = Counter(ref)
    for cat, entry in m["per_class"].items():
        assert entry["support"] == support[cat]
        hit = sum(1 for a, b in zip(ref, pred) if a == cat and b == cat)
        assert math.isclose(entry["accuracy"], hit / support[cat], rel_tol=1e-12)
    confusion = list(csv.reader(open(ev / "confusion.csv")))
    for i, a in enumerate(labels):
        assert [int(x) for x in confusion[i + 1][1:]] == m["confusion"][i]
    pca = list(csv.DictReader(open(ev / "pca.csv")))
    assert len(pca) == len(ref) and [r["reference_label"] for r in pca] == ref


def test_evaluate_perfect():
    ref = lines(data / "labels.txt")
    perfect = WORK / "perfect.csv"
    perfect.write_text("frame,predicted\n" + "".join(f"{i},{l}\n" for i, l in enumerate(ref)))
    run("evaluate", "--predictions", perfect, "--labels", data / "labels.txt",
        "--out", WORK / "eval_perfect")
    m = json.loads((WORK / "eval_perfect" / "metrics.json").read_text())
    assert m["overall_accuracy"] == 1.0
    # Segment-derived labels agree with the per-frame file.
    run("evaluate", "--predictions", perfect, "--anchors", data / "anchors.txt",
        "--segment-labels", data / "segment_labels.txt", "--out", WORK / "eval_seg")
    m2 = json.loads((WORK / "eval_seg" / "metrics.json").read_text())
    assert m2["overall_accuracy"] == 1.0


def test_config_precedence():
    cfg = WORK / "gen.cfg"
    cfg.write_text("# generator settings\nseed = 7\nsegments = 12\nout = "
                   f"{WORK / 'cfg_out'}\n")
    run("gen", "--config", cfg, "--segments", 10)
    echo = lines(WORK / "cfg_out" / "config.txt")
    assert "seed=7" in echo and "segments=10" in echo
    assert len(lines(WORK / "cfg_out" / "segment_labels.txt")) == 10
    # The echo reads back as a config file and reproduces the run.
    run("gen", "--config", WORK / "cfg_out" / "config.txt", "--out", WORK / "cfg_again")
    same_tree(WORK / "cfg_out", WORK / "cfg_again")
    for d in (data, model, profiles, cls, ev):
        assert (d / "config.txt").exists(), d


def test_usage_errors():
    run(expect=2)
    run("frobnicate", expect=2)
    run("gen", expect=2)
    run("train", "--stream", WORK / "missing.csv", "--anchors", data / "anchors.txt",
        "--out", WORK / "x", expect=2)
    bad = WORK / "bad.cfg"
    bad.write_text("seed=1\nno_such_key=3\n")
    p = run("gen", "--config", bad, "--out", WORK / "x", expect=2)
    assert "bad.cfg:2" in p.stderr
    run("gen", "--out", WORK / "x", "--min-frames", 300, expect=2)
    run("profile", "--model", model / "model.bin", "--stream", data / "stream.csv",
        "--typical", "C0", "--out", WORK / "x", expect=2)


def test_data_errors():
    stream = lines(data / "stream.csv")
    broken = WORK / "broken.csv"
    broken.write_text("\n".join(stream[:5] + ["1,2,oops"] + stream[6:10]) + "\n")
    p = run("train", "--stream", broken, "--anchors", data / "anchors.txt",
            "--out", WORK / "x", expect=3)
    assert "broken.csv:6" in p.stderr, p.stderr

    short = WORK / "short.csv"
    short.write_text("\n".join(stream[:501]) + "\n")
    p = run("train", "--stream", short, "--anchors", data / "anchors.txt",
            "--out", WORK / "x", expect=3)
    assert "500" in p.stderr and "40" in p.stderr, p.stderr

    anchors = WORK / "bad_anchors.txt"
    anchors.write_text("0\n100\n50\n")
    p = run("train", "--stream", data / "stream.csv", "--anchors", anchors,
            "--out", WORK / "x", expect=3)
    assert "bad_anchors.txt" in p.stderr

    p = run("profile", "--model", model / "model.bin", "--stream", data / "stream.csv",
            "--typical", "C0=999999", "--out", WORK / "x", expect=3)
    assert "999999" in p.stderr

    run("classify", "--model", model / "model.bin", "--stream", data / "stream.csv",
        "--profiles", profiles / "profile_C0.json",
        WORK / "profiles_manual" / "profile_A.json", "--out", WORK / "x", expect=3)

    prof = WORK / "bad_profile.json"
    prof.write_text('{"category": "C0", "bin_count": 2, "probs": [0.5]}')
    p = run("classify", "--model", model / "model.bin", "--stream", data / "stream.csv",
            "--profiles", prof, "--out", WORK / "x", expect=3)
    assert "bad_profile.json" in p.stderr

    truncated = WORK / "truncated.bin"
    truncated.write_bytes((model / "model.bin").read_bytes()[:100])
    p = run("profile", "--model", truncated, "--stream", data / "stream.csv",
            "--typical", "C0=1", "--out", WORK / "x", expect=3)
    assert "truncated.bin" in p.stderr

    preds = WORK / "short_preds.csv"
    preds.write_text("frame,predicted\n0,C0\n1,C1\n")
    run("evaluate", "--predictions", preds, "--labels", data / "labels.txt",
        "--out", WORK / "x", expect=3)
    preds.write_text("frame,predicted\n0,C0\n2,C1\n")
    p = run("evaluate", "--predictions", preds, "--labels", data / "labels.txt",
            "--out", WORK / "x", expect=3)
    assert "short_preds.csv:3" in p.stderr, p.stderr


for name, fn in list(globals().items()):
    if name.startswith("test_") and callable(fn):
        check(name[5:], fn)

print(f"{len(failures)} failed" if failures else "all cli checks passed")
sys.exit(1 if failures else 0)
