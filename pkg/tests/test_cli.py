"""CLI subcommands, exercised through cli.main with real files."""

import json
import os

import numpy as np
import pytest

from defectkit import cli, coco, load_image, parse_coco, parse_detections, save_pgm, save_png
from defectkit.detections import serialize_detections


def make_corpus(root, n_images=3, blocks_per_image=1):
    """Synthetic bright-blob images with matching ground-truth masks."""
    images = root / "images"
    masks = root / "masks"
    images.mkdir()
    masks.mkdir()
    rng = np.random.default_rng(17)
    for i in range(n_images):
        img = np.full((32, 32), 20, dtype=np.uint8)
        mask = np.zeros((32, 32), dtype=bool)
        for _ in range(blocks_per_image):
            x, y = rng.integers(2, 26, size=2)
            img[y : y + 3, x : x + 3] = 240
            mask[y : y + 3, x : x + 3] = True
        save_pgm(images / f"img{i:02}.pgm", img)
        save_pgm(masks / f"img{i:02}.pgm", mask)
    return images, masks


def run(argv):
    return cli.main([str(a) for a in argv])


# --- convert -------------------------------------------------------------


def test_convert_writes_valid_coco(tmp_path, capsys):
    images, masks = make_corpus(tmp_path)
    out = tmp_path / "coco.json"
    assert run(["convert", "--images", images, "--masks", masks, "--out", out]) == 0
    ds = parse_coco(out.read_text())
    assert len(ds.images) == 3
    assert coco.validate(ds) == []
    assert "3 images" in capsys.readouterr().out


def test_convert_reports_annotation_count(tmp_path, capsys):
    images = tmp_path / "images"
    masks = tmp_path / "masks"
    images.mkdir()
    masks.mkdir()
    img = np.full((16, 16), 20, dtype=np.uint8)
    mask = np.zeros((16, 16), dtype=bool)
    for x, y in [(1, 1), (6, 6), (12, 2)]:
        mask[y : y + 2, x : x + 2] = True
    save_pgm(images / "a.pgm", img)
    save_pgm(masks / "a.pgm", mask)
    out = tmp_path / "coco.json"
    assert run(["convert", "--images", images, "--masks", masks, "--out", out]) == 0
    assert "3 annotations" in capsys.readouterr().out


def test_convert_missing_mask(tmp_path, capsys):
    images, masks = make_corpus(tmp_path)
    os.unlink(masks / "img01.pgm")
    rc = run(["convert", "--images", images, "--masks", masks, "--out", tmp_path / "c.json"])
    assert rc == 1
    assert "img01.pgm" in capsys.readouterr().err


def test_convert_dimension_mismatch_names_file(tmp_path, capsys):
    images, masks = make_corpus(tmp_path)
    save_pgm(masks / "img02.pgm", np.zeros((8, 8), dtype=bool))
    rc = run(["convert", "--images", images, "--masks", masks, "--out", tmp_path / "c.json"])
    assert rc == 1
    assert "img02.pgm" in capsys.readouterr().err


# --- split ---------------------------------------------------------------


def make_coco_file(tmp_path, n_images):
    images, masks = make_corpus(tmp_path, n_images=n_images)
    out = tmp_path / "coco.json"
    assert run(["convert", "--images", images, "--masks", masks, "--out", out]) == 0
    return out


def test_split_21_images(tmp_path):
    coco_path = make_coco_file(tmp_path, 21)
    a, b = tmp_path / "train.json", tmp_path / "test.json"
    rc = run(["split", "--coco", coco_path, "--train-count", 11, "--seed", 5,
              "--out-train", a, "--out-test", b])
    assert rc == 0
    train, test = parse_coco(a.read_text()), parse_coco(b.read_text())
    assert len(train.images) == 11 and len(test.images) == 10
    assert not {im.file_name for im in train.images} & {im.file_name for im in test.images}
    config = json.loads((tmp_path / "run_config.json").read_text())
    assert config["base_lr"] == 0.05
    assert config["max_iter"] == 600
    assert config["num_classes"] == 1
    assert config["seed"] == 5


def test_split_deterministic_bytes(tmp_path):
    coco_path = make_coco_file(tmp_path, 7)
    for tag in ("x", "y"):
        rc = run(["split", "--coco", coco_path, "--train-count", 4, "--seed", 9,
                  "--out-train", tmp_path / f"tr_{tag}.json",
                  "--out-test", tmp_path / f"te_{tag}.json"])
        assert rc == 0
    assert (tmp_path / "tr_x.json").read_bytes() == (tmp_path / "tr_y.json").read_bytes()
    assert (tmp_path / "te_x.json").read_bytes() == (tmp_path / "te_y.json").read_bytes()


def test_split_zero_train(tmp_path):
    coco_path = make_coco_file(tmp_path, 3)
    rc = run(["split", "--coco", coco_path, "--train-count", 0,
              "--out-train", tmp_path / "tr.json", "--out-test", tmp_path / "te.json"])
    assert rc == 0
    assert parse_coco((tmp_path / "tr.json").read_text()).images == ()


# --- detect / eval -------------------------------------------------------


def test_detect_and_eval_pipeline(tmp_path, capsys):
    images, masks = make_corpus(tmp_path, n_images=4, blocks_per_image=2)
    coco_path = tmp_path / "coco.json"
    dets_path = tmp_path / "dets.json"
    metrics_path = tmp_path / "metrics.csv"
    json_path = tmp_path / "metrics.json"
    assert run(["convert", "--images", images, "--masks", masks, "--out", coco_path]) == 0
    assert run(["detect", "--images", images, "--coco", coco_path, "--out", dets_path]) == 0
    detset = parse_detections(dets_path.read_text())
    assert len(detset) >= 4
    assert run(["eval", "--coco", coco_path, "--dets", dets_path,
                "--out", metrics_path, "--out-json", json_path]) == 0
    lines = metrics_path.read_text().splitlines()
    assert lines[0] == "image_id,precision,recall,f1"
    assert lines[-1].startswith("aggregate,")
    doc = json.loads(json_path.read_text())
    # noise-free synthetic corpus: the threshold detector recovers the masks
    assert doc["aggregate"]["f1"] == 1.0
    assert doc["instances"]["fp"] == 0 and doc["instances"]["fn"] == 0
    assert "f1 1.0000" in capsys.readouterr().out


def test_detect_image_ids_follow_directory_order(tmp_path):
    images, _ = make_corpus(tmp_path, n_images=3)
    dets_path = tmp_path / "dets.json"
    assert run(["detect", "--images", images, "--out", dets_path]) == 0
    ids = {d.image_id for d in parse_detections(dets_path.read_text()).detections}
    assert ids == {1, 2, 3}  # lexicographic order, ids from 1


# --- sweep ---------------------------------------------------------------


def test_sweep_over_iteration_files(tmp_path, capsys):
    images, masks = make_corpus(tmp_path, n_images=3)
    coco_path = tmp_path / "coco.json"
    assert run(["convert", "--images", images, "--masks", masks, "--out", coco_path]) == 0
    dets_path = tmp_path / "dets_base.json"
    assert run(["detect", "--images", images, "--coco", coco_path, "--out", dets_path]) == 0
    base = parse_detections(dets_path.read_text())
    for it in (100, 200, 300):
        tagged = type(base)(base.detections, source=f"iter={it}")
        (tmp_path / f"dets_iter{it}.json").write_text(serialize_detections(tagged))
    out = tmp_path / "curve.csv"
    rc = run(["sweep", "--coco", coco_path, "--dets-glob", tmp_path / "dets_iter*.json",
              "--out", out])
    assert rc == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "iteration,precision,recall,f1"
    assert [r.split(",")[0] for r in rows[1:]] == ["100", "200", "300"]
    assert "3 runs" in capsys.readouterr().out


# --- overlay -------------------------------------------------------------


def test_overlay_outputs_deterministic_pngs(tmp_path):
    images, masks = make_corpus(tmp_path, n_images=2)
    coco_path = tmp_path / "coco.json"
    dets_path = tmp_path / "dets.json"
    assert run(["convert", "--images", images, "--masks", masks, "--out", coco_path]) == 0
    assert run(["detect", "--images", images, "--coco", coco_path, "--out", dets_path]) == 0
    out1, out2 = tmp_path / "ov1", tmp_path / "ov2"
    for out in (out1, out2):
        rc = run(["overlay", "--images", images, "--dets", dets_path,
                  "--coco", coco_path, "--out", out])
        assert rc == 0
    names = sorted(os.listdir(out1))
    assert names == ["img00.png", "img01.png"]
    for name in names:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
        assert load_image(out1 / name) is not None


# --- validate ------------------------------------------------------------


def test_validate_ok_and_broken(tmp_path, capsys):
    coco_path = make_coco_file(tmp_path, 2)
    assert run(["validate", "--coco", coco_path]) == 0
    assert "ok" in capsys.readouterr().out
    doc = json.loads(coco_path.read_text())
    doc["images"].append(doc["images"][0])  # duplicate id
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert run(["validate", "--coco", bad]) == 1
    assert "duplicate image id" in capsys.readouterr().out


def test_parse_error_is_data_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{broken")
    assert run(["validate", "--coco", bad]) == 1
    assert "malformed" in capsys.readouterr().err


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        cli.main(["no-such-command"])
    assert exc.value.code == 2
