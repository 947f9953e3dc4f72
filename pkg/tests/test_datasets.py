import json

import numpy as np
import pytest
from PIL import Image

from clickseg.datasets import (
    DatasetError,
    InstanceRecord,
    MergeConfig,
    load_dataset,
    make_synthetic_suite,
    merge_sources,
    save_dataset,
)
from clickseg.imageproc import iou, rasterize_polygon

SEED = 7741


def block_mask(h, w, r0, r1, c0, c1):
    m = np.zeros((h, w), dtype=np.uint8)
    m[r0:r1, c0:c1] = 1
    return m


def record(iid, image_ref, mask, image=None, source="general"):
    if image is None:
        image = np.full(mask.shape + (3,), 90, dtype=np.uint8)
    return InstanceRecord(instance_id=iid, image_ref=image_ref, image=image,
                          mask=mask, source=source)


def test_record_validation():
    mask = block_mask(6, 6, 1, 3, 1, 3)
    with pytest.raises(DatasetError):
        record("a", "img", np.zeros((6, 6), dtype=np.uint8))
    with pytest.raises(DatasetError):
        record("a", "img", mask, image=np.zeros((5, 6, 3), dtype=np.uint8))
    with pytest.raises(DatasetError):
        record("a", "img", mask, source="handmade")


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(SEED)
    img_a = rng.integers(0, 256, size=(12, 15, 3), dtype=np.uint8)
    img_b = rng.integers(0, 256, size=(9, 9, 3), dtype=np.uint8)
    records = [
        record("inst-b", "img-a", block_mask(12, 15, 2, 6, 3, 9), image=img_a,
               source="fine"),
        record("inst-a", "img-a", block_mask(12, 15, 0, 4, 0, 4), image=img_a),
        record("inst-c", "img-b", block_mask(9, 9, 4, 8, 4, 8), image=img_b),
    ]
    save_dataset(records, tmp_path / "ds")
    loaded = load_dataset(tmp_path / "ds")
    assert [r.instance_id for r in loaded] == ["inst-a", "inst-b", "inst-c"]
    by_id = {r.instance_id: r for r in loaded}
    for rec in records:
        got = by_id[rec.instance_id]
        assert np.array_equal(got.image, rec.image)
        assert np.array_equal(got.mask, rec.mask)
        assert got.source == rec.source
        assert got.image_ref == rec.image_ref


def test_save_rejects_conflicting_image_reuse(tmp_path):
    a = record("x", "img", block_mask(6, 6, 0, 2, 0, 2))
    b = record("y", "img", block_mask(6, 6, 0, 2, 0, 2),
               image=np.zeros((6, 6, 3), dtype=np.uint8))
    with pytest.raises(DatasetError):
        save_dataset([a, b], tmp_path / "ds")


def test_polygon_instances(tmp_path):
    d = tmp_path / "ds"
    d.mkdir()
    img = np.full((10, 12, 3), 50, dtype=np.uint8)
    Image.fromarray(img).save(d / "scene.png")
    poly = [[2.0, 1.0], [9.0, 1.0], [9.0, 7.0], [2.0, 7.0]]
    index = {
        "images": [{"id": "scene", "file": "scene.png", "height": 10, "width": 12}],
        "instances": [
            {"id": "poly-1", "image_id": "scene", "polygon": poly,
             "source": "fine", "category": "box"},
        ],
    }
    (d / "index.json").write_text(json.dumps(index))
    loaded = load_dataset(d)
    assert len(loaded) == 1
    assert np.array_equal(loaded[0].mask, rasterize_polygon(poly, 10, 12))
    assert loaded[0].category == "box"
    assert loaded[0].source == "fine"


def test_load_failures(tmp_path):
    with pytest.raises(DatasetError):
        load_dataset(tmp_path)  # no index.json

    d = tmp_path / "ds"
    d.mkdir()
    img = np.full((8, 8, 3), 10, dtype=np.uint8)
    Image.fromarray(img).save(d / "a.png")
    base = {
        "images": [{"id": "a", "file": "a.png", "height": 8, "width": 8}],
        "instances": [{"id": "i", "image_id": "a", "mask_file": "m.png"}],
    }

    bad = json.loads(json.dumps(base))
    bad["images"][0]["height"] = 9
    (d / "index.json").write_text(json.dumps(bad))
    with pytest.raises(DatasetError):
        load_dataset(d)

    (d / "index.json").write_text(json.dumps(base))
    with pytest.raises(DatasetError):
        load_dataset(d)  # mask file missing

    bad = json.loads(json.dumps(base))
    bad["instances"][0] = {"id": "i", "image_id": "nope", "mask_file": "m.png"}
    (d / "index.json").write_text(json.dumps(bad))
    with pytest.raises(DatasetError):
        load_dataset(d)

    bad = json.loads(json.dumps(base))
    del bad["instances"][0]["mask_file"]
    (d / "index.json").write_text(json.dumps(bad))
    with pytest.raises(DatasetError):
        load_dataset(d)


def test_merge_drops_high_overlap_general():
    # fine mask covers 90 of general's 100 pixels: IoU 0.9 > 0.8
    general = [record("gen-1", "img", block_mask(10, 20, 0, 5, 0, 20))]
    fine = [record("fine-1", "img", block_mask(10, 20, 0, 5, 0, 18), source="fine")]
    assert abs(iou(general[0].mask, fine[0].mask) - 0.9) < 1e-12
    merged = merge_sources(general, fine)
    assert [r.instance_id for r in merged] == ["fine-1"]


def test_merge_keeps_moderate_overlap():
    general = [record("gen-1", "img", block_mask(10, 20, 0, 5, 0, 20))]
    fine = [record("fine-1", "img", block_mask(10, 20, 0, 5, 0, 10), source="fine")]
    assert abs(iou(general[0].mask, fine[0].mask) - 0.5) < 1e-12
    merged = merge_sources(general, fine)
    assert [r.instance_id for r in merged] == ["fine-1", "gen-1"]


def test_merge_threshold_is_strict():
    # IoU exactly at the threshold keeps the general record
    general = [record("gen-1", "img", block_mask(10, 20, 0, 5, 0, 20))]
    fine = [record("fine-1", "img", block_mask(10, 20, 0, 5, 0, 16), source="fine")]
    assert abs(iou(general[0].mask, fine[0].mask) - 0.8) < 1e-12
    merged = merge_sources(general, fine, MergeConfig(iou_threshold=0.8))
    assert len(merged) == 2


def test_merge_counts_and_cross_image_isolation():
    m = block_mask(10, 20, 0, 5, 0, 20)
    general = [
        record("gen-1", "img-1", m),
        record("gen-2", "img-2", m),
        record("gen-3", "img-3", m),
    ]
    fine = [
        record("fine-1", "img-1", block_mask(10, 20, 0, 5, 0, 19), source="fine"),
        record("fine-2", "img-9", m.copy(), source="fine"),  # other image
    ]
    merged = merge_sources(general, fine)
    assert len(merged) == 4
    assert [r.instance_id for r in merged] == ["fine-1", "fine-2", "gen-2", "gen-3"]


def test_merge_idempotent():
    rng = np.random.default_rng(SEED + 1)
    general, fine = [], []
    for i in range(12):
        img_ref = f"img-{i % 4}"
        r0, c0 = rng.integers(0, 5, size=2)
        mask = block_mask(12, 12, r0, r0 + rng.integers(3, 7),
                          c0, c0 + rng.integers(3, 7))
        if i % 3 == 0:
            fine.append(record(f"fine-{i}", img_ref, mask, source="fine"))
        else:
            general.append(record(f"gen-{i}", img_ref, mask))
    merged = merge_sources(general, fine)
    again = merge_sources(merged, fine)
    assert [r.instance_id for r in again] == [r.instance_id for r in merged]


def test_merge_matches_pairwise_oracle():
    rng = np.random.default_rng(SEED + 2)
    cfg = MergeConfig(iou_threshold=0.8)
    general, fine = [], []
    for i in range(20):
        img_ref = f"img-{i % 4}"
        r0, c0 = rng.integers(0, 4, size=2)
        mask = block_mask(10, 10, r0, r0 + rng.integers(4, 7),
                          c0, c0 + rng.integers(4, 7))
        rec = record(f"r-{i:02d}", img_ref, mask,
                     source="fine" if rng.random() < 0.5 else "general")
        (fine if rec.source == "fine" else general).append(rec)

    expected = {r.instance_id for r in fine}
    for g in general:
        rivals = [f for f in fine if f.image_ref == g.image_ref]
        if all(iou(g.mask, f.mask) <= cfg.iou_threshold for f in rivals):
            expected.add(g.instance_id)
    merged = merge_sources(general, fine, cfg)
    assert {r.instance_id for r in merged} == expected


def test_synthetic_deterministic_and_valid():
    a = make_synthetic_suite("two_color_shapes", n=4, seed=SEED, size=48)
    b = make_synthetic_suite("two_color_shapes", n=4, seed=SEED, size=48)
    assert len(a) == 4
    for ra, rb in zip(a, b):
        assert ra.instance_id == rb.instance_id
        assert np.array_equal(ra.image, rb.image)
        assert np.array_equal(ra.mask, rb.mask)
        assert ra.mask.any()
        assert ra.image.shape == (48, 48, 3)
    c = make_synthetic_suite("two_color_shapes", n=4, seed=SEED + 1, size=48)
    assert not np.array_equal(a[0].mask, c[0].mask) or not np.array_equal(
        a[0].image, c[0].image)


def test_synthetic_two_color_separation():
    for rec in make_synthetic_suite("two_color_shapes", n=5, seed=SEED, size=48):
        fg = rec.image[rec.mask != 0].mean(axis=0)
        bg = rec.image[rec.mask == 0].mean(axis=0)
        assert np.linalg.norm(fg - bg) >= 60.0


def test_synthetic_textured_differs_from_flat():
    flat = make_synthetic_suite("two_color_shapes", n=2, seed=SEED, size=48)
    tex = make_synthetic_suite("textured_shapes", n=2, seed=SEED, size=48)
    # texture shows up as per-region pixel spread well above the noise floor
    for rec in tex:
        fg_std = rec.image[rec.mask != 0].astype(np.float64).std(axis=0).max()
        assert fg_std > 6.0
    assert not np.array_equal(flat[0].image, tex[0].image)


def test_synthetic_argument_validation():
    with pytest.raises(ValueError):
        make_synthetic_suite("gradient_shapes", n=2, seed=0)
    with pytest.raises(ValueError):
        make_synthetic_suite("two_color_shapes", n=0, seed=0)
