import json

import numpy as np
import pytest
from PIL import Image

from svadapters import writers


class TestTensorWriters:
    def test_point_map_layout(self, tmp_path):
        path = tmp_path / "pm.npy"
        writers.write_point_map(path, np.zeros((4, 6, 3)))
        back = np.load(path)
        assert back.dtype == np.float32
        assert back.shape == (4, 6, 3)

    def test_depth_gets_channel_axis(self, tmp_path):
        path = tmp_path / "d.npy"
        writers.write_depth(path, np.ones((4, 6)))
        assert np.load(path).shape == (4, 6, 1)

    def test_bad_point_map_shape_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            writers.write_point_map(tmp_path / "x.npy", np.zeros((4, 6, 2)))

    def test_mask_round_trip(self, tmp_path):
        raw = np.array([[0, 1], [255, 7]], dtype=np.uint8)
        path = tmp_path / "m.png"
        writers.write_mask(path, raw)
        img = Image.open(path)
        assert img.mode == "L"
        assert np.array_equal(np.asarray(img), raw)


class TestFragments:
    def test_partial_entries_not_published(self, tmp_path):
        writers.update_fragments(tmp_path, "img0", {"mask_path": "img0_mask.png"})
        manifest = json.loads((tmp_path / writers.MANIFEST_NAME).read_text())
        assert manifest == []
        fragments = json.loads((tmp_path / writers.FRAGMENTS_NAME).read_text())
        assert fragments["img0"]["mask_path"] == "img0_mask.png"

    def test_complete_entries_published_sorted(self, tmp_path):
        writers.update_fragments(tmp_path, "b", {"mask_path": "b.png"})
        writers.update_fragments(tmp_path, "a", {"mask_path": "a.png"})
        writers.update_fragments(tmp_path, "b", {"point_map_path": "b.npy",
                                                 "camera_height_m": 2.5})
        writers.update_fragments(tmp_path, "a", {"point_map_path": "a.npy",
                                                 "camera_height_m": 2.5})
        manifest = json.loads((tmp_path / writers.MANIFEST_NAME).read_text())
        assert [e["image_id"] for e in manifest] == ["a", "b"]
        assert manifest[0]["point_map_path"] == "a.npy"
        assert manifest[0]["mask_path"] == "a.png"
