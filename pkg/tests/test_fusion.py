import numpy as np
import pytest

from probfuse import (
    ContextMapping,
    FusedFormatError,
    FusedTensor,
    ParameterError,
    ProbabilityMap,
    ShapeError,
    build_fused,
    read_fused,
    write_fused,
)


def pmap(rng, h, w):
    return ProbabilityMap(rng.random((h, w)).astype(np.float32), "eq1")


def rgb(rng, h, w):
    return rng.integers(0, 256, (h, w, 3), dtype=np.uint8)


class TestContextMapping:
    def test_direct(self):
        m = ContextMapping.direct(("ship", "plane"))
        assert m.channel_order == ("ship", "plane")
        assert dict(m.entries) == {"ship": ("ship",), "plane": ("plane",)}

    def test_indirect_default(self):
        m = ContextMapping.indirect()
        assert m.channel_order == ("harbor", "bridge", "roundabout")
        assert dict(m.entries)["harbor"] == ("ship",)
        assert set(dict(m.entries)["bridge"]) == {"small-vehicle", "large-vehicle"}
        assert set(dict(m.entries)["roundabout"]) == {"small-vehicle", "large-vehicle"}

    def test_single(self):
        m = ContextMapping.single("harbor")
        assert m.channel_order == ("harbor",)

    def test_validation(self):
        with pytest.raises(ParameterError):
            ContextMapping("bogus", (), ())
        with pytest.raises(ParameterError):
            ContextMapping("direct", (("a", ("a",)),), ("a", "a"))
        with pytest.raises(ParameterError):
            ContextMapping("single", (("a", ("a",)), ("b", ("b",))), ("a", "b"))

    def test_json_roundtrip(self):
        m = ContextMapping.indirect()
        assert ContextMapping.from_json(m.to_json()) == m


class TestBuildFused:
    def test_channel_layout_and_scaling(self, rng):
        image = rgb(rng, 4, 5)
        pm = pmap(rng, 4, 5)
        t = build_fused(image, [("harbor", pm)], ContextMapping.single("harbor"))
        assert t.channel_names == ("R", "G", "B", "harbor")
        assert t.data.shape == (4, 4, 5)
        np.testing.assert_allclose(t.data[0], image[:, :, 0] / 255.0, atol=1e-7)
        np.testing.assert_array_equal(t.data[3], pm.values)

    def test_missing_class_becomes_zero_channel(self, rng):
        t = build_fused(rgb(rng, 3, 3), [], ContextMapping.indirect())
        assert t.channel_names == ("R", "G", "B", "harbor", "bridge", "roundabout")
        np.testing.assert_array_equal(t.data[3:], np.zeros((3, 3, 3), np.float32))

    def test_order_follows_mapping_not_input(self, rng):
        maps = [("roundabout", pmap(rng, 2, 2)), ("harbor", pmap(rng, 2, 2))]
        t = build_fused(rgb(rng, 2, 2), maps, ContextMapping.indirect())
        np.testing.assert_array_equal(t.data[3], maps[1][1].values)
        np.testing.assert_array_equal(t.data[5], maps[0][1].values)

    def test_zero_context_channels(self, rng):
        t = build_fused(rgb(rng, 2, 2), [], ContextMapping.direct(()))
        assert t.channel_names == ("R", "G", "B")
        assert t.channels == 3

    def test_duplicate_map_rejected(self, rng):
        maps = [("harbor", pmap(rng, 2, 2)), ("harbor", pmap(rng, 2, 2))]
        with pytest.raises(ParameterError):
            build_fused(rgb(rng, 2, 2), maps, ContextMapping.single("harbor"))

    def test_shape_mismatch_rejected(self, rng):
        with pytest.raises(ShapeError):
            build_fused(rgb(rng, 4, 4), [("harbor", pmap(rng, 3, 4))],
                        ContextMapping.single("harbor"))
        with pytest.raises(ShapeError):
            build_fused(rng.random((4, 4)), [], ContextMapping.direct(()))


class TestFusedFile:
    def roundtrip(self, tensor, tmp_path):
        path = tmp_path / "t.fus"
        write_fused(tensor, path)
        back = read_fused(path)
        assert back.channel_names == tensor.channel_names
        assert back.data.dtype == np.float32
        np.testing.assert_array_equal(back.data, tensor.data)
        return path

    def test_roundtrip_bit_exact(self, rng, tmp_path):
        t = build_fused(rgb(rng, 6, 9), [("harbor", pmap(rng, 6, 9))],
                        ContextMapping.single("harbor"))
        self.roundtrip(t, tmp_path)

    def test_roundtrip_one_pixel(self, rng, tmp_path):
        t = build_fused(rgb(rng, 1, 1), [("harbor", pmap(rng, 1, 1))],
                        ContextMapping.single("harbor"))
        self.roundtrip(t, tmp_path)

    def test_roundtrip_rgb_only(self, rng, tmp_path):
        t = build_fused(rgb(rng, 2, 3), [], ContextMapping.direct(()))
        self.roundtrip(t, tmp_path)

    def test_deterministic_bytes(self, rng, tmp_path):
        t = build_fused(rgb(rng, 5, 4), [("bridge", pmap(rng, 5, 4))],
                        ContextMapping.single("bridge"))
        write_fused(t, tmp_path / "a.fus")
        write_fused(t, tmp_path / "b.fus")
        assert (tmp_path / "a.fus").read_bytes() == (tmp_path / "b.fus").read_bytes()

    def test_every_corrupted_byte_is_rejected(self, rng, tmp_path):
        t = build_fused(rgb(rng, 2, 2), [("harbor", pmap(rng, 2, 2))],
                        ContextMapping.single("harbor"))
        path = self.roundtrip(t, tmp_path)
        blob = bytearray(path.read_bytes())
        corrupt = tmp_path / "bad.fus"
        for pos in range(len(blob)):
            mutated = bytearray(blob)
            mutated[pos] ^= 0x40
            corrupt.write_bytes(bytes(mutated))
            with pytest.raises(FusedFormatError):
                read_fused(corrupt)

    def test_truncation_rejected(self, rng, tmp_path):
        t = build_fused(rgb(rng, 3, 3), [], ContextMapping.direct(()))
        path = self.roundtrip(t, tmp_path)
        blob = path.read_bytes()
        for cut in (0, 3, 10, len(blob) - 4, len(blob) - 1):
            (tmp_path / "cut.fus").write_bytes(blob[:cut])
            with pytest.raises(FusedFormatError):
                read_fused(tmp_path / "cut.fus")

    def test_trailing_garbage_rejected(self, rng, tmp_path):
        t = build_fused(rgb(rng, 3, 3), [], ContextMapping.direct(()))
        path = self.roundtrip(t, tmp_path)
        (tmp_path / "fat.fus").write_bytes(path.read_bytes() + b"\x00")
        with pytest.raises(FusedFormatError):
            read_fused(tmp_path / "fat.fus")

    def test_bad_magic_reports_offset_zero(self, rng, tmp_path):
        t = build_fused(rgb(rng, 2, 2), [], ContextMapping.direct(()))
        path = self.roundtrip(t, tmp_path)
        blob = bytearray(path.read_bytes())
        blob[:4] = b"JUNK"
        (tmp_path / "m.fus").write_bytes(bytes(blob))
        with pytest.raises(FusedFormatError) as exc:
            read_fused(tmp_path / "m.fus")
        assert exc.value.offset == 0

    def test_tensor_validation(self, rng):
        with pytest.raises(ParameterError):
            FusedTensor(("R", "G"), np.zeros((2, 2, 2), np.float32))
        with pytest.raises(ParameterError):
            FusedTensor(("R", "G", "B"), np.full((3, 2, 2), 2.0, np.float32))
        with pytest.raises(ShapeError):
            FusedTensor(("R", "G", "B"), np.zeros((2, 2), np.float32))
