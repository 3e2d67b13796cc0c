# -*- coding: utf-8 -*-
__copyright__ = "Copyright (c) 2026 splat-camo contributors"

import os
import sys
import tempfile
import unittest

import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from splatcamo import Packer
from splatcamo.errors import CloudParseError, PreconditionError, ProjectionError, StructureError
from splatcamo.scene import *
from splatcamo.sh_color import SHOrder


def random_cloud(rng, n, order=SHOrder.ONE):
    q = rng.normal(size=(n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    return SplatCloud(
        means=rng.uniform(-1.0, 1.0, size=(n, 3)),
        scales=rng.uniform(0.1, 0.5, size=(n, 3)),
        rotations=q,
        opacities=rng.uniform(0.0, 1.0, size=n),
        sh=rng.normal(0.0, 0.3, size=(n, 3, order.coeff_count)),
        sh_order=order,
    )


class CloudFileTest(unittest.TestCase):
    def setUp(self) -> None:
        self.__rng = np.random.default_rng(5)
        self.__dir = tempfile.mkdtemp()
        self.__path = os.path.join(self.__dir, "cloud.splat")

    def test_round_trip(self):
        cloud = random_cloud(self.__rng, 17, SHOrder.TWO)
        save_cloud(cloud, self.__path)
        self.assertTrue(load_cloud(self.__path).structurally_equal(cloud))

    def test_record_layout(self):
        cloud = random_cloud(self.__rng, 3, SHOrder.ZERO)
        save_cloud(cloud, self.__path)
        header = 4 + 2 + 2 + 2 + 4
        self.assertEqual(os.path.getsize(self.__path), header + 3 * Packer.float64_array_size(14))

    def test_truncated_record(self):
        save_cloud(random_cloud(self.__rng, 4), self.__path)
        with open(self.__path, 'rb') as f:
            data = f.read()
        with open(self.__path, 'wb') as f:
            f.write(data[:-8])
        with self.assertRaises(CloudParseError) as ctx:
            load_cloud(self.__path)
        self.assertEqual(ctx.exception.context["index"], 3)

    def test_declared_count_exceeds_file(self):
        header = b''.join([Packer.pack_magic(b'SPLT'), Packer.pack_uint16(1), Packer.pack_uint16(0),
                           Packer.pack_uint16(SHOrder.ZERO.rgb_count), Packer.pack_uint32(0xFFFFFFFF)])
        with open(self.__path, 'wb') as f:
            f.write(header + b'\x00' * 100)
        with self.assertRaises(CloudParseError) as ctx:
            load_cloud(self.__path)
        self.assertEqual(ctx.exception.context["index"], 0)

    def test_bad_magic(self):
        with open(self.__path, 'wb') as f:
            f.write(b'NOPE' + b'\x00' * 32)
        with self.assertRaises(CloudParseError):
            load_cloud(self.__path)

    def test_invalid_record_reports_index(self):
        cloud = random_cloud(self.__rng, 3, SHOrder.ZERO)
        save_cloud(cloud, self.__path)
        with open(self.__path, 'rb') as f:
            data = bytearray(f.read())
        # opacity of splat 1 -> 2.0
        offset = 14 + Packer.float64_array_size(14) + Packer.float64_array_size(10)
        data[offset:offset + 8] = Packer.pack_float64_array([2.0])
        with open(self.__path, 'wb') as f:
            f.write(bytes(data))
        with self.assertRaises(CloudParseError) as ctx:
            load_cloud(self.__path)
        self.assertEqual(ctx.exception.context["index"], 1)

    def test_text_export(self):
        cloud = random_cloud(self.__rng, 2)
        path = os.path.join(self.__dir, "cloud.jsonl")
        export_cloud_text(cloud, path)
        with open(path, 'r', encoding='utf-8') as f:
            self.assertEqual(len(f.readlines()), 3)


class SplatCloudTest(unittest.TestCase):
    def setUp(self) -> None:
        self.__rng = np.random.default_rng(9)

    def test_invalid_fields(self):
        cloud = random_cloud(self.__rng, 4)
        scales = np.array(cloud.scales)
        scales[2, 1] = 0.0
        with self.assertRaises(StructureError) as ctx:
            cloud.replace(scales=scales)
        self.assertEqual(ctx.exception.context["index"], 2)
        with self.assertRaises(StructureError):
            cloud.replace(rotations=2.0 * cloud.rotations)
        with self.assertRaises(StructureError):
            cloud.replace(sh=np.zeros((4, 3, 9)))

    def test_arrays_are_read_only(self):
        cloud = random_cloud(self.__rng, 2)
        with self.assertRaises(ValueError):
            cloud.means[0, 0] = 1.0

    def test_splats_round_trip(self):
        cloud = random_cloud(self.__rng, 5)
        self.assertTrue(SplatCloud.from_splats(cloud.splats, cloud.sh_order).structurally_equal(cloud))


class CameraTest(unittest.TestCase):
    def setUp(self) -> None:
        self.__intr = Intrinsics.from_fov(50.0, 64, 48)

    def test_look_at(self):
        pose = CameraPose.look_at([0.0, 0.0, 10.0], [0.0, 0.0, 0.0], self.__intr)
        np.testing.assert_allclose(pose.forward, [0.0, 0.0, -1.0])
        np.testing.assert_allclose(pose.up, [0.0, 1.0, 0.0])
        np.testing.assert_allclose(pose.right, [1.0, 0.0, 0.0])

    def test_look_straight_down(self):
        pose = CameraPose.look_at([0.0, 5.0, 0.0], [0.0, 0.0, 0.0], self.__intr)
        np.testing.assert_allclose(pose.forward, [0.0, -1.0, 0.0])
        np.testing.assert_allclose(pose.up, [0.0, 0.0, -1.0])

    def test_principal_point_defaults_to_centre(self):
        self.assertEqual((self.__intr.cx, self.__intr.cy), (32.0, 24.0))
        pose = CameraPose.look_at([0.0, 0.0, 10.0], [0.0, 0.0, 0.0], self.__intr)
        x, y, depth = project_point(pose, [0.0, 0.0, 0.0])
        self.assertAlmostEqual(x, 32.0)
        self.assertAlmostEqual(y, 24.0)
        self.assertAlmostEqual(depth, 10.0)

    def test_image_axes(self):
        pose = CameraPose.look_at([0.0, 0.0, 10.0], [0.0, 0.0, 0.0], self.__intr)
        x, y, _ = project_point(pose, [0.0, 1.0, 0.0])
        self.assertLess(y, 24.0)
        x, _, _ = project_point(pose, [1.0, 0.0, 0.0])
        self.assertGreater(x, 32.0)

    def test_off_axis_pinhole(self):
        pose = CameraPose.look_at([0.0, 0.0, 10.0], [0.0, 0.0, 0.0], self.__intr)
        x, y, depth = project_point(pose, [1.0, 2.0, 0.0])
        f = self.__intr.focal_px
        self.assertAlmostEqual(x, 32.0 + f * 1.0 / 10.0)
        self.assertAlmostEqual(y, 24.0 - f * 2.0 / 10.0)
        self.assertAlmostEqual(depth, 10.0)

    def test_doubling_focal_doubles_offsets(self):
        point = [0.7, -0.4, 1.5]
        near = CameraPose.look_at([0.0, 0.0, 10.0], [0.0, 0.0, 0.0], self.__intr)
        far = CameraPose.look_at([0.0, 0.0, 10.0], [0.0, 0.0, 0.0], self.__intr.scaled_focal(2.0))
        x1, y1, _ = project_point(near, point)
        x2, y2, _ = project_point(far, point)
        self.assertAlmostEqual(x2 - 32.0, 2.0 * (x1 - 32.0))
        self.assertAlmostEqual(y2 - 24.0, 2.0 * (y1 - 24.0))

    def test_point_behind_camera(self):
        pose = CameraPose.look_at([0.0, 0.0, 10.0], [0.0, 0.0, 0.0], self.__intr)
        with self.assertRaises(ProjectionError):
            project_point(pose, [0.0, 0.0, 20.0])

    def test_non_orthogonal_axes(self):
        with self.assertRaises(PreconditionError):
            CameraPose([0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.6, 0.8], self.__intr)


class BoxTest(unittest.TestCase):
    def setUp(self) -> None:
        self.__intr = Intrinsics.from_fov(50.0, 64, 64)
        self.__aabb = AABB.from_center_size([0.0, 0.0, 0.0], [1.0, 1.0, 1.0])

    def test_symmetric_bbox(self):
        pose = CameraPose.look_at([0.0, 0.0, 10.0], [0.0, 0.0, 0.0], self.__intr)
        box = object_bbox(pose, self.__aabb)
        half = self.__intr.focal_px * 0.5 / 9.5
        self.assertAlmostEqual(box.x, 32.0 - half)
        self.assertAlmostEqual(box.y, 32.0 - half)
        self.assertAlmostEqual(box.w, 2.0 * half)

    def test_behind_camera(self):
        pose = CameraPose.look_at([0.0, 0.0, 10.0], [0.0, 0.0, 20.0], self.__intr)
        self.assertIsNone(object_bbox(pose, self.__aabb))

    def test_clipped_to_image(self):
        pose = CameraPose.look_at([0.0, 0.0, 1.0], [0.0, 0.0, 0.0], self.__intr)
        box = object_bbox(pose, AABB.from_center_size([0.0, 0.0, 0.0], [10.0, 10.0, 1.0]))
        self.assertEqual(box.as_list(), [0.0, 0.0, 64.0, 64.0])

    def test_partly_clipped_matches_dense_samples(self):
        pose = CameraPose.look_at([0.0, 0.0, 5.0], [0.0, 0.0, 0.0], self.__intr)
        aabb = AABB.from_center_size([1.5, 0.3, 0.0], [2.0, 1.0, 1.0])
        box = object_bbox(pose, aabb)
        grid = np.linspace(0.0, 1.0, 25)
        lo, hi = np.array(aabb.minimum), np.array(aabb.maximum)
        xs, ys = [], []
        for u in grid:
            for v in grid:
                for w in grid:
                    x, y, _ = project_point(pose, lo + (hi - lo) * np.array([u, v, w]))
                    xs.append(x)
                    ys.append(y)
        xs = np.clip(xs, 0.0, 64.0)
        ys = np.clip(ys, 0.0, 64.0)
        self.assertAlmostEqual(box.x1, 64.0)
        self.assertLessEqual(abs(box.x - xs.min()), 1.0)
        self.assertLessEqual(abs(box.y - ys.min()), 1.0)
        self.assertLessEqual(abs(box.x1 - xs.max()), 1.0)
        self.assertLessEqual(abs(box.y1 - ys.max()), 1.0)

    def test_degenerate_box(self):
        with self.assertRaises(PreconditionError):
            Box2D(0.0, 0.0, 0.0, 3.0)


class DatasetTest(unittest.TestCase):
    def setUp(self) -> None:
        self.__dir = tempfile.mkdtemp()
        rng = np.random.default_rng(2)
        intr = Intrinsics.from_fov(60.0, 8, 6)
        poses = [CameraPose.look_at([np.sin(a) * 4.0, 1.0, np.cos(a) * 4.0], [0.0, 0.0, 0.0], intr)
                 for a in np.linspace(0.0, 1.0, 3)]
        self.__data = PosedImageSet(tuple(PosedImage(rng.random((6, 8, 3)), p) for p in poses))

    def test_default_names(self):
        self.assertEqual(self.__data.names, ["view_0000.png", "view_0001.png", "view_0002.png"])

    def test_round_trip(self):
        save_dataset(self.__data, self.__dir)
        loaded = load_dataset(self.__dir)
        self.assertEqual(loaded.names, self.__data.names)
        for a, b in zip(loaded, self.__data):
            self.assertEqual(a.pose, b.pose)
            self.assertLessEqual(np.max(np.abs(a.image - b.image)), 0.5 / 255.0 + 1e-12)

    def test_manifest_is_stable(self):
        path = os.path.join(self.__dir, MANIFEST_NAME)
        write_manifest(self.__data.poses, self.__data.names, path)
        with open(path, 'rb') as f:
            first = f.read()
        manifest = read_manifest(path)
        write_manifest([v.to_pose() for v in manifest.views], [v.file for v in manifest.views], path)
        with open(path, 'rb') as f:
            self.assertEqual(f.read(), first)

    def test_image_shape_mismatch(self):
        pose = self.__data[0].pose
        with self.assertRaises(PreconditionError):
            PosedImage(np.zeros((8, 6, 3)), pose)

    def test_duplicate_names(self):
        entry = self.__data[0]
        with self.assertRaises(PreconditionError):
            PosedImageSet((entry, PosedImage(entry.image, entry.pose, entry.name)))


if __name__ == '__main__':
    unittest.main()
