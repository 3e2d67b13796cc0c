# -*- coding: utf-8 -*-
__copyright__ = "Copyright (c) 2026 splat-camo contributors"

import os
import sys
import unittest

import numpy as np
from pydantic import ValidationError

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from splatcamo.errors import TextureError
from splatcamo.synth import *
from splatcamo.textures import PALETTE, get_texture


def small_scene(**changes):
    fields = dict(ground_extent=3.0, ground_density=2.0,
                  target=TargetSpec(center=[0.0, 0.5, 0.0], size=[1.6, 1.0, 0.8], density=10.0))
    fields.update(changes)
    return SceneSpec(**fields)


def elevations(poses, look_at):
    offsets = np.array([p.position for p in poses]) - np.asarray(look_at)
    return np.degrees(np.arcsin(offsets[:, 1] / np.linalg.norm(offsets, axis=1)))


class SceneBuildTest(unittest.TestCase):
    def setUp(self) -> None:
        self.__spec = small_scene()

    def test_splat_count(self):
        built = build_scene(self.__spec)
        self.assertEqual(len(built.cloud), expected_splat_count(self.__spec))
        self.assertEqual(sum(len(v) for v in built.face_indices.values()), len(built.target_indices))

    def test_binding_changes_only_target_colours(self):
        benign = build_scene(self.__spec)
        adversarial = build_scene(self.__spec, {"top": "road"})
        self.assertTrue(benign.cloud.geometry_equal(adversarial.cloud))
        changed = np.flatnonzero(np.any(benign.cloud.sh != adversarial.cloud.sh, axis=(1, 2)))
        self.assertTrue(set(changed.tolist()) <= set(benign.face_indices[Face.top].tolist()))
        self.assertGreater(changed.size, 0)

    def test_rebuild_is_identical(self):
        self.assertTrue(build_scene(self.__spec).cloud.structurally_equal(build_scene(self.__spec).cloud))

    def test_target_bounds(self):
        built = build_scene(self.__spec)
        means = built.cloud.means[built.target_indices]
        self.assertTrue(np.all(means >= np.array(built.target_aabb.minimum) - 1e-12))
        self.assertTrue(np.all(means <= np.array(built.target_aabb.maximum) + 1e-12))

    def test_sh_order(self):
        cloud = build_scene(small_scene(sh_order=2)).cloud
        self.assertEqual(cloud.sh.shape[2], 9)
        self.assertTrue(np.all(cloud.sh[:, :, 1:] == 0.0))

    def test_zero_size_target(self):
        with self.assertRaises(ValidationError):
            TargetSpec(center=[0.0, 0.5, 0.0], size=[1.0, 0.0, 1.0])

    def test_target_off_ground(self):
        with self.assertRaises(ValidationError):
            small_scene(target=TargetSpec(center=[5.0, 0.5, 0.0], size=[1.0, 1.0, 1.0]))

    def test_unknown_texture(self):
        with self.assertRaises(TextureError):
            build_scene(self.__spec, {"front": "plaid"})

    def test_extra_boxes(self):
        spec = small_scene(extras=[ExtraBox(center=[2.0, 0.5, 2.0], size=[0.2, 1.0, 0.2], texture="pole")])
        self.assertEqual(len(build_scene(spec).cloud), expected_splat_count(spec))


class TextureTest(unittest.TestCase):
    def test_palette(self):
        for name in ("car-blue", "car-red", "car-gray", "road", "grass", "street", "stop-sign", "clock",
                     "soccer", "pole"):
            self.assertIn(name, PALETTE)

    def test_values_in_range(self):
        u, v = np.meshgrid(np.linspace(0.0, 1.0, 30), np.linspace(0.0, 1.0, 30))
        for texture in PALETTE.values():
            rgb = texture(u, v)
            self.assertEqual(rgb.shape, (30, 30, 3))
            self.assertTrue(np.all((rgb >= 0.0) & (rgb <= 1.0)))

    def test_unknown(self):
        with self.assertRaises(TextureError) as ctx:
            get_texture("plaid")
        self.assertEqual(ctx.exception.context["texture"], "plaid")


class LayoutTest(unittest.TestCase):
    def setUp(self) -> None:
        self.__look_at = [0.0, 0.75, 0.0]

    def test_hemisphere(self):
        poses = make_views(CaptureSpec(view_count=200, radius=10.0, look_at=self.__look_at))
        self.assertEqual(len(poses), 200)
        distances = [np.linalg.norm(p.position - np.asarray(self.__look_at)) for p in poses]
        np.testing.assert_allclose(distances, 10.0)
        self.assertTrue(np.all(elevations(poses, self.__look_at) >= 0.0))

    def test_hemisphere_minimum_elevation(self):
        poses = make_views(CaptureSpec(view_count=50, min_elevation_deg=20.0))
        self.assertTrue(np.all(elevations(poses, [0.0, 0.0, 0.0]) >= 20.0 - 1e-9))

    def test_views_look_at_target(self):
        for pose in make_views(CaptureSpec(view_count=20, look_at=self.__look_at)):
            to_target = np.asarray(self.__look_at) - pose.position
            np.testing.assert_allclose(pose.forward, to_target / np.linalg.norm(to_target), atol=1e-12)

    def test_arc(self):
        poses = make_views(CaptureSpec(layout=Layout.arc, view_count=144, radius=4.0, arc_span_deg=90.0))
        self.assertEqual(len(poses), 144)
        np.testing.assert_allclose(poses[0].position, [0.0, 0.0, 4.0], atol=1e-12)
        np.testing.assert_allclose(poses[-1].position, [4.0, 0.0, 0.0], atol=1e-12)

    def test_full_circle_arc_has_no_duplicate(self):
        poses = make_views(CaptureSpec(layout=Layout.arc, view_count=8, arc_span_deg=360.0))
        positions = np.array([p.position for p in poses])
        gaps = np.linalg.norm(positions - np.roll(positions, 1, axis=0), axis=1)
        np.testing.assert_allclose(gaps, gaps[0])

    def test_ring_altitude(self):
        poses = make_views(CaptureSpec(layout=Layout.ring, view_count=24, radius=10.0, altitude=16.0,
                                       look_at=self.__look_at))
        heights = [p.position[1] - self.__look_at[1] for p in poses]
        np.testing.assert_allclose(heights, 16.0)
        horizontal = [np.hypot(p.position[0], p.position[2]) for p in poses]
        np.testing.assert_allclose(horizontal, 10.0)

    def test_overhead(self):
        spec = CaptureSpec(layout=Layout.overhead, view_count=160, radii=[11.0, 12.0, 13.0, 14.0, 15.0],
                           look_at=self.__look_at, seed=1)
        poses = make_views(spec)
        self.assertEqual(len(poses), 160)
        self.assertTrue(np.all(elevations(poses, self.__look_at) >= 60.0 - 1e-9))
        distances = [np.linalg.norm(p.position - np.asarray(self.__look_at)) for p in poses]
        np.testing.assert_allclose(distances[:5], [11.0, 12.0, 13.0, 14.0, 15.0])
        again = make_views(spec)
        self.assertTrue(all(a == b for a, b in zip(poses, again)))

    def test_view_direction(self):
        np.testing.assert_allclose(view_direction(0.0, 0.0), [0.0, 0.0, 1.0])
        np.testing.assert_allclose(view_direction(np.pi / 2, 0.0), [1.0, 0.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(view_direction(0.0, np.pi / 2), [0.0, 1.0, 0.0], atol=1e-12)

    def test_invalid_spec(self):
        with self.assertRaises(ValidationError):
            CaptureSpec(view_count=0)
        with self.assertRaises(ValidationError):
            CaptureSpec(layout=Layout.overhead, radii=[10.0, -1.0])

    def test_hemisphere_spacing(self):
        count = 200
        poses = make_views(CaptureSpec(view_count=count, radius=10.0))
        dirs = np.array([p.position for p in poses]) / 10.0
        angles = np.arccos(np.clip(dirs @ dirs.T, -1.0, 1.0))
        np.fill_diagonal(angles, np.inf)
        uniform = np.sqrt(2.0 * np.pi / count)
        self.assertGreaterEqual(np.min(angles), 0.5 * uniform)

    def test_hemisphere_forward_points_at_target(self):
        for pose in make_views(CaptureSpec(view_count=200, radius=10.0, look_at=self.__look_at)):
            to_target = np.asarray(self.__look_at) - pose.position
            angle = np.arctan2(np.linalg.norm(np.cross(pose.forward, to_target)), pose.forward @ to_target)
            self.assertLessEqual(angle, 1e-6)

    def test_arc_azimuth_step(self):
        poses = make_views(CaptureSpec(layout=Layout.arc, view_count=144, radius=4.0, arc_span_deg=90.0))
        azimuths = np.degrees([np.arctan2(p.position[0], p.position[2]) for p in poses])
        np.testing.assert_allclose(np.diff(azimuths), 90.0 / 143.0, atol=1e-9)

    def test_overhead_test_views_are_held_out(self):
        train_poses = make_views(CaptureSpec(view_count=200, radius=10.0, min_elevation_deg=5.0,
                                             look_at=self.__look_at))
        test_poses = make_views(CaptureSpec(layout=Layout.overhead, view_count=160, look_at=self.__look_at,
                                            radii=[11.0, 12.0, 13.0, 14.0, 15.0], seed=1))
        train_positions = np.array([p.position for p in train_poses])
        for pose in test_poses:
            self.assertFalse(any(pose == other for other in train_poses))
            self.assertGreater(np.min(np.linalg.norm(train_positions - pose.position, axis=1)), 0.5)


if __name__ == '__main__':
    unittest.main()
