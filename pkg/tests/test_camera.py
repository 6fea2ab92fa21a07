import numpy as np
import pytest

from regaze.camera import CameraIntrinsics, distort_normalized, project, undistort_points

import oracles


def plain_cam(**kw):
    args = {"fx": 650.0, "fy": 650.0, "cx": 320.0, "cy": 240.0}
    args.update(kw)
    return CameraIntrinsics(**args)


def test_optical_axis_projects_to_principal_point():
    cam = plain_cam()
    for z in (1.0, 10.0, 600.0, 1e6):
        np.testing.assert_allclose(project(cam, [0.0, 0.0, z]), [320.0, 240.0])


def test_unit_normalized_coordinate():
    cam = plain_cam()
    u, v = project(cam, [1.0, 0.0, 1.0])
    assert u == 970.0
    assert v == 240.0


def test_projection_depth_homogeneous():
    cam = plain_cam()
    rng = np.random.default_rng(2)
    pts = np.column_stack(
        [rng.uniform(-100, 100, 50), rng.uniform(-100, 100, 50), rng.uniform(10, 500, 50)]
    )
    for lam in (2.0, 0.5, 7.3):
        np.testing.assert_allclose(project(cam, pts * lam), project(cam, pts), atol=1e-9)


def test_single_point_keeps_vector_shape():
    cam = plain_cam()
    assert project(cam, [1.0, 2.0, 3.0]).shape == (2,)
    assert project(cam, [[1.0, 2.0, 3.0]]).shape == (1, 2)


def test_behind_camera_rejected_with_index():
    cam = plain_cam()
    pts = [[0, 0, 5.0], [0, 0, -1.0]]
    with pytest.raises(ValueError, match="point 1"):
        project(cam, pts)
    with pytest.raises(ValueError):
        project(cam, [0.0, 0.0, 0.0])


def test_distortion_coefficients_zero_filled():
    cam = plain_cam(dist=[0.1])
    np.testing.assert_array_equal(cam.dist, [0.1, 0, 0, 0, 0])
    assert cam.has_distortion()
    assert not plain_cam().has_distortion()
    with pytest.raises(ValueError):
        plain_cam(dist=[0.1] * 6)


def test_focal_lengths_must_be_positive():
    with pytest.raises(ValueError):
        plain_cam(fx=0.0)
    with pytest.raises(ValueError):
        plain_cam(fy=-650.0)


def test_intrinsic_matrix_layout():
    cam = plain_cam(fx=600.0, fy=610.0)
    np.testing.assert_array_equal(
        cam.matrix, [[600.0, 0.0, 320.0], [0.0, 610.0, 240.0], [0.0, 0.0, 1.0]]
    )


def test_radial_distortion_projection_value():
    # hand-evaluated: r2=0.05, radial=1.005 at normalized (0.2, -0.1)
    cam = CameraIntrinsics(fx=600.0, fy=610.0, cx=320.0, cy=240.0, dist=[0.1])
    np.testing.assert_allclose(project(cam, [0.2, -0.1, 1.0]), [440.6, 178.695], atol=1e-12)


def test_full_distortion_model_value():
    # independently evaluated radial+tangential polynomial at (0.3, 0.2)
    cam = plain_cam(dist=[0.1, -0.05, 0.01, -0.02, 0.001])
    got = distort_normalized(cam, [[0.3, 0.2]])[0]
    np.testing.assert_allclose(
        got, [0.29864715909999995, 0.20213143939999995], atol=1e-15
    )


def test_undistort_identity_without_coefficients():
    cam = plain_cam()
    px = np.array([[100.0, 50.0], [320.0, 240.0], [0.0, 0.0]])
    np.testing.assert_array_equal(undistort_points(cam, px), px)


def test_principal_point_fixed_under_undistortion():
    cam = plain_cam(dist=[0.2, -0.1, 0.05, -0.05, 0.01])
    got = undistort_points(cam, [[320.0, 240.0]])
    np.testing.assert_allclose(got, [[320.0, 240.0]], atol=1e-9)


def test_distort_undistort_round_trip():
    rng = np.random.default_rng(9)
    for trial in range(20):
        # radial terms up to the contract bound; tangential terms stay in
        # the realistic range where the inversion is a contraction
        ks = rng.uniform(-0.2, 0.2, size=3)
        ps = rng.uniform(-0.01, 0.01, size=2)
        cam = plain_cam(dist=[ks[0], ks[1], ps[0], ps[1], ks[2]])
        # ideal normalized points with |r| <= 0.5
        r = rng.uniform(0, 0.5, size=200)
        theta = rng.uniform(0, 2 * np.pi, size=200)
        xy = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
        distorted_xy = distort_normalized(cam, xy)
        observed = np.column_stack(
            [cam.fx * distorted_xy[:, 0] + cam.cx, cam.fy * distorted_xy[:, 1] + cam.cy]
        )
        ideal = np.column_stack([cam.fx * xy[:, 0] + cam.cx, cam.fy * xy[:, 1] + cam.cy])
        recovered = undistort_points(cam, observed)
        assert np.max(np.abs(recovered - ideal)) < 1e-6


def test_undistort_warns_when_not_converging():
    # huge coefficients at a large radius defeat the fixed-point iteration
    cam = plain_cam(dist=[5.0, 5.0, 0.0, 0.0, 5.0])
    with pytest.warns(UserWarning, match="did not converge"):
        undistort_points(cam, [[900.0, 700.0]])


def test_projection_matches_pinhole_oracle():
    cam = plain_cam()
    rng = np.random.default_rng(4)
    pts = np.column_stack(
        [rng.uniform(-200, 200, 100), rng.uniform(-200, 200, 100), rng.uniform(100, 900, 100)]
    )
    np.testing.assert_allclose(
        project(cam, pts),
        oracles.project_pinhole(cam.fx, cam.fy, cam.cx, cam.cy, pts),
        atol=1e-9,
    )
