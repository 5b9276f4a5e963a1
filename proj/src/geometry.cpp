#include "tempogs/geometry.hpp"

#include <cmath>

namespace tempogs {

void Camera::validate() const {
    if (width < 16 || height < 16) {
        throw std::invalid_argument("camera image size must be at least 16x16");
    }
    if (!(fx > 0.0) || !(fy > 0.0)) {
        throw std::invalid_argument("camera focal lengths must be positive");
    }
    const Mat3 rtr = rotation.transpose() * rotation;
    if ((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
        throw std::invalid_argument("camera rotation is not orthonormal");
    }
    if (std::abs(rotation.determinant() - 1.0) > 1e-9) {
        throw std::invalid_argument("camera rotation determinant is not +1");
    }
}

void SimilarityTransform::validate() const {
    if (!(scale > 0.0)) {
        throw std::invalid_argument("similarity scale must be positive");
    }
    const Mat3 rtr = rotation.transpose() * rotation;
    if ((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
        std::abs(rotation.determinant() - 1.0) > 1e-9) {
        throw std::invalid_argument("similarity rotation is not a proper rotation");
    }
}

void PointCloud::validate() const {
    if (has_colors() && colors.size() != points.size()) {
        throw std::invalid_argument("point cloud colors/points length mismatch");
    }
    for (const Vec3& p : points) {
        if (!p.allFinite()) throw std::invalid_argument("point cloud contains non-finite point");
    }
}

double PointCloud::extent() const {
    if (points.empty()) return 0.0;
    Vec3 lo = points.front(), hi = points.front();
    for (const Vec3& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return (hi - lo).norm();
}

std::optional<Vec2> project(const Camera& camera, const Vec3& point) {
    const Vec3 q = camera.rotation * point + camera.translation;
    if (q.z() <= kBehindCameraZ) return std::nullopt;
    return Vec2(camera.fx * q.x() / q.z() + camera.cx, camera.fy * q.y() / q.z() + camera.cy);
}

PointCloud apply_similarity(const SimilarityTransform& s, const PointCloud& cloud) {
    PointCloud out;
    out.points.reserve(cloud.points.size());
    for (const Vec3& p : cloud.points) out.points.push_back(s.apply(p));
    out.colors = cloud.colors;
    return out;
}

Camera apply_similarity_to_camera(const SimilarityTransform& s, const Camera& camera) {
    // With p' = s*S_rot*p + S_t the camera-space point of p' under the new pose
    // equals s times the old camera-space point of p, and pinhole projection is
    // invariant to that positive depth scaling.
    Camera out = camera;
    out.rotation = camera.rotation * s.rotation.transpose();
    out.translation = s.scale * camera.translation - out.rotation * s.translation;
    return out;
}

double rotation_angle_deg(const Mat3& a, const Mat3& b) {
    const Mat3 d = a.transpose() * b;
    const double c = std::clamp((d.trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c) * 180.0 / EIGEN_PI;
}

Mat3 rotation_about_axis(const Vec3& axis, double angle_rad) {
    return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

}  // namespace tempogs
