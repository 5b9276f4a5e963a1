#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <vector>

namespace tempogs {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;

// Pinhole camera with a world->camera rigid pose. x_cam = rotation * p + translation.
struct Camera {
    int id = 0;
    int width = 0;
    int height = 0;
    double fx = 0, fy = 0;
    double cx = 0, cy = 0;
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();
    std::string image_path;

    Vec3 center() const { return -(rotation.transpose() * translation); }
    void validate() const;
};

// p -> scale * rotation * p + translation, scale > 0.
struct SimilarityTransform {
    double scale = 1.0;
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static SimilarityTransform identity() { return {}; }

    Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }

    SimilarityTransform inverse() const {
        SimilarityTransform inv;
        inv.scale = 1.0 / scale;
        inv.rotation = rotation.transpose();
        inv.translation = -(inv.scale * (inv.rotation * translation));
        return inv;
    }

    // this ∘ other: apply `other` first.
    SimilarityTransform compose(const SimilarityTransform& other) const {
        SimilarityTransform out;
        out.scale = scale * other.scale;
        out.rotation = rotation * other.rotation;
        out.translation = scale * (rotation * other.translation) + translation;
        return out;
    }

    void validate() const;
};

struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> colors;  // empty or same length as points, RGB in [0,1]

    size_t size() const { return points.size(); }
    bool has_colors() const { return !colors.empty(); }
    void validate() const;

    // Diagonal of the axis-aligned bounding box; 0 for empty clouds.
    double extent() const;
};

// A 2D observation in a t0 view of a point in the dense tn cloud.
struct Match2D3D {
    int view_id = 0;
    Vec2 pixel = Vec2::Zero();
    size_t point_index = 0;
};

inline constexpr double kBehindCameraZ = 1e-8;

// Pinhole projection; nullopt when the point is at or behind the camera plane.
std::optional<Vec2> project(const Camera& camera, const Vec3& point);

PointCloud apply_similarity(const SimilarityTransform& s, const PointCloud& cloud);

// Returns a camera that maps S-transformed world points to the same pixels the
// input camera maps the original points to: R' = R * S_rotᵀ, t' = s*t - R'*S_t.
Camera apply_similarity_to_camera(const SimilarityTransform& s, const Camera& camera);

// Angle in degrees between two rotations.
double rotation_angle_deg(const Mat3& a, const Mat3& b);

Mat3 rotation_about_axis(const Vec3& axis, double angle_rad);

}  // namespace tempogs
