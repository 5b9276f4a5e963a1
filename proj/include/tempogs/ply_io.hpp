#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tempogs/geometry.hpp"

namespace tempogs {

// Generic vertex-table PLY support, enough for point clouds and splat models.
// Writing always emits binary_little_endian with float64 properties, which
// round-trips every finite value bit-exactly. Reading accepts ascii and
// binary_little_endian with float32/float64/uchar properties.

struct PlyTable {
    std::vector<std::string> properties;
    std::vector<std::vector<double>> rows;  // rows.size() x properties.size()

    int find(const std::string& name) const {
        for (size_t i = 0; i < properties.size(); ++i) {
            if (properties[i] == name) return static_cast<int>(i);
        }
        return -1;
    }
};

void write_ply(const std::filesystem::path& path, const PlyTable& table);
PlyTable read_ply(const std::filesystem::path& path);

// Point cloud convenience wrappers: properties x,y,z[,red,green,blue].
void save_point_cloud(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud load_point_cloud(const std::filesystem::path& path);

}  // namespace tempogs
