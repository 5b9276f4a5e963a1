#include "tempogs/ply_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace tempogs {

namespace {

enum class PropType { kFloat64, kFloat32, kUchar };

PropType parse_type(const std::string& t) {
    if (t == "double" || t == "float64") return PropType::kFloat64;
    if (t == "float" || t == "float32") return PropType::kFloat32;
    if (t == "uchar" || t == "uint8") return PropType::kUchar;
    throw std::runtime_error("unsupported PLY property type: " + t);
}

}  // namespace

void write_ply(const std::filesystem::path& path, const PlyTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << "ply\nformat binary_little_endian 1.0\n";
    out << "element vertex " << table.rows.size() << "\n";
    for (const auto& p : table.properties) out << "property double " << p << "\n";
    out << "end_header\n";
    for (const auto& row : table.rows) {
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

PlyTable read_ply(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());

    std::string line;
    std::getline(in, line);
    if (line != "ply" && line != "ply\r") throw std::runtime_error("not a PLY file: " + path.string());

    bool binary = false;
    size_t vertex_count = 0;
    PlyTable table;
    std::vector<PropType> types;
    bool in_vertex_element = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "comment") continue;
        if (tok == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "binary_little_endian") binary = true;
            else if (fmt == "ascii") binary = false;
            else throw std::runtime_error("unsupported PLY format: " + fmt);
        } else if (tok == "element") {
            std::string name;
            size_t count;
            ls >> name >> count;
            in_vertex_element = (name == "vertex");
            if (in_vertex_element) vertex_count = count;
            else if (count > 0) throw std::runtime_error("unsupported non-vertex PLY element: " + name);
        } else if (tok == "property") {
            if (!in_vertex_element) continue;
            std::string type, name;
            ls >> type >> name;
            if (type == "list") throw std::runtime_error("list properties not supported");
            types.push_back(parse_type(type));
            table.properties.push_back(name);
        } else if (tok == "end_header") {
            break;
        }
    }

    table.rows.resize(vertex_count, std::vector<double>(table.properties.size(), 0.0));
    if (binary) {
        for (auto& row : table.rows) {
            for (size_t c = 0; c < types.size(); ++c) {
                switch (types[c]) {
                    case PropType::kFloat64: {
                        double v;
                        in.read(reinterpret_cast<char*>(&v), sizeof(v));
                        row[c] = v;
                        break;
                    }
                    case PropType::kFloat32: {
                        float v;
                        in.read(reinterpret_cast<char*>(&v), sizeof(v));
                        row[c] = v;
                        break;
                    }
                    case PropType::kUchar: {
                        unsigned char v;
                        in.read(reinterpret_cast<char*>(&v), sizeof(v));
                        row[c] = v;
                        break;
                    }
                }
            }
        }
    } else {
        for (auto& row : table.rows) {
            for (double& v : row) {
                if (!(in >> v)) throw std::runtime_error("truncated ascii PLY: " + path.string());
            }
        }
    }
    if (!in) throw std::runtime_error("truncated PLY: " + path.string());
    return table;
}

void save_point_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
    cloud.validate();
    PlyTable table;
    table.properties = {"x", "y", "z"};
    if (cloud.has_colors()) {
        table.properties.insert(table.properties.end(), {"red", "green", "blue"});
    }
    table.rows.reserve(cloud.size());
    for (size_t i = 0; i < cloud.size(); ++i) {
        std::vector<double> row = {cloud.points[i].x(), cloud.points[i].y(), cloud.points[i].z()};
        if (cloud.has_colors()) {
            row.insert(row.end(),
                       {cloud.colors[i].x(), cloud.colors[i].y(), cloud.colors[i].z()});
        }
        table.rows.push_back(std::move(row));
    }
    write_ply(path, table);
}

PointCloud load_point_cloud(const std::filesystem::path& path) {
    const PlyTable table = read_ply(path);
    const int ix = table.find("x"), iy = table.find("y"), iz = table.find("z");
    if (ix < 0 || iy < 0 || iz < 0) {
        throw std::runtime_error("PLY missing x/y/z properties: " + path.string());
    }
    const int ir = table.find("red"), ig = table.find("green"), ib = table.find("blue");
    const bool has_rgb = ir >= 0 && ig >= 0 && ib >= 0;
    PointCloud cloud;
    cloud.points.reserve(table.rows.size());
    if (has_rgb) cloud.colors.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        cloud.points.emplace_back(row[ix], row[iy], row[iz]);
        if (has_rgb) {
            Vec3 c(row[ir], row[ig], row[ib]);
            if (c.maxCoeff() > 1.0 + 1e-12) c /= 255.0;  // uchar-encoded colors
            cloud.colors.push_back(c);
        }
    }
    return cloud;
}

}  // namespace tempogs
