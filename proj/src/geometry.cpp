#include "swflow/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "swflow/csvio.hpp"
#include "swflow/errors.hpp"

namespace swflow {

namespace {

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * norm(cross(b - a, c - a));
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t line, const std::string& msg) {
    throw input_error(path + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

Vec3 centroid(const PointSet& ps) {
    Vec3 s;
    for (const Vec3& p : ps.points) s += p;
    return s / static_cast<double>(ps.points.size());
}

TriMesh::TriMesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
    if (vertices_.empty()) throw input_error("mesh has no vertices");
    if (faces_.empty()) throw input_error("mesh has no faces");
    const int nv = static_cast<int>(vertices_.size());
    for (const Vec3& v : vertices_)
        if (!is_finite(v)) throw input_error("mesh has non-finite vertex coordinates");
    face_areas_.reserve(faces_.size());
    for (std::size_t f = 0; f < faces_.size(); ++f) {
        const auto& [i, j, k] = faces_[f];
        if (i < 0 || j < 0 || k < 0 || i >= nv || j >= nv || k >= nv)
            throw input_error("face " + std::to_string(f) + " references a vertex out of range");
        if (i == j || j == k || i == k)
            throw input_error("face " + std::to_string(f) + " repeats a vertex index");
        const double area = triangle_area(vertices_[i], vertices_[j], vertices_[k]);
        face_areas_.push_back(area);
        total_area_ += area;
    }
    if (!(total_area_ > 0.0)) throw input_error("mesh has zero total surface area");
}

std::size_t TriMesh::edge_count() const {
    std::set<std::pair<int, int>> edges;
    for (const auto& f : faces_)
        for (int e = 0; e < 3; ++e) {
            const int a = f[e], b = f[(e + 1) % 3];
            edges.emplace(std::min(a, b), std::max(a, b));
        }
    return edges.size();
}

Vec3 TriMesh::vertex_mean() const {
    Vec3 s;
    for (const Vec3& v : vertices_) s += v;
    return s / static_cast<double>(vertices_.size());
}

void TriMesh::bounding_box(Vec3& lo, Vec3& hi) const {
    lo = hi = vertices_.front();
    for (const Vec3& v : vertices_)
        for (int i = 0; i < 3; ++i) {
            lo[i] = std::min(lo[i], v[i]);
            hi[i] = std::max(hi[i], v[i]);
        }
}

namespace {

TriMesh load_obj(const std::string& path, std::istream& in) {
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> faces;
    std::vector<std::size_t> face_lines;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ss >> v.x >> v.y >> v.z)) parse_fail(path, lineno, "malformed vertex line");
            verts.push_back(v);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ss >> tok) {
                // accept "i", "i/t", "i/t/n", "i//n"
                std::size_t slash = tok.find('/');
                std::string head = slash == std::string::npos ? tok : tok.substr(0, slash);
                try {
                    std::size_t used = 0;
                    const int v = std::stoi(head, &used);
                    if (used != head.size()) throw std::invalid_argument(head);
                    idx.push_back(v);
                } catch (const std::exception&) {
                    parse_fail(path, lineno, "malformed face index '" + tok + "'");
                }
            }
            if (idx.size() != 3)
                parse_fail(path, lineno, "non-triangular face (" + std::to_string(idx.size()) +
                                             " vertices)");
            for (int& v : idx) {
                if (v < 1 || v > static_cast<int>(verts.size()))
                    parse_fail(path, lineno, "face index " + std::to_string(v) + " out of range");
                v -= 1;  // OBJ is 1-based
            }
            faces.push_back({idx[0], idx[1], idx[2]});
            face_lines.push_back(lineno);
        }
        // other tags (vn, vt, o, g, s, usemtl, mtllib, ...) are ignored
    }
    if (verts.empty()) throw input_error(path + ": empty mesh (no vertices)");
    if (faces.empty()) throw input_error(path + ": empty mesh (no faces)");
    return TriMesh(std::move(verts), std::move(faces));
}

TriMesh load_ply(const std::string& path, std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) return true;
        }
        return false;
    };
    if (!next_line() || line != "ply") parse_fail(path, lineno, "missing 'ply' magic");

    std::size_t n_vertices = 0, n_faces = 0;
    std::vector<std::string> vertex_props;
    std::string current_element;
    bool ascii = false;
    while (next_line()) {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "comment") continue;
        if (tag == "format") {
            std::string fmt;
            ss >> fmt;
            ascii = (fmt == "ascii");
            if (!ascii) parse_fail(path, lineno, "only ascii PLY is supported");
        } else if (tag == "element") {
            std::string name;
            std::size_t count = 0;
            ss >> name >> count;
            current_element = name;
            if (name == "vertex") n_vertices = count;
            else if (name == "face") n_faces = count;
        } else if (tag == "property") {
            if (current_element == "vertex") {
                std::string type, name;
                ss >> type >> name;
                if (type == "list") parse_fail(path, lineno, "list property on vertex element");
                vertex_props.push_back(name);
            }
        } else if (tag == "end_header") {
            break;
        }
    }
    if (vertex_props.size() < 3 || vertex_props[0] != "x" || vertex_props[1] != "y" ||
        vertex_props[2] != "z")
        throw input_error(path + ": vertex element must start with properties x, y, z");
    if (n_vertices == 0 || n_faces == 0) throw input_error(path + ": empty mesh");

    std::vector<Vec3> verts;
    verts.reserve(n_vertices);
    for (std::size_t i = 0; i < n_vertices; ++i) {
        if (!next_line()) parse_fail(path, lineno, "unexpected end of vertex data");
        std::istringstream ss(line);
        Vec3 v;
        if (!(ss >> v.x >> v.y >> v.z)) parse_fail(path, lineno, "malformed vertex row");
        verts.push_back(v);
    }
    std::vector<std::array<int, 3>> faces;
    faces.reserve(n_faces);
    for (std::size_t i = 0; i < n_faces; ++i) {
        if (!next_line()) parse_fail(path, lineno, "unexpected end of face data");
        std::istringstream ss(line);
        int count = 0;
        if (!(ss >> count)) parse_fail(path, lineno, "malformed face row");
        if (count != 3)
            parse_fail(path, lineno, "non-triangular face (" + std::to_string(count) + " vertices)");
        std::array<int, 3> f{};
        if (!(ss >> f[0] >> f[1] >> f[2])) parse_fail(path, lineno, "malformed face row");
        for (int v : f)
            if (v < 0 || v >= static_cast<int>(verts.size()))
                parse_fail(path, lineno, "face index " + std::to_string(v) + " out of range");
        faces.push_back(f);
    }
    return TriMesh(std::move(verts), std::move(faces));
}

}  // namespace

TriMesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open mesh file: " + path);
    // Sniff: PLY files start with the "ply" magic; anything else is OBJ.
    const int c0 = in.peek();
    if (c0 == 'p') {
        std::string first;
        std::getline(in, first);
        if (!first.empty() && first.back() == '\r') first.pop_back();
        in.seekg(0);
        if (first == "ply") return load_ply(path, in);
    }
    return load_obj(path, in);
}

void save_mesh(const TriMesh& mesh, const std::string& path) {
    std::ostringstream out;
    const bool ply = path.size() >= 4 && path.substr(path.size() - 4) == ".ply";
    if (ply) {
        out << "ply\nformat ascii 1.0\n";
        out << "element vertex " << mesh.vertex_count() << "\n";
        out << "property double x\nproperty double y\nproperty double z\n";
        out << "element face " << mesh.face_count() << "\n";
        out << "property list uchar int vertex_indices\nend_header\n";
        for (const Vec3& v : mesh.vertices())
            out << format_full(v.x) << ' ' << format_full(v.y) << ' ' << format_full(v.z) << '\n';
        for (const auto& f : mesh.faces()) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
    } else {
        for (const Vec3& v : mesh.vertices())
            out << "v " << format_full(v.x) << ' ' << format_full(v.y) << ' ' << format_full(v.z)
                << '\n';
        for (const auto& f : mesh.faces())
            out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    }
    write_file_atomic(path, out.str());
}

PointSet vertex_measure(const TriMesh& mesh) { return PointSet{mesh.vertices()}; }

PointSet sample_surface(const TriMesh& mesh, std::size_t n, RngStream& rng) {
    if (n == 0) throw input_error("sample_surface: n must be >= 1");
    if (!(mesh.total_area() > 0.0)) throw input_error("sample_surface: mesh has zero area");

    // Cumulative face areas for categorical sampling.
    const auto& areas = mesh.face_areas();
    std::vector<double> cum(areas.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < areas.size(); ++i) {
        acc += areas[i];
        cum[i] = acc;
    }

    PointSet out;
    out.points.reserve(n);
    const auto& verts = mesh.vertices();
    for (std::size_t s = 0; s < n; ++s) {
        const double u = rng.uniform() * acc;
        const std::size_t f =
            std::min(static_cast<std::size_t>(std::lower_bound(cum.begin(), cum.end(), u) -
                                              cum.begin()),
                     areas.size() - 1);
        const auto& [i, j, k] = mesh.faces()[f];
        const double r1 = rng.uniform(), r2 = rng.uniform();
        const double sq = std::sqrt(r1);
        const double a = 1.0 - sq, b = sq * (1.0 - r2), c = sq * r2;
        out.points.push_back(a * verts[i] + b * verts[j] + c * verts[k]);
    }
    return out;
}

AdjacencyList adjacency(const TriMesh& mesh) {
    AdjacencyList adj;
    adj.neighbors.assign(mesh.vertex_count(), {});
    for (const auto& f : mesh.faces())
        for (int e = 0; e < 3; ++e) {
            const int a = f[e], b = f[(e + 1) % 3];
            adj.neighbors[a].push_back(b);
            adj.neighbors[b].push_back(a);
        }
    for (auto& nb : adj.neighbors) {
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }
    return adj;
}

SyntheticShape SyntheticShape::ellipsoid_shape(double a, double b, double c) {
    SyntheticShape s;
    s.kind = Kind::kEllipsoid;
    s.ellipsoid = {a, b, c};
    return s;
}

SyntheticShape SyntheticShape::perturbed_sphere(double amplitude, double frequency) {
    SyntheticShape s;
    s.kind = Kind::kPerturbedSphere;
    s.perturbed = {amplitude, frequency};
    return s;
}

SyntheticShape SyntheticShape::parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    std::vector<double> params;
    if (colon != std::string::npos) {
        std::istringstream ss(text.substr(colon + 1));
        std::string tok;
        while (std::getline(ss, tok, ','))
            try {
                params.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw input_error("bad shape parameter '" + tok + "' in '" + text + "'");
            }
    }
    if (head == "sphere") return sphere();
    if (head == "ellipsoid") {
        if (params.size() != 3) throw input_error("ellipsoid needs 3 parameters: ellipsoid:a,b,c");
        return ellipsoid_shape(params[0], params[1], params[2]);
    }
    if (head == "perturbed") {
        if (params.size() != 2)
            throw input_error("perturbed sphere needs 2 parameters: perturbed:amplitude,frequency");
        return perturbed_sphere(params[0], params[1]);
    }
    throw input_error("unknown shape '" + head + "' (expected sphere, ellipsoid, perturbed)");
}

namespace {

void icosahedron(std::vector<Vec3>& verts, std::vector<std::array<int, 3>>& faces) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    verts = {{-1, t, 0}, {1, t, 0},   {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
             {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    for (Vec3& v : verts) v = normalized(v);
    faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
}

void subdivide_on_sphere(std::vector<Vec3>& verts, std::vector<std::array<int, 3>>& faces) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
        const auto key = std::minmax(a, b);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        const int idx = static_cast<int>(verts.size());
        verts.push_back(normalized(verts[a] + verts[b]));
        midpoint.emplace(key, idx);
        return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& [a, b, c] : faces) {
        const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
        next.push_back({a, ab, ca});
        next.push_back({ab, b, bc});
        next.push_back({ca, bc, c});
        next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
}

}  // namespace

TriMesh make_synthetic(const SyntheticShape& shape, int subdivisions, RngStream& rng) {
    if (subdivisions < 0) throw input_error("make_synthetic: subdivisions must be >= 0");
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> faces;
    icosahedron(verts, faces);
    for (int s = 0; s < subdivisions; ++s) subdivide_on_sphere(verts, faces);

    switch (shape.kind) {
        case SyntheticShape::Kind::kSphere:
            break;
        case SyntheticShape::Kind::kEllipsoid:
            for (Vec3& v : verts) {
                v.x *= shape.ellipsoid.a;
                v.y *= shape.ellipsoid.b;
                v.z *= shape.ellipsoid.c;
            }
            break;
        case SyntheticShape::Kind::kPerturbedSphere: {
            Vec3 dirs[3];
            double phase[3];
            for (int j = 0; j < 3; ++j) {
                dirs[j] = rng.unit_vector();
                phase[j] = rng.uniform() * 6.283185307179586;
            }
            const double amp = shape.perturbed.amplitude, freq = shape.perturbed.frequency;
            for (Vec3& v : verts) {
                double field = 0.0;
                for (int j = 0; j < 3; ++j) field += std::sin(freq * dot(v, dirs[j]) + phase[j]);
                v *= 1.0 + amp * field / 3.0;
            }
            break;
        }
    }
    return TriMesh(std::move(verts), std::move(faces));
}

}  // namespace swflow
