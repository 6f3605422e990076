// Triangle meshes as probability measures: mesh I/O, adjacency, surface
// sampling, and synthetic test shapes.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "swflow/rng.hpp"
#include "swflow/vec3.hpp"

namespace swflow {

// N weighted points in R^3 with uniform mass 1/N.
struct PointSet {
    std::vector<Vec3> points;

    std::size_t size() const { return points.size(); }
    const Vec3& operator[](std::size_t i) const { return points[i]; }
    Vec3& operator[](std::size_t i) { return points[i]; }
};

Vec3 centroid(const PointSet& ps);

// Per-vertex sorted lists of 1-ring neighbours.
struct AdjacencyList {
    std::vector<std::vector<int>> neighbors;

    std::size_t size() const { return neighbors.size(); }
    const std::vector<int>& operator[](std::size_t i) const { return neighbors[i]; }
};

class TriMesh {
public:
    TriMesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> faces);

    const std::vector<Vec3>& vertices() const { return vertices_; }
    const std::vector<std::array<int, 3>>& faces() const { return faces_; }
    std::size_t vertex_count() const { return vertices_.size(); }
    std::size_t face_count() const { return faces_.size(); }

    // Face areas are cached at construction.
    const std::vector<double>& face_areas() const { return face_areas_; }
    double total_area() const { return total_area_; }

    std::size_t edge_count() const;
    Vec3 vertex_mean() const;
    void bounding_box(Vec3& lo, Vec3& hi) const;

private:
    std::vector<Vec3> vertices_;
    std::vector<std::array<int, 3>> faces_;
    std::vector<double> face_areas_;
    double total_area_ = 0.0;
};

// ASCII OBJ ("v x y z" / "f i j k", 1-based) and ASCII PLY. Format is chosen
// by extension on save (.ply for PLY, OBJ otherwise) and sniffed on load.
// Coordinates are written with 17 significant digits so save/load round-trips
// are bit-exact.
TriMesh load_mesh(const std::string& path);
void save_mesh(const TriMesh& mesh, const std::string& path);

// The empirical measure of the vertices, in index order (duplicates kept).
PointSet vertex_measure(const TriMesh& mesh);

// n points distributed over the surface: faces chosen proportionally to area,
// then uniformly within the face via sqrt-barycentric coordinates.
PointSet sample_surface(const TriMesh& mesh, std::size_t n, RngStream& rng);

AdjacencyList adjacency(const TriMesh& mesh);

struct Sphere {};
struct Ellipsoid {
    double a = 1.0, b = 1.0, c = 1.0;
};
// Radial field built from three random low-order sine lobes; breaks all
// rotational symmetry for generic seeds.
struct PerturbedSphere {
    double amplitude = 0.2;
    double frequency = 2.0;
};

struct SyntheticShape {
    enum class Kind { kSphere, kEllipsoid, kPerturbedSphere } kind = Kind::kSphere;
    Ellipsoid ellipsoid;
    PerturbedSphere perturbed;

    static SyntheticShape sphere() { return {}; }
    static SyntheticShape ellipsoid_shape(double a, double b, double c);
    static SyntheticShape perturbed_sphere(double amplitude, double frequency);
    // Parse "sphere", "ellipsoid:a,b,c", "perturbed:amp,freq".
    static SyntheticShape parse(const std::string& text);
};

// Icosphere with `subdivisions` rounds of midpoint subdivision, deformed per
// shape. Watertight and consistently oriented.
TriMesh make_synthetic(const SyntheticShape& shape, int subdivisions, RngStream& rng);

}  // namespace swflow
