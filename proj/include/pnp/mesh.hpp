#ifndef PNP_MESH_HPP
#define PNP_MESH_HPP

#include "pnp/types.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

/** @file pnp/mesh.hpp
    @brief Tetrahedral meshes of boxes, per-element P1 geometry and edge weights.
*/

namespace pnp {

using Tet = std::array<std::size_t, 4>;

/// Local edges of a tetrahedron, always listed with the smaller local index first.
inline constexpr std::array<std::array<int, 2>, 6> kLocalEdges{{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

/// Local edge slot of the pair (a, b), order-insensitive.
inline constexpr int local_edge_index(int a, int b) {
  if (a > b) std::swap(a, b);
  for (int e = 0; e < 6; ++e)
    if (kLocalEdges[e][0] == a && kLocalEdges[e][1] == b) return e;
  return -1;
}

/// Global edge with k_nu < k_mu.
struct Edge {
  std::size_t first;
  std::size_t second;
};

/// Per-element P1 geometry.
///
/// `omega[e]` is the edge weight -(grad psi_mu, grad psi_nu)_K of local edge e,
/// i.e. the negated off-diagonal of the element stiffness matrix.
struct TetGeometry {
  double volume = 0.0;
  double diameter = 0.0;
  std::array<Vec3, 4> grad_lambda{};
  std::array<double, 6> omega{};
};

/// Geometry of the tetrahedron with vertices x0..x3 in the given order.
///
/// Throws MeshError when the signed volume is not strictly positive.
inline TetGeometry tet_geometry(const std::array<Vec3, 4>& x) {
  const Vec3 d1 = x[1] - x[0];
  const Vec3 d2 = x[2] - x[0];
  const Vec3 d3 = x[3] - x[0];
  const double det = dot(d1, cross(d2, d3));
  if (!(det > 0.0)) {
    throw MeshError(det == 0.0 ? "degenerate tetrahedron (zero volume)"
                               : "inverted tetrahedron (negative orientation)");
  }
  TetGeometry g;
  g.volume = det / 6.0;
  g.grad_lambda[1] = (1.0 / det) * cross(d2, d3);
  g.grad_lambda[2] = (1.0 / det) * cross(d3, d1);
  g.grad_lambda[3] = (1.0 / det) * cross(d1, d2);
  g.grad_lambda[0] = -1.0 * (g.grad_lambda[1] + g.grad_lambda[2] + g.grad_lambda[3]);
  for (int e = 0; e < 6; ++e) {
    const auto [a, b] = kLocalEdges[e];
    g.omega[e] = -g.volume * dot(g.grad_lambda[a], g.grad_lambda[b]);
  }
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) g.diameter = std::max(g.diameter, norm(x[b] - x[a]));
  return g;
}

/// Immutable conforming tetrahedral mesh.
class TetMesh {
public:
  /// Builds edge tables and validates orientation of every element.
  ///
  /// If `boundary` is empty, boundary nodes are those lying on a face owned by a single tet.
  TetMesh(std::vector<Vec3> nodes, std::vector<Tet> tets, std::vector<bool> boundary = {},
          std::size_t subdivisions = 0)
      : nodes_(std::move(nodes)), tets_(std::move(tets)), n_(subdivisions) {
    if (tets_.empty()) throw MeshError("mesh has no elements");
    for (const auto& t : tets_)
      for (auto v : t)
        if (v >= nodes_.size()) throw MeshError("tet references node out of range");
    geometry_.reserve(tets_.size());
    for (std::size_t k = 0; k < tets_.size(); ++k) {
      try {
        geometry_.push_back(tet_geometry(vertices(k)));
      } catch (const MeshError& e) {
        throw MeshError("tet " + std::to_string(k) + ": " + e.what());
      }
      h_ = std::max(h_, geometry_.back().diameter);
    }
    build_edges();
    build_pattern();
    if (boundary.empty()) {
      boundary_ = detect_boundary();
    } else {
      require_size(boundary.size(), nodes_.size(), "boundary flags");
      boundary_ = std::move(boundary);
    }
  }

  std::size_t num_nodes() const noexcept { return nodes_.size(); }
  std::size_t num_tets() const noexcept { return tets_.size(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }

  const std::vector<Vec3>& nodes() const noexcept { return nodes_; }
  const std::vector<Tet>& tets() const noexcept { return tets_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<bool>& boundary() const noexcept { return boundary_; }
  const std::array<std::size_t, 6>& tet_edges(std::size_t k) const { return tet_edges_.at(k); }
  const TetGeometry& geometry(std::size_t k) const { return geometry_.at(k); }

  bool is_boundary(std::size_t node) const { return boundary_.at(node); }

  /// Subdivisions per axis for box meshes, 0 for synthetic meshes.
  std::size_t subdivisions() const noexcept { return n_; }
  /// Largest element diameter.
  double h() const noexcept { return h_; }

  std::array<Vec3, 4> vertices(std::size_t k) const {
    const Tet& t = tets_.at(k);
    return {nodes_[t[0]], nodes_[t[1]], nodes_[t[2]], nodes_[t[3]]};
  }

  /// Node-adjacency sparsity pattern (diagonal included) shared by all assembled operators.
  const std::vector<std::size_t>& pattern_offsets() const noexcept { return pattern_offsets_; }
  const std::vector<std::size_t>& pattern_cols() const noexcept { return pattern_cols_; }
  /// Position in the pattern of the entry (tets[k][a], tets[k][b]).
  std::size_t slot(std::size_t k, int a, int b) const { return slots_[k][4 * a + b]; }

  double volume() const {
    double v = 0.0;
    for (const auto& g : geometry_) v += g.volume;
    return v;
  }

private:
  void build_edges() {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> index;
    tet_edges_.resize(tets_.size());
    for (std::size_t k = 0; k < tets_.size(); ++k) {
      for (int e = 0; e < 6; ++e) {
        std::size_t a = tets_[k][kLocalEdges[e][0]];
        std::size_t b = tets_[k][kLocalEdges[e][1]];
        if (a > b) std::swap(a, b);
        auto [it, inserted] = index.try_emplace({a, b}, edges_.size());
        if (inserted) edges_.push_back({a, b});
        tet_edges_[k][e] = it->second;
      }
    }
  }

  void build_pattern() {
    std::vector<std::vector<std::size_t>> adj(nodes_.size());
    for (std::size_t v = 0; v < nodes_.size(); ++v) adj[v].push_back(v);
    for (const auto& e : edges_) {
      adj[e.first].push_back(e.second);
      adj[e.second].push_back(e.first);
    }
    pattern_offsets_.assign(nodes_.size() + 1, 0);
    for (std::size_t v = 0; v < nodes_.size(); ++v) {
      std::sort(adj[v].begin(), adj[v].end());
      pattern_offsets_[v + 1] = pattern_offsets_[v] + adj[v].size();
      pattern_cols_.insert(pattern_cols_.end(), adj[v].begin(), adj[v].end());
    }
    slots_.resize(tets_.size());
    for (std::size_t k = 0; k < tets_.size(); ++k)
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          const std::size_t row = tets_[k][a];
          auto first = pattern_cols_.begin() + static_cast<std::ptrdiff_t>(pattern_offsets_[row]);
          auto last = pattern_cols_.begin() + static_cast<std::ptrdiff_t>(pattern_offsets_[row + 1]);
          slots_[k][4 * a + b] = static_cast<std::size_t>(std::lower_bound(first, last, tets_[k][b]) -
                                                          pattern_cols_.begin());
        }
  }

  std::vector<bool> detect_boundary() const {
    std::map<std::array<std::size_t, 3>, int> faces;
    for (const auto& t : tets_) {
      for (int skip = 0; skip < 4; ++skip) {
        std::array<std::size_t, 3> f{};
        int m = 0;
        for (int v = 0; v < 4; ++v)
          if (v != skip) f[m++] = t[v];
        std::sort(f.begin(), f.end());
        ++faces[f];
      }
    }
    std::vector<bool> flags(nodes_.size(), false);
    for (const auto& [f, count] : faces)
      if (count == 1)
        for (auto v : f) flags[v] = true;
    return flags;
  }

  std::vector<Vec3> nodes_;
  std::vector<Tet> tets_;
  std::vector<Edge> edges_;
  std::vector<std::array<std::size_t, 6>> tet_edges_;
  std::vector<TetGeometry> geometry_;
  std::vector<bool> boundary_;
  std::vector<std::size_t> pattern_offsets_;
  std::vector<std::size_t> pattern_cols_;
  std::vector<std::array<std::size_t, 16>> slots_;
  std::size_t n_ = 0;
  double h_ = 0.0;
};

/// Kuhn (Freudenthal) triangulation of the box [lo, hi]: every subcube is split into
/// six tetrahedra sharing its main diagonal. Nodes are numbered lexicographically in
/// (x, y, z) with z running fastest.
inline TetMesh build_box_mesh(std::size_t n, const Vec3& lo, const Vec3& hi) {
  if (n == 0) throw MeshError("box mesh needs at least one subdivision per axis");
  for (int d = 0; d < 3; ++d)
    if (!(hi[d] > lo[d])) throw MeshError("degenerate box: hi must exceed lo in every coordinate");

  const std::size_t m = n + 1;
  auto id = [m](std::size_t i, std::size_t j, std::size_t k) { return (i * m + j) * m + k; };
  auto coord = [&](int d, std::size_t i) {
    return i == n ? hi[d] : lo[d] + (hi[d] - lo[d]) * static_cast<double>(i) / static_cast<double>(n);
  };

  std::vector<Vec3> nodes(m * m * m);
  std::vector<bool> boundary(nodes.size());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k) {
        nodes[id(i, j, k)] = {coord(0, i), coord(1, j), coord(2, k)};
        boundary[id(i, j, k)] = i == 0 || j == 0 || k == 0 || i == n || j == n || k == n;
      }

  static constexpr std::array<std::array<int, 3>, 6> kPaths{
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  // odd permutations come out negatively oriented
  static constexpr std::array<bool, 6> kFlip{false, true, true, false, false, true};

  std::vector<Tet> tets;
  tets.reserve(6 * n * n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        for (int p = 0; p < 6; ++p) {
          std::array<std::size_t, 3> c{i, j, k};
          Tet t{};
          t[0] = id(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[kPaths[p][s]];
            t[s + 1] = id(c[0], c[1], c[2]);
          }
          if (kFlip[p]) std::swap(t[2], t[3]);
          tets.push_back(t);
        }
  return TetMesh(std::move(nodes), std::move(tets), std::move(boundary), n);
}

inline TetGeometry tet_geometry(const TetMesh& mesh, std::size_t tet_index) {
  if (tet_index >= mesh.num_tets()) throw MeshError("tet index out of range");
  return mesh.geometry(tet_index);
}

struct OmegaViolation {
  std::size_t tet;
  int local_edge;
  std::size_t edge;
  double omega;
};

/// Sign census of the edge weights omega_E^K over the whole mesh.
struct MeshQualityReport {
  std::vector<int> positive_per_tet;   ///< edges with omega > 0, per tet
  std::size_t positive_edges = 0;      ///< over all (tet, local edge) pairs
  std::size_t total_edges = 0;
  double positive_fraction = 0.0;
  bool strictly_positive = false;      ///< omega > 0 on every (tet, edge)
  bool nonnegative = false;            ///< omega >= 0 on every (tet, edge)
  bool each_tet_has_positive = false;  ///< at least one omega > 0 per tet
  std::vector<OmegaViolation> violations;  ///< pairs with omega <= 0
};

inline MeshQualityReport mesh_quality_report(const TetMesh& mesh) {
  MeshQualityReport r;
  r.positive_per_tet.assign(mesh.num_tets(), 0);
  r.nonnegative = true;
  r.each_tet_has_positive = true;
  for (std::size_t k = 0; k < mesh.num_tets(); ++k) {
    const auto& g = mesh.geometry(k);
    for (int e = 0; e < 6; ++e) {
      ++r.total_edges;
      if (g.omega[e] > 0.0) {
        ++r.positive_per_tet[k];
        ++r.positive_edges;
      } else {
        r.violations.push_back({k, e, mesh.tet_edges(k)[e], g.omega[e]});
        if (g.omega[e] < 0.0) r.nonnegative = false;
      }
    }
    if (r.positive_per_tet[k] == 0) r.each_tet_has_positive = false;
  }
  r.positive_fraction = static_cast<double>(r.positive_edges) / static_cast<double>(r.total_edges);
  r.strictly_positive = r.violations.empty();
  return r;
}

/// Moves every interior node of `mesh` by up to `amplitude` (a fraction of the local
/// spacing h/sqrt(3)) in each coordinate, deterministically from `seed`. Boundary nodes
/// stay put. Used to produce meshes that violate omega >= 0.
inline TetMesh perturb_interior(const TetMesh& mesh, double amplitude, std::uint64_t seed) {
  std::vector<Vec3> nodes = mesh.nodes();
  const double spacing = mesh.h() / std::sqrt(3.0);
  std::uint64_t state = seed * 6364136223846793005ULL + 1442695040888963407ULL;
  auto uniform = [&state]() {
    // splitmix64
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53 * 2.0 - 1.0;
  };
  for (std::size_t v = 0; v < nodes.size(); ++v) {
    if (mesh.is_boundary(v)) continue;
    for (int d = 0; d < 3; ++d) nodes[v][d] += amplitude * spacing * uniform();
  }
  return TetMesh(std::move(nodes), mesh.tets(), mesh.boundary(), mesh.subdivisions());
}

}  // namespace pnp

#endif  // PNP_MESH_HPP
