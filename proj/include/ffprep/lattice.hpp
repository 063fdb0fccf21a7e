#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace ffprep {

using Vertex = int;
/// Sorted, duplicate-free list of vertices.
using VertexSet = std::vector<Vertex>;
/// Entangled-pair placement, stored with first < second.
using VertexPair = std::array<Vertex, 2>;

inline constexpr int kInfiniteDistance = std::numeric_limits<int>::max();

enum class VertexRole { plain, system, ancilla };

/// Finite interaction graph with interaction supports and entangled-pair
/// placements. Immutable once constructed; the constructor validates every
/// structural invariant and caches all-pairs distances.
class Lattice {
 public:
  struct Description {
    int n_vertices = 0;
    int local_dim = 2;
    std::vector<std::array<Vertex, 2>> edges;
    std::vector<VertexSet> supports;
    std::vector<VertexPair> pairs;
    int interaction_length = 1;
    /// Empty means every vertex is `plain`.
    std::vector<VertexRole> roles;
    /// Empty means names are generated as "v<i>".
    std::vector<std::string> names;
  };

  explicit Lattice(Description desc);

  int n_vertices() const { return n_vertices_; }
  int local_dim() const { return local_dim_; }
  int interaction_length() const { return interaction_length_; }
  const std::vector<std::array<Vertex, 2>>& edges() const { return edges_; }
  const std::vector<VertexSet>& supports() const { return supports_; }
  const std::vector<VertexPair>& pairs() const { return pairs_; }
  const std::vector<VertexRole>& roles() const { return roles_; }
  const std::vector<std::string>& names() const { return names_; }

  int n_supports() const { return static_cast<int>(supports_.size()); }
  int n_pairs() const { return static_cast<int>(pairs_.size()); }

  /// Shortest-path length, or kInfiniteDistance for disconnected vertices.
  int distance(Vertex a, Vertex b) const;
  /// Minimum vertex-to-vertex distance between two vertex sets.
  int set_distance(std::span<const Vertex> a, std::span<const Vertex> b) const;
  /// Largest finite distance between any two vertices.
  int diameter() const;

  /// Index of the pair containing `v`.
  int pair_of(Vertex v) const { return pair_of_vertex_[static_cast<std::size_t>(v)]; }
  /// Supports intersecting pair `mu` (the set Λ_μ), ascending.
  const std::vector<int>& supports_touching(int mu) const {
    return touching_[static_cast<std::size_t>(mu)];
  }

  bool has_ancillas() const;
  std::vector<Vertex> system_vertices() const;
  std::vector<Vertex> ancilla_vertices() const;

  /// d^|V|; throws InvalidInput when it exceeds kMaxHilbertDim.
  std::size_t hilbert_dim() const;
  /// d^|V| without the guard (may saturate).
  double hilbert_dim_unchecked() const;

  void check_vertex(Vertex v) const;

 private:
  int n_vertices_;
  int local_dim_;
  int interaction_length_;
  std::vector<std::array<Vertex, 2>> edges_;
  std::vector<VertexSet> supports_;
  std::vector<VertexPair> pairs_;
  std::vector<VertexRole> roles_;
  std::vector<std::string> names_;
  std::vector<int> dist_;
  std::vector<int> pair_of_vertex_;
  std::vector<std::vector<int>> touching_;
};

/// Chain geometries.
///
/// thermal = true: site i owns system vertex 2i and ancilla vertex 2i+1
/// (named s<i>, a<i>); pairs are (s_i, a_i); supports are nearest-neighbour
/// system pairs {s_i, s_{i+1}}; R = 1.
///
/// thermal = false: node i owns a left vertex L_i (absent for i = 0) and a
/// right vertex R_i (absent for the last node); pairs are the bonds
/// (R_i, L_{i+1}); supports are the nodes. Requires n_sites >= 2.
Lattice build_chain(int n_sites, int local_dim, bool thermal);

/// Thermal rows x cols grid: one system + one ancilla vertex per site,
/// supports on nearest-neighbour system bonds.
Lattice build_thermal_grid(int rows, int cols, int local_dim);

/// Same lattice with an additional on-site support {v} for every listed vertex.
Lattice with_onsite_supports(const Lattice& lat, std::span<const Vertex> vertices);

int graph_distance(const Lattice& lat, Vertex a, Vertex b);

/// Union of the vertices of the listed supports, sorted.
VertexSet vertices_of(const Lattice& lat, std::span<const int> support_indices);

/// A set Ω of support indices (sorted). `connected` is the connectivity of the
/// hypergraph whose hyperedges are the members (two supports are adjacent when
/// they share a vertex).
struct EdgeSet {
  std::vector<int> members;
  bool connected = true;

  int size() const { return static_cast<int>(members.size()); }
  friend bool operator==(const EdgeSet&, const EdgeSet&) = default;
};

bool supports_connected(const Lattice& lat, std::span<const int> members);

/// True when Ω is nonempty and Ω ∪ {μ} is connected as a hypergraph, i.e.
/// every connected component of Ω shares a vertex chain with the pair μ.
bool anchored_connected(const Lattice& lat, int anchor_pair, std::span<const int> members);

/// All Ω ⊆ Λ with |Ω| <= max_size that are anchored-connected to `anchor_pair`,
/// ordered by size then lexicographically. Ω = ∅ is included only when
/// `include_empty` is set.
std::vector<EdgeSet> connected_edge_sets(const Lattice& lat, int anchor_pair, int max_size,
                                         bool include_empty = false);

/// Greedy left-to-right partition of indices into consecutive runs whose
/// members are pairwise vertex-disjoint.
std::vector<std::vector<int>> disjoint_grouping(std::span<const VertexSet> supports);

}  // namespace ffprep
