#include "ffprep/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>
#include <string>

#include "ffprep/types.hpp"

namespace ffprep {

namespace {

VertexSet canonical(VertexSet s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

bool intersects(std::span<const Vertex> a, std::span<const Vertex> b) {
  // both sorted
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia == *ib) return true;
    if (*ia < *ib) {
      ++ia;
    } else {
      ++ib;
    }
  }
  return false;
}

// Connectivity of a hypergraph given as a list of vertex sets.
bool hyper_connected(const std::vector<std::span<const Vertex>>& parts) {
  if (parts.size() <= 1) return true;
  std::vector<bool> seen(parts.size(), false);
  std::deque<std::size_t> queue{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!queue.empty()) {
    const std::size_t cur = queue.front();
    queue.pop_front();
    for (std::size_t j = 0; j < parts.size(); ++j) {
      if (!seen[j] && intersects(parts[cur], parts[j])) {
        seen[j] = true;
        ++reached;
        queue.push_back(j);
      }
    }
  }
  return reached == parts.size();
}

}  // namespace

Lattice::Lattice(Description desc)
    : n_vertices_(desc.n_vertices),
      local_dim_(desc.local_dim),
      interaction_length_(desc.interaction_length),
      edges_(std::move(desc.edges)),
      roles_(std::move(desc.roles)),
      names_(std::move(desc.names)) {
  if (n_vertices_ < 1) throw InvalidInput("lattice needs at least one vertex");
  if (local_dim_ < 2) throw InvalidInput("local_dim must be >= 2");
  if (interaction_length_ < 0) throw InvalidInput("interaction_length must be >= 0");

  const auto n = static_cast<std::size_t>(n_vertices_);
  if (roles_.empty()) roles_.assign(n, VertexRole::plain);
  if (roles_.size() != n) throw InvalidInput("roles must list every vertex");
  if (names_.empty()) {
    for (std::size_t i = 0; i < n; ++i) names_.push_back("v" + std::to_string(i));
  }
  if (names_.size() != n) throw InvalidInput("names must list every vertex");

  for (auto& e : edges_) {
    check_vertex(e[0]);
    check_vertex(e[1]);
    if (e[0] == e[1]) throw InvalidInput("self-loop edge");
    if (e[0] > e[1]) std::swap(e[0], e[1]);
  }

  // all-pairs BFS
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : edges_) {
    adj[static_cast<std::size_t>(e[0])].push_back(e[1]);
    adj[static_cast<std::size_t>(e[1])].push_back(e[0]);
  }
  dist_.assign(n * n, kInfiniteDistance);
  for (std::size_t src = 0; src < n; ++src) {
    int* row = &dist_[src * n];
    row[src] = 0;
    std::deque<int> queue{static_cast<int>(src)};
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int w : adj[static_cast<std::size_t>(u)]) {
        if (row[w] == kInfiniteDistance) {
          row[w] = row[u] + 1;
          queue.push_back(w);
        }
      }
    }
  }

  for (auto& s : desc.supports) {
    VertexSet c = canonical(std::move(s));
    if (c.empty()) throw InvalidInput("empty interaction support");
    for (Vertex v : c) check_vertex(v);
    for (Vertex a : c) {
      for (Vertex b : c) {
        if (distance(a, b) > interaction_length_) {
          throw InvalidInput("support exceeds interaction length R=" +
                             std::to_string(interaction_length_));
        }
      }
    }
    supports_.push_back(std::move(c));
  }

  pair_of_vertex_.assign(n, -1);
  for (auto p : desc.pairs) {
    check_vertex(p[0]);
    check_vertex(p[1]);
    if (p[0] == p[1]) throw InvalidInput("pair must join two distinct vertices");
    if (p[0] > p[1]) std::swap(p[0], p[1]);
    if (distance(p[0], p[1]) != 1) throw InvalidInput("pair vertices must be neighbours");
    const int idx = static_cast<int>(pairs_.size());
    for (Vertex v : p) {
      if (pair_of_vertex_[static_cast<std::size_t>(v)] != -1) {
        throw InvalidInput("pairs overlap at vertex " + std::to_string(v));
      }
      pair_of_vertex_[static_cast<std::size_t>(v)] = idx;
    }
    pairs_.push_back(p);
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (pair_of_vertex_[v] == -1) {
      throw InvalidInput("vertex " + std::to_string(v) + " belongs to no entangled pair");
    }
  }

  touching_.resize(pairs_.size());
  for (std::size_t mu = 0; mu < pairs_.size(); ++mu) {
    for (std::size_t lam = 0; lam < supports_.size(); ++lam) {
      if (intersects(supports_[lam], pairs_[mu])) touching_[mu].push_back(static_cast<int>(lam));
    }
  }
}

void Lattice::check_vertex(Vertex v) const {
  if (v < 0 || v >= n_vertices_) throw InvalidInput("vertex " + std::to_string(v) + " out of range");
}

int Lattice::distance(Vertex a, Vertex b) const {
  check_vertex(a);
  check_vertex(b);
  return dist_[static_cast<std::size_t>(a) * static_cast<std::size_t>(n_vertices_) +
               static_cast<std::size_t>(b)];
}

int Lattice::set_distance(std::span<const Vertex> a, std::span<const Vertex> b) const {
  int best = kInfiniteDistance;
  for (Vertex u : a) {
    for (Vertex w : b) best = std::min(best, distance(u, w));
  }
  return best;
}

int Lattice::diameter() const {
  int best = 0;
  for (int d : dist_) {
    if (d != kInfiniteDistance) best = std::max(best, d);
  }
  return best;
}

bool Lattice::has_ancillas() const {
  return std::any_of(roles_.begin(), roles_.end(),
                     [](VertexRole r) { return r == VertexRole::ancilla; });
}

std::vector<Vertex> Lattice::system_vertices() const {
  std::vector<Vertex> out;
  for (int v = 0; v < n_vertices_; ++v) {
    if (roles_[static_cast<std::size_t>(v)] != VertexRole::ancilla) out.push_back(v);
  }
  return out;
}

std::vector<Vertex> Lattice::ancilla_vertices() const {
  std::vector<Vertex> out;
  for (int v = 0; v < n_vertices_; ++v) {
    if (roles_[static_cast<std::size_t>(v)] == VertexRole::ancilla) out.push_back(v);
  }
  return out;
}

double Lattice::hilbert_dim_unchecked() const {
  return std::pow(static_cast<double>(local_dim_), n_vertices_);
}

std::size_t Lattice::hilbert_dim() const {
  if (hilbert_dim_unchecked() > static_cast<double>(kMaxHilbertDim)) {
    throw InvalidInput("Hilbert space dimension " + std::to_string(local_dim_) + "^" +
                       std::to_string(n_vertices_) + " exceeds the dense limit 2^13");
  }
  std::size_t dim = 1;
  for (int i = 0; i < n_vertices_; ++i) dim *= static_cast<std::size_t>(local_dim_);
  return dim;
}

Lattice build_chain(int n_sites, int local_dim, bool thermal) {
  if (n_sites < 1) throw InvalidInput("build_chain: n_sites must be >= 1");
  Lattice::Description d;
  d.local_dim = local_dim;
  d.interaction_length = 1;
  if (thermal) {
    d.n_vertices = 2 * n_sites;
    for (int i = 0; i < n_sites; ++i) {
      const int s = 2 * i;
      const int a = 2 * i + 1;
      d.names.push_back("s" + std::to_string(i));
      d.names.push_back("a" + std::to_string(i));
      d.roles.push_back(VertexRole::system);
      d.roles.push_back(VertexRole::ancilla);
      d.edges.push_back({s, a});
      d.pairs.push_back({s, a});
      if (i + 1 < n_sites) {
        d.edges.push_back({s, s + 2});
        d.supports.push_back({s, s + 2});
      }
    }
    return Lattice(std::move(d));
  }

  if (n_sites < 2) throw InvalidInput("build_chain: a PEPS chain needs at least two nodes");
  // vertex order: R0, L1, R1, L2, ..., L_{n-1}
  d.n_vertices = 2 * n_sites - 2;
  for (int i = 0; i + 1 < n_sites; ++i) {
    d.pairs.push_back({2 * i, 2 * i + 1});
    d.edges.push_back({2 * i, 2 * i + 1});
  }
  for (int i = 0; i < n_sites; ++i) {
    if (i == 0) {
      d.supports.push_back({0});
    } else if (i == n_sites - 1) {
      d.supports.push_back({2 * i - 1});
    } else {
      d.supports.push_back({2 * i - 1, 2 * i});
      d.edges.push_back({2 * i - 1, 2 * i});
    }
  }
  for (int i = 0; i < n_sites; ++i) {
    if (i > 0) d.names.push_back("L" + std::to_string(i));
    if (i + 1 < n_sites) d.names.push_back("R" + std::to_string(i));
  }
  // names were pushed per node as (L_i, R_i), which matches the vertex order
  return Lattice(std::move(d));
}

Lattice build_thermal_grid(int rows, int cols, int local_dim) {
  if (rows < 1 || cols < 1) throw InvalidInput("build_thermal_grid: empty grid");
  Lattice::Description d;
  d.local_dim = local_dim;
  d.interaction_length = 1;
  d.n_vertices = 2 * rows * cols;
  auto sys = [cols](int r, int c) { return 2 * (r * cols + c); };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int s = sys(r, c);
      d.names.push_back("s" + std::to_string(r) + "_" + std::to_string(c));
      d.names.push_back("a" + std::to_string(r) + "_" + std::to_string(c));
      d.roles.push_back(VertexRole::system);
      d.roles.push_back(VertexRole::ancilla);
      d.edges.push_back({s, s + 1});
      d.pairs.push_back({s, s + 1});
    }
  }
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) {
        d.edges.push_back({sys(r, c), sys(r, c + 1)});
        d.supports.push_back({sys(r, c), sys(r, c + 1)});
      }
      if (r + 1 < rows) {
        d.edges.push_back({sys(r, c), sys(r + 1, c)});
        d.supports.push_back({sys(r, c), sys(r + 1, c)});
      }
    }
  }
  return Lattice(std::move(d));
}

Lattice with_onsite_supports(const Lattice& lat, std::span<const Vertex> vertices) {
  Lattice::Description d;
  d.n_vertices = lat.n_vertices();
  d.local_dim = lat.local_dim();
  d.edges = lat.edges();
  d.supports = lat.supports();
  for (Vertex v : vertices) d.supports.push_back({v});
  d.pairs = lat.pairs();
  d.interaction_length = lat.interaction_length();
  d.roles = lat.roles();
  d.names = lat.names();
  return Lattice(std::move(d));
}

int graph_distance(const Lattice& lat, Vertex a, Vertex b) { return lat.distance(a, b); }

VertexSet vertices_of(const Lattice& lat, std::span<const int> support_indices) {
  VertexSet out;
  for (int idx : support_indices) {
    if (idx < 0 || idx >= lat.n_supports()) throw InvalidInput("support index out of range");
    const auto& s = lat.supports()[static_cast<std::size_t>(idx)];
    out.insert(out.end(), s.begin(), s.end());
  }
  return canonical(std::move(out));
}

bool supports_connected(const Lattice& lat, std::span<const int> members) {
  std::vector<std::span<const Vertex>> parts;
  for (int idx : members) parts.emplace_back(lat.supports().at(static_cast<std::size_t>(idx)));
  return hyper_connected(parts);
}

bool anchored_connected(const Lattice& lat, int anchor_pair, std::span<const int> members) {
  if (members.empty()) return false;
  const auto& mu = lat.pairs().at(static_cast<std::size_t>(anchor_pair));
  std::vector<std::span<const Vertex>> parts{std::span<const Vertex>(mu)};
  for (int idx : members) parts.emplace_back(lat.supports().at(static_cast<std::size_t>(idx)));
  return hyper_connected(parts);
}

std::vector<EdgeSet> connected_edge_sets(const Lattice& lat, int anchor_pair, int max_size,
                                         bool include_empty) {
  if (anchor_pair < 0 || anchor_pair >= lat.n_pairs()) {
    throw InvalidInput("anchor pair index out of range");
  }
  if (max_size < 0) throw InvalidInput("max_size must be >= 0");

  std::vector<EdgeSet> out;
  if (include_empty) out.push_back(EdgeSet{{}, true});

  // Grow anchored sets one support at a time; a set of size k+1 is anchored
  // iff it arises from an anchored set of size k plus a support adjacent to
  // that set or to the anchor. std::set gives size-then-lex order per level.
  const auto& mu = lat.pairs()[static_cast<std::size_t>(anchor_pair)];
  auto touches = [&](int lam, const std::vector<int>& members) {
    const auto& s = lat.supports()[static_cast<std::size_t>(lam)];
    if (intersects(s, mu)) return true;
    return std::any_of(members.begin(), members.end(), [&](int m) {
      return intersects(s, lat.supports()[static_cast<std::size_t>(m)]);
    });
  };

  std::set<std::vector<int>> level;
  if (max_size >= 1) {
    for (int lam : lat.supports_touching(anchor_pair)) level.insert({lam});
  }
  for (int size = 1; size <= max_size && !level.empty(); ++size) {
    for (const auto& members : level) {
      out.push_back(EdgeSet{members, supports_connected(lat, members)});
    }
    if (size == max_size) break;
    std::set<std::vector<int>> next;
    for (const auto& members : level) {
      for (int lam = 0; lam < lat.n_supports(); ++lam) {
        if (std::binary_search(members.begin(), members.end(), lam)) continue;
        if (!touches(lam, members)) continue;
        std::vector<int> grown = members;
        grown.insert(std::upper_bound(grown.begin(), grown.end(), lam), lam);
        next.insert(std::move(grown));
      }
    }
    level = std::move(next);
  }
  return out;
}

std::vector<std::vector<int>> disjoint_grouping(std::span<const VertexSet> supports) {
  std::vector<std::vector<int>> groups;
  VertexSet occupied;
  for (std::size_t i = 0; i < supports.size(); ++i) {
    const VertexSet s = canonical(supports[i]);
    if (groups.empty() || intersects(occupied, s)) {
      groups.emplace_back();
      occupied.clear();
    }
    groups.back().push_back(static_cast<int>(i));
    occupied.insert(occupied.end(), s.begin(), s.end());
    std::sort(occupied.begin(), occupied.end());
  }
  return groups;
}

}  // namespace ffprep
