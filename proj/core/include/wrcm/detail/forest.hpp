#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

namespace wrcm::detail {

// Decision forest of the cluster exploration scheme. One tree per vertex,
// each a deterministic function of the configuration:
//   - the tree at the distinguished vertex reveals only its copy, then halts
//   - any other tree reveals its copy; if green, reveals its vertex; if also
//     open, explores the full open cluster, always querying the minimal
//     frontier edge (Case 2) and following open edges to unrevealed
//     endpoints immediately (Case 1)
// Frontier edges must have an endpoint among revealed open vertices and no
// endpoint among revealed closed ones.
//
// The frontier is the complete-graph star of the revealed open set, so it is
// generated rather than materialized: each revealed open vertex owns a
// cursor over partner ids (whose packed edge keys ascend with the partner
// id), and a small heap over cursor heads yields the globally minimal
// unrevealed frontier edge.
//
// Graph adapter requirements:
//   uint32_t vertex_count() const
//   bool     vertex_open(uint32_t) const
//   bool     ghost_green(uint32_t) const
//   bool     edge_open(uint32_t, uint32_t) const
//
// Recorder requirements (all may be no-ops):
//   void tree_begin(uint32_t u)
//   void query_copy(uint32_t u, bool green)
//   void query_vertex(uint32_t u, bool open)
//   void query_edge(uint32_t a, uint32_t b, bool open)
//   void tree_end(uint32_t u)

inline uint64_t pack_edge(uint32_t a, uint32_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<uint64_t>(a) << 32) | b;
}

// reusable scratch to keep per-replica allocations flat
struct ForestScratch {
  std::vector<uint32_t> status_epoch;  // per vertex
  std::vector<uint8_t> status;         // 1 = A (revealed open), 2 = B
  std::vector<uint64_t> edge_table;    // open-addressed per-tree edge set
  std::vector<uint32_t> edge_epoch;
  uint32_t epoch = 0;

  struct Cursor {
    uint64_t head;     // packed key of the next candidate edge
    uint32_t vertex;   // A-vertex owning the cursor
    uint32_t partner;  // next partner id to emit
  };
  std::vector<Cursor> heads;  // min-heap on head

  void reset(uint32_t n_vertices) {
    if (status_epoch.size() < n_vertices) {
      status_epoch.assign(n_vertices, 0);
      status.assign(n_vertices, 0);
    }
    if (edge_table.empty()) {
      edge_table.assign(1 << 12, 0);
      edge_epoch.assign(1 << 12, 0);
    }
  }
  void next_tree() {
    ++epoch;
    fill = 0;
    heads.clear();
  }
  uint8_t get_status(uint32_t v) const {
    return status_epoch[v] == epoch ? status[v] : 0;
  }
  void set_status(uint32_t v, uint8_t s) {
    status_epoch[v] = epoch;
    status[v] = s;
  }

  static bool head_greater(const Cursor& a, const Cursor& b) {
    return a.head > b.head;
  }
  void add_cursor(uint32_t vertex, uint32_t n) {
    Cursor c{0, vertex, 0};
    if (c.partner == vertex) ++c.partner;
    if (c.partner >= n) return;
    c.head = pack_edge(vertex, c.partner);
    heads.push_back(c);
    std::push_heap(heads.begin(), heads.end(), head_greater);
  }
  // pops the minimal cursor head and advances that cursor
  Cursor pop_min(uint32_t n) {
    std::pop_heap(heads.begin(), heads.end(), head_greater);
    Cursor c = heads.back();
    heads.pop_back();
    Cursor next = c;
    ++next.partner;
    if (next.partner == next.vertex) ++next.partner;
    if (next.partner < n) {
      next.head = pack_edge(next.vertex, next.partner);
      heads.push_back(next);
      std::push_heap(heads.begin(), heads.end(), head_greater);
    }
    return c;
  }

  // returns true if newly inserted
  bool edge_mark(uint64_t key) {
    size_t mask = edge_table.size() - 1;
    size_t h = static_cast<size_t>((key * 0x9e3779b97f4a7c15ULL) >> 13) & mask;
    size_t probes = 0;
    for (;;) {
      if (edge_epoch[h] != epoch) {
        edge_epoch[h] = epoch;
        edge_table[h] = key;
        if (++fill > edge_table.size() / 2) grow();
        return true;
      }
      if (edge_table[h] == key) return false;
      h = (h + 1) & mask;
      if (++probes > edge_table.size()) {
        grow();
        return edge_mark(key);
      }
    }
  }

 private:
  size_t fill = 0;

  void grow() {
    std::vector<uint64_t> keys;
    keys.reserve(fill);
    for (size_t i = 0; i < edge_table.size(); ++i)
      if (edge_epoch[i] == epoch) keys.push_back(edge_table[i]);
    edge_table.assign(edge_table.size() * 2, 0);
    edge_epoch.assign(edge_table.size(), 0);
    fill = keys.size();
    for (uint64_t k : keys) {
      size_t mask = edge_table.size() - 1;
      size_t h = static_cast<size_t>((k * 0x9e3779b97f4a7c15ULL) >> 13) & mask;
      while (edge_epoch[h] == epoch) h = (h + 1) & mask;
      edge_epoch[h] = epoch;
      edge_table[h] = k;
    }
  }
};

// Dense-graph forest run: every pair of vertices is a potential edge (the
// complete graph of the lattice approximation).
template <typename Graph, typename Recorder>
bool run_forest(const Graph& g, uint32_t special_vertex, Recorder& rec,
                ForestScratch& scratch) {
  const uint32_t n = g.vertex_count();
  scratch.reset(n);
  bool g_value = false;

  for (uint32_t u = 0; u < n; ++u) {
    rec.tree_begin(u);
    bool green = g.ghost_green(u);
    rec.query_copy(u, green);
    if (u == special_vertex) {
      // T^v reveals only the copy status
      if (green) g_value = true;
      rec.tree_end(u);
      continue;
    }
    if (!green) {
      rec.tree_end(u);
      continue;
    }
    bool open = g.vertex_open(u);
    rec.query_vertex(u, open);
    if (!open) {
      rec.tree_end(u);
      continue;
    }

    scratch.next_tree();
    scratch.set_status(u, 1);
    scratch.add_cursor(u, n);

    while (!scratch.heads.empty()) {
      ForestScratch::Cursor cur = scratch.pop_min(n);
      uint32_t a = cur.vertex, b = cur.partner;
      if (scratch.get_status(b) == 2) continue;    // endpoint revealed closed
      uint64_t key = cur.head;
      if (!scratch.edge_mark(key)) continue;       // revealed in this tree

      bool eopen = g.edge_open(a, b);
      rec.query_edge(a, b, eopen);
      if (!eopen) continue;
      if (scratch.get_status(b) == 1) continue;    // both endpoints explored
      bool bopen = g.vertex_open(b);
      rec.query_vertex(b, bopen);
      if (bopen) {
        scratch.set_status(b, 1);
        scratch.add_cursor(b, n);
      } else {
        scratch.set_status(b, 2);
      }
    }
    if (scratch.get_status(special_vertex) != 0) g_value = true;
    rec.tree_end(u);
  }
  return g_value;
}

}  // namespace wrcm::detail
