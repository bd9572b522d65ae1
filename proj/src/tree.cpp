#include "gridshield/tree.hpp"

#include <array>
#include <cmath>

#include "gridshield/serialize.hpp"

namespace gridshield {

std::uint8_t DecisionTree::evaluate(const Vec& t) const {
  std::uint32_t at = 0;
  while (!nodes[at].leaf)
    at = t[nodes[at].dim] < nodes[at].threshold ? nodes[at].left : nodes[at].right;
  return nodes[at].mask;
}

namespace {

using IdxRange = boost::container::small_vector<std::pair<std::uint32_t, std::uint32_t>, 4>;

struct Builder {
  const Strategy& st;
  int dim;
  std::vector<DecisionTree::Node> nodes;

  explicit Builder(const Strategy& s) : st(s), dim(s.grid.dim()) {}

  void cell_masks_histogram(const IdxRange& range, std::array<std::uint64_t, 256>& hist,
                            std::uint64_t& total) const {
    CellIndex c(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) c[i] = range[i].first;
    for (;;) {
      hist[st.masks[st.grid.flatten(c)]]++;
      ++total;
      int i = dim - 1;
      while (i >= 0) {
        if (++c[i] < range[i].second) break;
        c[i] = range[i].first;
        --i;
      }
      if (i < 0) break;
    }
  }

  static double entropy(const std::array<std::uint64_t, 256>& hist, std::uint64_t n) {
    double h = 0.0;
    for (std::uint64_t c : hist) {
      if (c == 0) continue;
      const double p = static_cast<double>(c) / static_cast<double>(n);
      h -= p * std::log2(p);
    }
    return h;
  }

  /// Mask histogram of the slab with index `pos` along `axis` inside range.
  void slab_histogram(const IdxRange& range, int axis, std::uint32_t pos,
                      std::array<std::uint64_t, 256>& hist) const {
    CellIndex c(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) c[i] = range[i].first;
    c[axis] = pos;
    for (;;) {
      hist[st.masks[st.grid.flatten(c)]]++;
      int i = dim - 1;
      while (i >= 0) {
        if (i == axis) {
          --i;
          continue;
        }
        if (++c[i] < range[i].second) break;
        c[i] = range[i].first;
        --i;
      }
      if (i < 0) break;
    }
  }

  std::uint32_t build(const IdxRange& range) {
    std::array<std::uint64_t, 256> hist{};
    std::uint64_t total = 0;
    cell_masks_histogram(range, hist, total);

    int distinct = 0;
    std::uint8_t only_mask = 0;
    for (int m = 0; m < 256; ++m)
      if (hist[m]) {
        ++distinct;
        only_mask = static_cast<std::uint8_t>(m);
      }
    const std::uint32_t at = static_cast<std::uint32_t>(nodes.size());
    nodes.emplace_back();
    if (distinct <= 1) {
      nodes[at].leaf = true;
      nodes[at].mask = only_mask;
      return at;
    }

    // Greedy split: maximize N*H(parent) - (N_L*H(L) + N_R*H(R)) over all
    // interior cell boundaries; first maximum in (dim, position) order wins.
    const double parent_score = static_cast<double>(total) * entropy(hist, total);
    double best_gain = -1.0;
    int best_axis = -1;
    std::uint32_t best_pos = 0;
    for (int axis = 0; axis < dim; ++axis) {
      const std::uint32_t lo = range[axis].first, hi = range[axis].second;
      if (hi - lo < 2) continue;
      std::array<std::uint64_t, 256> left_hist{};
      std::uint64_t left_n = 0;
      const std::uint64_t slab_n = total / (hi - lo);
      for (std::uint32_t pos = lo; pos + 1 < hi; ++pos) {
        slab_histogram(range, axis, pos, left_hist);
        left_n += slab_n;
        std::array<std::uint64_t, 256> right_hist{};
        for (int m = 0; m < 256; ++m) right_hist[m] = hist[m] - left_hist[m];
        const std::uint64_t right_n = total - left_n;
        const double gain = parent_score -
                            (static_cast<double>(left_n) * entropy(left_hist, left_n) +
                             static_cast<double>(right_n) * entropy(right_hist, right_n));
        if (gain > best_gain) {
          best_gain = gain;
          best_axis = axis;
          best_pos = pos + 1;
        }
      }
    }

    nodes[at].leaf = false;
    nodes[at].dim = static_cast<std::uint32_t>(best_axis);
    nodes[at].threshold = st.grid.axis(best_axis).low +
                          st.grid.diameter(best_axis) * static_cast<double>(best_pos);

    IdxRange left = range, right = range;
    left[best_axis].second = best_pos;
    right[best_axis].first = best_pos;
    nodes[at].left = build(left);
    nodes[at].right = build(right);
    return at;
  }
};

/// Exact minimization for 2-D strategies: dynamic program over all
/// sub-rectangles, choosing the split that minimizes the total node count.
/// Quartic in the grid side lengths, so it only runs below a size cap.
struct MinimalBuilder2D {
  const Strategy& st;
  std::uint32_t nx, ny;
  std::vector<std::vector<std::uint32_t>> prefix;  // per mask id
  std::vector<std::uint8_t> mask_ids;              // dense remap of masks
  std::vector<std::uint8_t> cell_id;
  std::vector<std::uint32_t> cost;     // memo, 0 = unknown
  std::vector<std::uint32_t> choice;   // dim * 2^24 + position (packed)
  std::vector<DecisionTree::Node> nodes;

  explicit MinimalBuilder2D(const Strategy& s)
      : st(s),
        nx(s.grid.axis(0).count),
        ny(s.grid.axis(1).count) {
    std::array<int, 256> remap;
    remap.fill(-1);
    int next_id = 0;
    cell_id.resize(nx * ny);
    for (std::uint32_t i = 0; i < nx; ++i)
      for (std::uint32_t j = 0; j < ny; ++j) {
        const std::uint8_t m = st.masks[st.grid.flatten(CellIndex{i, j})];
        if (remap[m] < 0) remap[m] = next_id++;
        cell_id[i * ny + j] = static_cast<std::uint8_t>(remap[m]);
      }
    prefix.assign(static_cast<std::size_t>(next_id),
                  std::vector<std::uint32_t>((nx + 1) * (ny + 1), 0));
    for (int id = 0; id < next_id; ++id) {
      auto& p = prefix[static_cast<std::size_t>(id)];
      for (std::uint32_t i = 0; i < nx; ++i)
        for (std::uint32_t j = 0; j < ny; ++j)
          p[(i + 1) * (ny + 1) + (j + 1)] =
              p[i * (ny + 1) + (j + 1)] + p[(i + 1) * (ny + 1) + j] -
              p[i * (ny + 1) + j] + (cell_id[i * ny + j] == id ? 1u : 0u);
    }
    const std::size_t n_rects = (static_cast<std::size_t>(nx) * (nx + 1) / 2) *
                                (static_cast<std::size_t>(ny) * (ny + 1) / 2);
    cost.assign(n_rects, 0);
    choice.assign(n_rects, 0);
  }

  std::uint32_t count(int id, std::uint32_t i0, std::uint32_t i1, std::uint32_t j0,
                      std::uint32_t j1) const {
    const auto& p = prefix[static_cast<std::size_t>(id)];
    return p[i1 * (ny + 1) + j1] - p[i0 * (ny + 1) + j1] - p[i1 * (ny + 1) + j0] +
           p[i0 * (ny + 1) + j0];
  }

  std::size_t rect_index(std::uint32_t i0, std::uint32_t i1, std::uint32_t j0,
                         std::uint32_t j1) const {
    // (i0, i1) with 0 <= i0 < i1 <= nx enumerated triangularly
    const std::size_t a = static_cast<std::size_t>(i0) * nx - i0 * (i0 + 1ull) / 2 + (i1 - 1);
    const std::size_t b = static_cast<std::size_t>(j0) * ny - j0 * (j0 + 1ull) / 2 + (j1 - 1);
    const std::size_t nb = static_cast<std::size_t>(ny) * (ny + 1) / 2;
    return a * nb + b;
  }

  std::uint32_t solve(std::uint32_t i0, std::uint32_t i1, std::uint32_t j0,
                      std::uint32_t j1) {
    const std::size_t at = rect_index(i0, i1, j0, j1);
    if (cost[at]) return cost[at];
    const std::uint32_t area = (i1 - i0) * (j1 - j0);
    const int corner = cell_id[i0 * ny + j0];
    if (count(corner, i0, i1, j0, j1) == area) {
      cost[at] = 1;
      choice[at] = 0xffffffffu;
      return 1;
    }
    std::uint32_t best = 0xffffffffu, best_choice = 0;
    for (std::uint32_t s = i0 + 1; s < i1; ++s) {
      const std::uint32_t c = 1 + solve(i0, s, j0, j1) + solve(s, i1, j0, j1);
      if (c < best) {
        best = c;
        best_choice = (0u << 24) | s;
      }
    }
    for (std::uint32_t s = j0 + 1; s < j1; ++s) {
      const std::uint32_t c = 1 + solve(i0, i1, j0, s) + solve(i0, i1, s, j1);
      if (c < best) {
        best = c;
        best_choice = (1u << 24) | s;
      }
    }
    cost[at] = best;
    choice[at] = best_choice;
    return best;
  }

  std::uint32_t emit(std::uint32_t i0, std::uint32_t i1, std::uint32_t j0,
                     std::uint32_t j1) {
    const std::size_t at = rect_index(i0, i1, j0, j1);
    const std::uint32_t node = static_cast<std::uint32_t>(nodes.size());
    nodes.emplace_back();
    if (choice[at] == 0xffffffffu) {
      nodes[node].leaf = true;
      nodes[node].mask = st.masks[st.grid.flatten(CellIndex{i0, j0})];
      return node;
    }
    const int dim = static_cast<int>(choice[at] >> 24);
    const std::uint32_t pos = choice[at] & 0xffffffu;
    nodes[node].leaf = false;
    nodes[node].dim = static_cast<std::uint32_t>(dim);
    nodes[node].threshold =
        st.grid.axis(dim).low + st.grid.diameter(dim) * static_cast<double>(pos);
    if (dim == 0) {
      nodes[node].left = emit(i0, pos, j0, j1);
      nodes[node].right = emit(pos, i1, j0, j1);
    } else {
      nodes[node].left = emit(i0, i1, j0, pos);
      nodes[node].right = emit(i0, i1, pos, j1);
    }
    return node;
  }
};

}  // namespace

DecisionTree to_tree(const Strategy& st) {
  DecisionTree tree;
  tree.grid = st.grid;
  tree.actions = st.actions;
  tree.transform = st.transform;

  if (st.grid.dim() == 2 && st.grid.cell_count() <= 4096) {
    MinimalBuilder2D mb(st);
    mb.solve(0, mb.nx, 0, mb.ny);
    mb.emit(0, mb.nx, 0, mb.ny);
    tree.nodes = std::move(mb.nodes);
    return tree;
  }

  Builder b(st);
  IdxRange full;
  for (int i = 0; i < st.grid.dim(); ++i)
    full.push_back({0u, st.grid.axis(i).count});
  b.build(full);
  tree.nodes = std::move(b.nodes);
  return tree;
}

// ---------------------------------------------------------------------------

namespace {
constexpr char kTreeMagic[4] = {'S', 'H', 'T', 'R'};
}

void save_tree(const DecisionTree& tree, const std::filesystem::path& path) {
  detail::Writer w(path);
  detail::write_header(w, kTreeMagic, tree.grid, tree.actions, tree.transform);
  w.u64(tree.nodes.size());
  for (const auto& n : tree.nodes) {
    w.u8(n.leaf ? 0 : 1);
    if (n.leaf) {
      w.u8(n.mask);
    } else {
      w.u32(n.dim);
      w.f64(n.threshold);
    }
  }
  w.finish();
}

DecisionTree load_tree(const std::filesystem::path& path) {
  detail::Reader r(path);
  detail::Header h = detail::read_header(r, kTreeMagic);
  DecisionTree tree;
  tree.grid = std::move(h.grid);
  tree.actions = std::move(h.actions);
  tree.transform = std::move(h.transform);

  const std::uint64_t count = r.u64();
  if (count == 0 || count > (1ULL << 32))
    throw io_error("corrupt file: bad node count");
  tree.nodes.reserve(count);

  // Preorder reconstruction; children of an internal node follow it, left
  // subtree first.
  const std::uint32_t dim = static_cast<std::uint32_t>(tree.grid.dim());
  auto parse = [&](auto&& self) -> std::uint32_t {
    if (tree.nodes.size() >= count) throw io_error("corrupt file: truncated tree");
    const std::uint32_t at = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    const std::uint8_t kind = r.u8();
    if (kind == 0) {
      tree.nodes[at].leaf = true;
      tree.nodes[at].mask = r.u8();
    } else if (kind == 1) {
      tree.nodes[at].leaf = false;
      tree.nodes[at].dim = r.u32();
      if (tree.nodes[at].dim >= dim) throw io_error("corrupt file: bad split dimension");
      tree.nodes[at].threshold = r.f64();
      tree.nodes[at].left = self(self);
      tree.nodes[at].right = self(self);
    } else {
      throw io_error("corrupt file: bad node kind");
    }
    return at;
  };
  parse(parse);
  if (tree.nodes.size() != count)
    throw io_error("corrupt file: node count mismatch");
  r.expect_eof("corrupt file: trailing data after node list");
  return tree;
}

}  // namespace gridshield
