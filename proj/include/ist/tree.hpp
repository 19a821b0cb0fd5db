#ifndef IST_TREE_HPP_
#define IST_TREE_HPP_

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/container/small_vector.hpp>

#include "ist/batch.hpp"
#include "ist/counters.hpp"
#include "ist/key.hpp"
#include "ist/parallel.hpp"
#include "ist/prim.hpp"

namespace ist {

struct config {
  double alpha = 0.5;           // ID table exponent, m = floor(n^alpha)
  double rebuild_ratio = 0.25;  // rebuild once C(T) reaches ratio * S0(T)
  std::size_t leaf_cutoff = 3;  // subtrees this small stay plain sorted arrays
  std::size_t grain = prim::default_grain;

  void validate() const {
    if (!(alpha >= 0.5 && alpha < 1.0))
      throw std::invalid_argument("config: alpha must be in [0.5, 1)");
    if (!(rebuild_ratio > 0.0 && rebuild_ratio <= 1.0))
      throw std::invalid_argument("config: rebuild_ratio must be in (0, 1]");
    if (leaf_cutoff < 1)
      throw std::invalid_argument("config: leaf_cutoff must be >= 1");
    if (grain < 1) throw std::invalid_argument("config: grain must be >= 1");
  }
};

namespace detail {

inline std::size_t isqrt(std::size_t n) {
  auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  while (r > 0 && r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

inline std::size_t id_table_size(std::size_t n, double alpha) {
  if (alpha == 0.5) return std::max<std::size_t>(1, isqrt(n));
  double v = std::pow(static_cast<double>(n), alpha);
  return std::max<std::size_t>(1, static_cast<std::size_t>(v + 1e-9));
}

}  // namespace detail

// Interpolation search tree over distinct keys with tombstone deletion and
// threshold-triggered ideal rebuilds. Single writer: one mutating call at a
// time, no concurrent readers during mutation; mutating calls fork internal
// subtasks over disjoint children and join them before returning.
template <class K, class Traits = key_traits<K>>
class tree {
 public:
  struct node;
  using node_ptr = std::unique_ptr<node>;

  // Leaves dominate the node count, so rep and marks store inline up to the
  // default leaf size: a leaf is then a single allocation.
  template <class T>
  using small_vec = boost::container::small_vector<T, 4>;

  struct node {
    small_vec<K> rep;                   // sorted representatives
    small_vec<std::uint8_t> marked;     // tombstone per representative
    small_vec<node_ptr> children;       // rep.size()+1 slots; empty for leaves
    small_vec<std::uint32_t> id;        // bucket -> rep bracket; empty for leaves
    double lo = 0.0, hi = 0.0;          // coord bounds [a, b]
    std::int64_t c_ops = 0;             // updates routed here since last rebuild
    std::int64_t s_init = 0;            // live size right after last rebuild
    std::int64_t s_live = 0;            // current live size

    bool leaf() const { return children.empty(); }
    std::span<const K> rep_span() const { return {rep.data(), rep.size()}; }
    std::size_t live_reps() const {
      std::size_t c = 0;
      for (auto m : marked) c += (m == 0);
      return c;
    }
  };

  tree() { cfg_.validate(); }
  explicit tree(config cfg) : cfg_(cfg) { cfg_.validate(); }

  static double coord(const K& key) { return Traits::coord(key); }

  // Bulk load from strictly increasing keys; replaces the current contents.
  void assign(std::span<const K> sorted_keys) {
    double lo = 0.0, hi = 0.0;
    if (!sorted_keys.empty()) {
      lo = coord(sorted_keys.front());
      hi = coord(sorted_keys.back());
    }
    stats::count_rebuild(static_cast<std::int64_t>(sorted_keys.size()));
    root_ = build_ideal(sorted_keys, lo, hi, cfg_);
  }

  bool insert(const K& key) {
    if (!root_) {
      const double c = coord(key);
      stats::count_rebuild(1);
      root_ = build_ideal(std::span<const K>(&key, 1), c, c, cfg_);
      return true;
    }
    const double cx = coord(key);
    if (cx < root_->lo || cx > root_->hi) {
      // Out-of-range key: the root rebuilds and its bounds are recomputed
      // from the new key set.
      auto keys = flatten_node(root_.get(), cfg_.grain);
      insert_sorted(keys, key);
      rebuild_slot(root_, keys, /*is_root=*/true, root_->lo, root_->hi);
      return true;
    }
    return insert_at(root_, key, root_->lo, root_->hi, /*is_root=*/true);
  }

  bool erase(const K& key) {
    if (!root_) return false;
    const double cx = coord(key);
    if (cx < root_->lo || cx > root_->hi) {
      // Nothing to remove, but the no-op still counts as a routed update.
      root_->c_ops++;
      if (hits_threshold(root_->c_ops, root_->s_init)) {
        auto keys = flatten_node(root_.get(), cfg_.grain);
        rebuild_slot(root_, keys, /*is_root=*/true, root_->lo, root_->hi);
      }
      return false;
    }
    return erase_at(root_, key, /*is_root=*/true);
  }

  // Read-only membership; never touches counters other than instrumentation.
  bool contains(const K& key) const {
    const node* t = root_.get();
    if (!t) return false;
    const double cx = coord(key);
    if (cx < t->lo || cx > t->hi) return false;
    while (t) {
      stats::count_visit();
      if (t->leaf()) {
        auto it = std::lower_bound(t->rep.begin(), t->rep.end(), key);
        return it != t->rep.end() && *it == key &&
               !t->marked[static_cast<std::size_t>(it - t->rep.begin())];
      }
      auto [slot, found] = locate_child(*t, key);
      if (found) return !t->marked[*found];
      t = t->children[slot].get();
    }
    return false;
  }

  batch_result execute_batch(const batch<K>& b);

  std::vector<K> flatten() const { return flatten_node(root_.get(), cfg_.grain); }

  std::size_t size() const {
    return root_ ? static_cast<std::size_t>(root_->s_live) : 0;
  }
  bool empty() const { return size() == 0; }
  std::size_t depth() const { return depth_of(root_.get()); }
  void clear() { root_.reset(); }

  std::string dump() const {
    std::ostringstream os;
    os << std::setprecision(17);
    dump_rec(root_.get(), 0, os);
    return os.str();
  }

  // Structural sweep; returns a description of the first violation found.
  std::optional<std::string> validate() const {
    if (!root_) return std::nullopt;
    // A drained tree rebuilds to an absent root: c_ops + s_live never drops
    // below the rebuild threshold, so the last removal always fires it.
    if (root_->s_live == 0) return "present root with zero live size";
    return validate_rec(root_.get(), root_->lo, root_->hi, nullptr, nullptr,
                        cfg_);
  }

  const config& options() const { return cfg_; }
  const node* root() const { return root_.get(); }

  // ------------------------------------------------------------------
  // Free-standing pieces, exposed so tests can drive them directly.

  static node_ptr build_ideal(std::span<const K> keys, double lo, double hi,
                              const config& cfg) {
#ifndef NDEBUG
    for (std::size_t i = 1; i < keys.size(); ++i)
      assert(keys[i - 1] < keys[i] && "build_ideal: keys must be strictly increasing");
#endif
    return build_rec(keys, lo, hi, cfg);
  }

  // ID[i] = j iff rep[j] < lo + (i+1)(hi-lo)/m <= rep[j+1] with the usual
  // -inf/+inf sentinels; computed by ranking the thresholds against rep.
  static std::vector<std::uint32_t> compute_id(std::span<const K> rep,
                                               double lo, double hi,
                                               std::size_t m,
                                               std::size_t grain) {
    assert(m >= 1);
    const double width = hi - lo;
    std::vector<double> thresholds(m);
    prim::parallel_for(
        0, m,
        [&](std::size_t i) {
          thresholds[i] =
              lo + static_cast<double>(i + 1) * width / static_cast<double>(m);
        },
        grain);
    std::vector<double> repc(rep.size());
    prim::parallel_for(
        0, rep.size(), [&](std::size_t j) { repc[j] = coord(rep[j]); }, grain);
    auto pos = prim::rank(std::span<const double>(thresholds),
                          std::span<const double>(repc), grain);
    std::vector<std::uint32_t> id(m);
    prim::parallel_for(
        0, m,
        [&](std::size_t i) { id[i] = static_cast<std::uint32_t>(pos[i]); },
        grain);
    return id;
  }

  // Interpolated slot lookup: returns the child slot whose open interval
  // contains the key, plus the rep position when the key equals a
  // representative (marked or not). The ID bucket gives the bracket; an exact
  // binary search inside it settles the slot, falling back to the full rep
  // range if coordinate rounding produced an unusable bracket.
  static std::pair<std::size_t, std::optional<std::size_t>> locate_child(
      const node& nd, const K& key) {
    const std::size_t k = nd.rep.size();
    std::size_t lo_b = 0, hi_b = k;
    if (!nd.id.empty() && nd.hi > nd.lo) {
      const auto m = static_cast<double>(nd.id.size());
      double bucket =
          std::ceil((coord(key) - nd.lo) * m / (nd.hi - nd.lo));
      if (!(bucket >= 1.0)) bucket = 1.0;
      if (bucket > m) bucket = m;
      const auto i = static_cast<std::size_t>(bucket);
      const std::size_t bhi = nd.id[i - 1];
      const std::size_t blo = i >= 2 ? nd.id[i - 2] : 0;
      if (blo <= bhi && (blo == 0 || nd.rep[blo - 1] < key) &&
          (bhi == k || !(nd.rep[bhi] < key))) {
        lo_b = blo;
        hi_b = bhi;
      }
    }
    while (lo_b < hi_b) {
      const std::size_t mid = lo_b + (hi_b - lo_b) / 2;
      if (nd.rep[mid] < key)
        lo_b = mid + 1;
      else
        hi_b = mid;
    }
    if (lo_b < k && nd.rep[lo_b] == key) return {lo_b, lo_b};
    return {lo_b, std::nullopt};
  }

  // Sorted live keys of a subtree. Offsets come from a scan over child sizes
  // interleaved with live-rep indicators; children then fill their disjoint
  // output ranges in parallel.
  static std::vector<K> flatten_node(const node* t, std::size_t grain) {
    std::vector<K> out(t ? static_cast<std::size_t>(t->s_live) : 0);
    if (t && t->s_live > 0) flatten_into(t, std::span<K>(out), grain);
    return out;
  }

  static std::size_t depth_of(const node* t) {
    if (!t) return 0;
    if (t->leaf()) return 1;
    std::size_t d = 0;
    for (const auto& c : t->children) d = std::max(d, depth_of(c.get()));
    return d + 1;
  }

 private:
  friend struct test_access;

  config cfg_{};
  node_ptr root_;

  bool hits_threshold(std::int64_t c_ops, std::int64_t s_init) const {
    return static_cast<double>(c_ops) >=
           cfg_.rebuild_ratio * static_cast<double>(s_init);
  }

  static void insert_sorted(std::vector<K>& keys, const K& key) {
    keys.insert(std::lower_bound(keys.begin(), keys.end(), key), key);
  }

  static void erase_sorted(std::vector<K>& keys, const K& key) {
    auto it = std::lower_bound(keys.begin(), keys.end(), key);
    if (it != keys.end() && *it == key) keys.erase(it);
  }

  // Counter-free membership probe used while deciding rebuild outcomes.
  static bool node_contains(const node* t, const K& key) {
    while (t) {
      if (t->leaf()) {
        auto it = std::lower_bound(t->rep.begin(), t->rep.end(), key);
        return it != t->rep.end() && *it == key &&
               !t->marked[static_cast<std::size_t>(it - t->rep.begin())];
      }
      auto [slot, found] = locate_child(*t, key);
      if (found) return !t->marked[*found];
      t = t->children[slot].get();
    }
    return false;
  }

  // Replaces the subtree in `slot` with an ideal IST over `keys`. The root
  // re-derives its bounds from the keys; other nodes keep the bracket their
  // parent's representatives define. Leaf-sized results recycle the node
  // object in place, which keeps the frequent bottom-level rebuilds off the
  // allocator.
  void rebuild_slot(node_ptr& slot, std::span<const K> keys, bool is_root,
                    double blo, double bhi) {
    double lo = slot ? slot->lo : blo;
    double hi = slot ? slot->hi : bhi;
    if (is_root && !keys.empty()) {
      lo = coord(keys.front());
      hi = coord(keys.back());
    }
    stats::count_rebuild(static_cast<std::int64_t>(keys.size()));
    if (keys.empty()) {
      slot.reset();
      return;
    }
    if (slot && keys.size() <= cfg_.leaf_cutoff) {
      node& t = *slot;
      t.children.clear();
      t.id.clear();
      t.rep.assign(keys.begin(), keys.end());
      t.marked.assign(keys.size(), 0);
      t.lo = lo;
      t.hi = hi;
      t.c_ops = 0;
      t.s_init = t.s_live = static_cast<std::int64_t>(keys.size());
      return;
    }
    slot = build_rec(keys, lo, hi, cfg_);
  }

  bool insert_at(node_ptr& t, const K& key, double blo, double bhi,
                 bool is_root) {
    if (!t) {
      // Empty subtree: the first routed update rebuilds it around the key.
      stats::count_rebuild(1);
      t = build_rec(std::span<const K>(&key, 1), blo, bhi, cfg_);
      return true;
    }
    t->c_ops++;
    if (hits_threshold(t->c_ops, t->s_init)) {
      const bool was_live = node_contains(t.get(), key);
      auto keys = flatten_node(t.get(), cfg_.grain);
      if (!was_live) insert_sorted(keys, key);
      rebuild_slot(t, keys, is_root, t->lo, t->hi);
      return !was_live;
    }
    auto [slot, found] = locate_child(*t, key);
    if (found) {
      if (t->marked[*found]) {
        t->marked[*found] = 0;
        t->s_live++;
        return true;
      }
      return false;
    }
    if (t->leaf()) {
      // Reachable only under configs whose threshold lets leaves grow.
      t->rep.insert(t->rep.begin() + static_cast<std::ptrdiff_t>(slot), key);
      t->marked.insert(t->marked.begin() + static_cast<std::ptrdiff_t>(slot), 0);
      t->s_live++;
      return true;
    }
    const double clo = slot == 0 ? t->lo : coord(t->rep[slot - 1]);
    const double chi = slot == t->rep.size() ? t->hi : coord(t->rep[slot]);
    const bool r = insert_at(t->children[slot], key, clo, chi, false);
    if (r) t->s_live++;
    return r;
  }

  bool erase_at(node_ptr& t, const K& key, bool is_root) {
    if (!t) return false;
    t->c_ops++;
    if (hits_threshold(t->c_ops, t->s_init)) {
      const bool was_live = node_contains(t.get(), key);
      auto keys = flatten_node(t.get(), cfg_.grain);
      if (was_live) erase_sorted(keys, key);
      rebuild_slot(t, keys, is_root, t->lo, t->hi);
      return was_live;
    }
    auto [slot, found] = locate_child(*t, key);
    if (found) {
      if (!t->marked[*found]) {
        t->marked[*found] = 1;
        t->s_live--;
        return true;
      }
      return false;
    }
    if (t->leaf()) return false;
    const bool r = erase_at(t->children[slot], key, false);
    if (r) t->s_live--;
    return r;
  }

  // ------------------------------------------------------------------
  // Construction.

  static node_ptr build_rec(std::span<const K> keys, double lo, double hi,
                            const config& cfg) {
    const std::size_t n = keys.size();
    if (n == 0) return nullptr;
    auto nd = std::make_unique<node>();
    nd->lo = lo;
    nd->hi = hi;
    nd->c_ops = 0;
    nd->s_init = nd->s_live = static_cast<std::int64_t>(n);
    if (n <= cfg.leaf_cutoff) {
      nd->rep.assign(keys.begin(), keys.end());
      nd->marked.assign(n, 0);
      return nd;
    }
    const std::size_t step = detail::isqrt(n);
    const std::size_t k = (n + step - 1) / step - 1;  // reps at j*step, 1-based
    nd->rep.resize(k);
    nd->marked.assign(k, 0);
    for (std::size_t j = 0; j < k; ++j) nd->rep[j] = keys[(j + 1) * step - 1];
    nd->children.resize(k + 1);
    node* raw = nd.get();
    auto build_child = [raw, keys, lo, hi, step, k, n, &cfg](std::size_t j) {
      const std::size_t b = j * step;
      const std::size_t e = j == k ? n : (j + 1) * step - 1;
      const double clo = j == 0 ? lo : coord(raw->rep[j - 1]);
      const double chi = j == k ? hi : coord(raw->rep[j]);
      raw->children[j] = build_rec(keys.subspan(b, e - b), clo, chi, cfg);
    };
    if (n > cfg.grain) {
      prim::parallel_for(0, k + 1, build_child, 1);
    } else {
      for (std::size_t j = 0; j <= k; ++j) build_child(j);
    }
    fill_id(*nd, lo, hi, detail::id_table_size(n, cfg.alpha), cfg.grain);
    return nd;
  }

  // Writes the ID table of nd; small tables evaluate the bracket predicate
  // directly, large ones go through the rank-based compute_id. Both produce
  // the same entries.
  static void fill_id(node& nd, double lo, double hi, std::size_t m,
                      std::size_t grain) {
    nd.id.resize(m);
    const std::size_t k = nd.rep.size();
    if (m <= 32 && k <= 64) {
      const double width = hi - lo;
      for (std::size_t i = 0; i < m; ++i) {
        const double th =
            lo + static_cast<double>(i + 1) * width / static_cast<double>(m);
        std::uint32_t j = 0;
        while (j < k && coord(nd.rep[j]) < th) ++j;
        nd.id[i] = j;
      }
      return;
    }
    auto id = compute_id(nd.rep_span(), lo, hi, m, grain);
    std::copy(id.begin(), id.end(), nd.id.begin());
  }

  // ------------------------------------------------------------------
  // Flatten.

  static K* seq_flatten(const node* t, K* out) {
    if (!t) return out;
    if (t->leaf()) {
      for (std::size_t i = 0; i < t->rep.size(); ++i)
        if (!t->marked[i]) *out++ = t->rep[i];
      return out;
    }
    const std::size_t k = t->rep.size();
    for (std::size_t j = 0; j <= k; ++j) {
      out = seq_flatten(t->children[j].get(), out);
      if (j < k && !t->marked[j]) *out++ = t->rep[j];
    }
    return out;
  }

  static void flatten_into(const node* t, std::span<K> out, std::size_t grain) {
    assert(static_cast<std::int64_t>(out.size()) == t->s_live);
    if (t->leaf() || out.size() <= grain) {
      K* end = seq_flatten(t, out.data());
      (void)end;
      assert(end == out.data() + out.size());
      return;
    }
    const std::size_t k = t->rep.size();
    std::vector<std::int64_t> off(2 * k + 1);
    for (std::size_t j = 0; j <= k; ++j) {
      const node* c = t->children[j].get();
      off[2 * j] = c ? c->s_live : 0;
      if (j < k) off[2 * j + 1] = t->marked[j] ? 0 : 1;
    }
    const std::int64_t total =
        prim::scan_exclusive_inplace(std::span<std::int64_t>(off), grain);
    (void)total;
    assert(total == t->s_live);
    prim::parallel_for(
        0, k + 1,
        [&](std::size_t j) {
          const node* c = t->children[j].get();
          if (c && c->s_live > 0)
            flatten_into(c,
                         out.subspan(static_cast<std::size_t>(off[2 * j]),
                                     static_cast<std::size_t>(c->s_live)),
                         grain);
          if (j < k && !t->marked[j])
            out[static_cast<std::size_t>(off[2 * j + 1])] = t->rep[j];
        },
        1);
  }

  // ------------------------------------------------------------------
  // Batched application.

  struct key_entry_less {
    bool operator()(const K& a, const batch_entry<K>& e) const {
      return a < e.key;
    }
    bool operator()(const batch_entry<K>& e, const K& a) const {
      return e.key < a;
    }
    bool operator()(const K& a, const K& b) const { return a < b; }
    bool operator()(const batch_entry<K>& x, const batch_entry<K>& y) const {
      return x.key < y.key;
    }
  };

  std::int64_t finish_rebuild(node_ptr& t, std::span<const K> result,
                              double blo, double bhi, bool is_root) {
    const std::int64_t old_live = t ? t->s_live : 0;
    rebuild_slot(t, result, is_root, blo, bhi);
    return static_cast<std::int64_t>(result.size()) - old_live;
  }

  // Compact merge walk for small subtrees; same answers and result set as
  // the parallel route without its temporary arrays. Stays on the stack for
  // the leaf-sized rebuilds that dominate batched insertion.
  std::int64_t rebuild_apply_small(node_ptr& t, const batch<K>& b,
                                   std::size_t elo, std::size_t ehi,
                                   double blo, double bhi, bool is_root,
                                   std::span<std::uint8_t> tree_ans) {
    const auto& ents = b.entries;
    const auto live = t ? static_cast<std::size_t>(t->s_live) : 0;

    K flat_buf[32];
    std::vector<K> flat_vec;
    std::span<const K> flat;
    if (live <= 32) {
      seq_flatten(t.get(), flat_buf);
      flat = {flat_buf, live};
    } else {
      flat_vec = flatten_node(t.get(), cfg_.grain);
      flat = flat_vec;
    }

    boost::container::small_vector<K, 48> result;  // spills when it outgrows
    result.reserve(flat.size() + (ehi - elo));
    std::size_t fi = 0;
    std::size_t e = elo;
    while (e < ehi) {
      std::size_t g = e;
      while (g < ehi && ents[g].key == ents[e].key) ++g;
      const K key = ents[e].key;
      while (fi < flat.size() && flat[fi] < key) result.push_back(flat[fi++]);
      const bool pre = fi < flat.size() && flat[fi] == key;
      bool final_present = pre;
      for (std::size_t q = e; q < g; ++q) {
        switch (ents[q].kind) {
          case op_kind::contains:
            tree_ans[q] = pre;
            break;
          case op_kind::insert:
            tree_ans[q] = !pre;
            final_present = true;
            break;
          case op_kind::erase:
            tree_ans[q] = pre;
            final_present = false;
            break;
        }
      }
      if (pre) ++fi;
      if (final_present) result.push_back(key);
      e = g;
    }
    while (fi < flat.size()) result.push_back(flat[fi++]);
    return finish_rebuild(t, {result.data(), result.size()}, blo, bhi,
                          is_root);
  }

  // Rebuild route: answer every entry against the flattened pre-state, then
  // rebuild the subtree over (live \ deletions) ∪ insertions.
  std::int64_t rebuild_apply(node_ptr& t, const batch<K>& b, std::size_t elo,
                             std::size_t ehi, double blo, double bhi,
                             bool is_root, std::span<std::uint8_t> tree_ans) {
    const auto& ents = b.entries;
    const std::size_t ne = ehi - elo;
    const std::size_t grain = cfg_.grain;
    if ((t ? static_cast<std::size_t>(t->s_live) : 0) + ne <= grain)
      return rebuild_apply_small(t, b, elo, ehi, blo, bhi, is_root, tree_ans);

    std::vector<K> flat = flatten_node(t.get(), grain);
    std::vector<K> ekeys(ne);
    prim::parallel_for(
        0, ne, [&](std::size_t i) { ekeys[i] = ents[elo + i].key; }, grain);
    auto pos =
        prim::rank(std::span<const K>(ekeys), std::span<const K>(flat), grain);

    std::vector<std::uint8_t> pre(ne);
    prim::parallel_for(
        0, ne,
        [&](std::size_t i) {
          const bool p = pos[i] < flat.size() && flat[pos[i]] == ekeys[i];
          pre[i] = p ? 1 : 0;
          const op_kind kind = ents[elo + i].kind;
          tree_ans[elo + i] = (kind == op_kind::insert) ? !p : p;
        },
        grain);

    std::vector<std::uint32_t> iota(ne);
    prim::parallel_for(
        0, ne, [&](std::size_t i) { iota[i] = static_cast<std::uint32_t>(i); },
        grain);
    auto ins_idx = prim::filter(
        std::span<const std::uint32_t>(iota),
        [&](std::uint32_t i) {
          return ents[elo + i].kind == op_kind::insert && !pre[i];
        },
        grain);
    auto del_idx = prim::filter(
        std::span<const std::uint32_t>(iota),
        [&](std::uint32_t i) {
          return ents[elo + i].kind == op_kind::erase && pre[i] != 0;
        },
        grain);
    std::vector<K> ins_keys(ins_idx.size());
    prim::parallel_for(
        0, ins_idx.size(),
        [&](std::size_t j) { ins_keys[j] = ekeys[ins_idx[j]]; }, grain);

    std::vector<K> kept;
    if (del_idx.empty()) {
      kept = std::move(flat);
    } else {
      std::vector<K> del_keys(del_idx.size());
      prim::parallel_for(
          0, del_idx.size(),
          [&](std::size_t j) { del_keys[j] = ekeys[del_idx[j]]; }, grain);
      auto dpos = prim::rank(std::span<const K>(flat),
                             std::span<const K>(del_keys), grain);
      std::vector<std::uint32_t> fio(flat.size());
      prim::parallel_for(
          0, flat.size(),
          [&](std::size_t i) { fio[i] = static_cast<std::uint32_t>(i); },
          grain);
      auto keep_idx = prim::filter(
          std::span<const std::uint32_t>(fio),
          [&](std::uint32_t i) {
            const std::size_t q = dpos[i];
            return !(q < del_keys.size() && del_keys[q] == flat[i]);
          },
          grain);
      kept.resize(keep_idx.size());
      prim::parallel_for(
          0, keep_idx.size(),
          [&](std::size_t j) { kept[j] = flat[keep_idx[j]]; }, grain);
    }

    auto result = prim::merge(std::span<const K>(kept),
                              std::span<const K>(ins_keys), std::less<K>{},
                              grain);
    return finish_rebuild(t, result, blo, bhi, is_root);
  }

  // Leaf route when the threshold did not fire: tiny, handled sequentially
  // with the same per-key-group answer-then-apply discipline.
  std::int64_t leaf_apply(node* t, const batch<K>& b, std::size_t elo,
                          std::size_t ehi, std::span<std::uint8_t> tree_ans) {
    const auto& ents = b.entries;
    std::int64_t delta = 0;
    std::size_t e = elo;
    while (e < ehi) {
      std::size_t g = e;
      while (g < ehi && ents[g].key == ents[e].key) ++g;
      const K& key = ents[e].key;
      auto it = std::lower_bound(t->rep.begin(), t->rep.end(), key);
      auto p = static_cast<std::size_t>(it - t->rep.begin());
      const bool found = it != t->rep.end() && *it == key;
      const bool pre = found && !t->marked[p];
      for (std::size_t q = e; q < g; ++q) {
        switch (ents[q].kind) {
          case op_kind::contains:
            tree_ans[q] = pre;
            break;
          case op_kind::insert:
            tree_ans[q] = !pre;
            if (found) {
              if (t->marked[p]) {
                t->marked[p] = 0;
                ++delta;
              }
            } else {
              t->rep.insert(t->rep.begin() + static_cast<std::ptrdiff_t>(p), key);
              t->marked.insert(t->marked.begin() + static_cast<std::ptrdiff_t>(p), 0);
              ++delta;
            }
            break;
          case op_kind::erase:
            tree_ans[q] = pre;
            if (found && !t->marked[p]) {
              t->marked[p] = 1;
              --delta;
            }
            break;
        }
      }
      e = g;
    }
    t->s_live += delta;
    return delta;
  }

  std::int64_t apply_rec(node_ptr& t, const batch<K>& b, std::size_t elo,
                         std::size_t ehi, double blo, double bhi, bool is_root,
                         bool force_rebuild, std::span<std::uint8_t> tree_ans) {
    if (elo >= ehi) return 0;
    const auto u = static_cast<std::int64_t>(b.updates_in(elo, ehi));
    const auto& ents = b.entries;
    const std::size_t grain = cfg_.grain;

    if (!t && u == 0) {
      prim::parallel_for(
          elo, ehi, [&](std::size_t e) { tree_ans[e] = 0; }, grain);
      return 0;
    }
    if (!t || force_rebuild || hits_threshold(t->c_ops + u, t->s_init))
      return rebuild_apply(t, b, elo, ehi, blo, bhi, is_root, tree_ans);

    t->c_ops += u;
    if (t->leaf()) return leaf_apply(t.get(), b, elo, ehi, tree_ans);

    const std::size_t k = t->rep.size();
    const std::size_t ne = ehi - elo;
    std::span<const batch_entry<K>> erange(ents.data() + elo, ne);
    // First entry >= rep[j] and first entry > rep[j]: everything between is
    // the rep-hit group, everything outside brackets the child sub-batches.
    auto lb = prim::rank_lower(t->rep_span(), erange,
                               key_entry_less{}, grain);
    auto ub = prim::rank_upper(t->rep_span(), erange,
                               key_entry_less{}, grain);

    std::vector<std::int64_t> deltas(2 * k + 1, 0);
    auto work = [&](std::size_t s) {
      const std::size_t j = s / 2;
      if (s % 2 == 1) {  // entries equal to rep[j]
        const std::size_t glo = elo + lb[j], ghi = elo + ub[j];
        if (glo >= ghi) return;
        const bool pre = !t->marked[j];
        std::int64_t d = 0;
        for (std::size_t e = glo; e < ghi; ++e) {
          switch (ents[e].kind) {
            case op_kind::contains:
              tree_ans[e] = pre;
              break;
            case op_kind::insert:
              tree_ans[e] = !pre;
              if (t->marked[j]) {
                t->marked[j] = 0;
                d = 1;
              }
              break;
            case op_kind::erase:
              tree_ans[e] = pre;
              if (!t->marked[j]) {
                t->marked[j] = 1;
                d = -1;
              }
              break;
          }
        }
        deltas[s] = d;
      } else {  // entries strictly inside child j's bracket
        const std::size_t clo = elo + (j == 0 ? 0 : ub[j - 1]);
        const std::size_t chi = elo + (j == k ? ne : lb[j]);
        if (clo >= chi) return;
        const double cblo = j == 0 ? t->lo : coord(t->rep[j - 1]);
        const double cbhi = j == k ? t->hi : coord(t->rep[j]);
        deltas[s] = apply_rec(t->children[j], b, clo, chi, cblo, cbhi, false,
                              false, tree_ans);
      }
    };
    if (ne > grain) {
      prim::parallel_for(0, 2 * k + 1, work, 1);
    } else {
      for (std::size_t s = 0; s < 2 * k + 1; ++s) work(s);
    }
    std::int64_t total = 0;
    for (auto d : deltas) total += d;
    t->s_live += total;
    return total;
  }

  // ------------------------------------------------------------------
  // Diagnostics.

  static void dump_rec(const node* t, std::size_t depth, std::ostream& os) {
    if (!t) {
      os << depth << " nil\n";
      return;
    }
    os << depth << " k=" << t->rep.size() << " [" << t->lo << "," << t->hi
       << "] c=" << t->c_ops << " s0=" << t->s_init << " s=" << t->s_live
       << " marked=" << (t->rep.size() - t->live_reps()) << "\n";
    for (const auto& c : t->children) dump_rec(c.get(), depth + 1, os);
  }

  static std::optional<std::string> validate_rec(const node* t, double lo,
                                                 double hi, const K* lo_key,
                                                 const K* hi_key,
                                                 const config& cfg) {
    auto fail = [&](const std::string& what) {
      std::ostringstream os;
      os << what << " (k=" << t->rep.size() << " s0=" << t->s_init
         << " s=" << t->s_live << ")";
      return os.str();
    };
    const std::size_t k = t->rep.size();
    if (t->marked.size() != k) return fail("marked size != rep size");
    if (t->lo != lo || t->hi != hi) return fail("bounds mismatch with parent bracket");
    if (!(t->lo <= t->hi)) return fail("inverted bounds");
    if (t->s_init < 0 || t->s_live < 0 || t->c_ops < 0)
      return fail("negative counter");
    for (std::size_t i = 0; i < k; ++i) {
      if (i > 0 && !(t->rep[i - 1] < t->rep[i]))
        return fail("rep not strictly increasing");
      // Strictly inside the parent's representative bracket, inclusively
      // inside the coord bounds.
      if (lo_key && !(*lo_key < t->rep[i])) return fail("rep at or below bracket");
      if (hi_key && !(t->rep[i] < *hi_key)) return fail("rep at or above bracket");
      const double c = coord(t->rep[i]);
      if (c < lo || c > hi) return fail("rep coord outside bounds");
    }
    std::int64_t live = static_cast<std::int64_t>(t->live_reps());
    if (t->leaf()) {
      if (!t->id.empty()) return fail("leaf with ID table");
      if (t->s_live != live) return fail("leaf live count mismatch");
      return std::nullopt;
    }
    if (t->children.size() != k + 1) return fail("children size != k+1");
    if (t->id.empty()) return fail("internal node without ID table");
    if (k == 0) return fail("internal node without representatives");
    // Representative-count bound relative to the size at last rebuild;
    // exact integer forms of sqrt(n)/2 <= k <= 2 sqrt(n).
    if (t->s_init > static_cast<std::int64_t>(cfg.leaf_cutoff)) {
      const auto kk = static_cast<std::int64_t>(k);
      if (4 * kk * kk < t->s_init) return fail("fanout below sqrt(n)/2");
      if (kk * kk > 4 * t->s_init) return fail("fanout above 2 sqrt(n)");
    }
    if (k <= 64) {
      // Brute-force re-check of the ID bracket predicate.
      const std::size_t m = t->id.size();
      for (std::size_t i = 1; i <= m; ++i) {
        const double th = t->lo + static_cast<double>(i) * (t->hi - t->lo) /
                                      static_cast<double>(m);
        std::size_t j = 0;
        while (j < k && coord(t->rep[j]) < th) ++j;
        if (t->id[i - 1] != j) return fail("ID table entry violates bracket predicate");
      }
    }
    for (std::size_t j = 0; j <= k; ++j) {
      const node* c = t->children[j].get();
      if (!c) continue;
      const double clo = j == 0 ? t->lo : coord(t->rep[j - 1]);
      const double chi = j == k ? t->hi : coord(t->rep[j]);
      const K* cklo = j == 0 ? lo_key : &t->rep[j - 1];
      const K* ckhi = j == k ? hi_key : &t->rep[j];
      if (auto err = validate_rec(c, clo, chi, cklo, ckhi, cfg)) return err;
      live += c->s_live;
    }
    if (t->s_live != live) return fail("s_live != live reps + children");
    return std::nullopt;
  }
};

template <class K, class Traits>
batch_result tree<K, Traits>::execute_batch(const batch<K>& b) {
#ifndef NDEBUG
  for (std::size_t i = 1; i < b.entries.size(); ++i)
    assert(!(b.entries[i].key < b.entries[i - 1].key) &&
           "execute_batch: batch must be prepared (sorted by key)");
#endif
  batch_result out(b.raw_size, 0);
  if (b.raw_size == 0) return out;

  std::vector<std::uint8_t> tree_ans(b.entries.size(), 0);
  bool force_root = false;
  if (root_ && b.has_insert) {
    force_root = coord(b.min_insert_key) < root_->lo ||
                 coord(b.max_insert_key) > root_->hi;
  }
  if (!b.entries.empty())
    apply_rec(root_, b, 0, b.entries.size(), 0.0, 0.0, /*is_root=*/true,
              force_root, std::span<std::uint8_t>(tree_ans));

  prim::parallel_for(
      0, b.raw_size,
      [&](std::size_t r) {
        const std::uint32_t g = b.group_of_raw[r];
        const std::uint32_t e = b.resolver_entry[g];
        const bool ans = tree_ans[e] != 0;
        const bool pre = b.entries[e].kind == op_kind::insert ? !ans : ans;
        out[r] = pre ? b.out_if_present[r] : b.out_if_absent[r];
      },
      cfg_.grain);
  return out;
}

}  // namespace ist

#endif  // IST_TREE_HPP_
