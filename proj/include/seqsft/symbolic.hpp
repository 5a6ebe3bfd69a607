// seqsft: sequential subshift-of-finite-type structure. Alphabets and
// adjacency matrices per time index, admissible word enumeration with
// cached prefix/suffix index maps, the shift metric, and the uniform
// aperiodicity window.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include "seqsft/core.hpp"

namespace seqsft {

using AdjacencyMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

struct ExtensionRule {
  enum Kind { kPeriodic, kFrozen } kind = kPeriodic;
  long period = 1;  // meaningful for kPeriodic only

  static ExtensionRule periodic(long p) { return {kPeriodic, p}; }
  static ExtensionRule frozen() { return {kFrozen, 1}; }
};

// Window [0, N]: alphabet sizes d_j for j in [0, N], adjacency A^(j) of
// shape d_j x d_{j+1} for j in [0, N-1]. The extension rule prescribes both
// outside the window.
struct SystemSpec {
  long window_end = 0;  // N
  std::vector<int> alphabet_sizes;
  std::vector<AdjacencyMatrix> adjacency;
  ExtensionRule extension = ExtensionRule::periodic(1);
  int d_max = 16;
  int max_word_length = 24;
};

struct Word {
  long base = 0;
  std::vector<std::uint8_t> symbols;

  long length() const { return static_cast<long>(symbols.size()); }
};

// Shift metric on same-base, same-length words: 2^{-k} with k the first
// disagreement offset, 0 when identical.
inline Real metric(const Word& x, const Word& y) {
  if (x.base != y.base || x.symbols.size() != y.symbols.size())
    throw BaseMismatch("metric requires same base index and length");
  for (std::size_t k = 0; k < x.symbols.size(); ++k)
    if (x.symbols[k] != y.symbols[k]) return std::ldexp(1.0, -static_cast<int>(k));
  return 0.0;
}

// All admissible depth-D words at one base index, in lexicographic order.
// prefix_of[i] is the rank of word i's depth-(D-1) prefix at the same base;
// suffix_of[i] is the rank of word i's depth-(D-1) suffix at base+1. Both
// are what embedding and shift-composition need.
struct WordSet {
  long base = 0;
  int depth = 1;
  std::vector<std::uint8_t> flat;  // count * depth symbols, row-major
  std::vector<std::uint32_t> prefix_of;
  std::vector<std::uint32_t> suffix_of;

  std::int64_t count() const {
    return depth == 0 ? 1 : static_cast<std::int64_t>(flat.size()) / depth;
  }
  const std::uint8_t* word(std::int64_t i) const { return flat.data() + i * depth; }
  Word word_at(std::int64_t i) const {
    return Word{base, std::vector<std::uint8_t>(word(i), word(i) + depth)};
  }
  // Rank of the depth-length prefix of `sym`, or nullopt if inadmissible.
  std::optional<std::int64_t> find(const std::uint8_t* sym) const {
    std::int64_t lo = 0, hi = count();
    while (lo < hi) {
      std::int64_t mid = (lo + hi) / 2;
      int cmp = std::memcmp(word(mid), sym, static_cast<std::size_t>(depth));
      if (cmp < 0)
        lo = mid + 1;
      else if (cmp > 0)
        hi = mid;
      else
        return mid;
    }
    return std::nullopt;
  }
};

using WordSetPtr = std::shared_ptr<const WordSet>;

class ValidatedSystem {
 public:
  const SystemSpec& spec() const { return impl_->spec; }
  long window_end() const { return impl_->spec.window_end; }

  // Alphabet size at any index, applying the extension rule.
  int alphabet_size(long j) const { return impl_->spec.alphabet_sizes[map_alphabet(j)]; }

  // Adjacency between indices j and j+1, applying the extension rule.
  const AdjacencyMatrix& adjacency(long j) const {
    return impl_->spec.adjacency[map_adjacency(j)];
  }

  bool edge(long j, int a, int b) const { return adjacency(j)(a, b) != 0; }

  bool is_admissible(const Word& w) const {
    for (long k = 0; k < w.length(); ++k)
      if (w.symbols[k] >= alphabet_size(w.base + k)) return false;
    for (long k = 0; k + 1 < w.length(); ++k)
      if (!edge(w.base + k, w.symbols[k], w.symbols[k + 1])) return false;
    return true;
  }

  // Depth-D admissible words at base j, cached. Construction extends the
  // depth-(D-1) set symbol by symbol, which keeps lexicographic order.
  WordSetPtr words(long j, int depth) const {
    if (depth < 1 || depth > impl_->spec.max_word_length)
      throw DepthOverflow("word length " + std::to_string(depth) + " outside [1, " +
                          std::to_string(impl_->spec.max_word_length) + "]");
    std::lock_guard<std::mutex> lock(impl_->mutex);
    return words_locked(j, depth);
  }

  friend ValidatedSystem validate(const SystemSpec& spec);

 private:
  struct Impl {
    SystemSpec spec;
    std::mutex mutex;
    std::map<std::pair<long, int>, WordSetPtr> cache;
  };
  std::shared_ptr<Impl> impl_;

  long map_index(long j, long hi) const {
    if (j >= 0 && j <= hi) return j;
    const ExtensionRule& ext = impl_->spec.extension;
    if (ext.kind == ExtensionRule::kPeriodic) {
      long p = ext.period;
      long m = j % p;
      return m < 0 ? m + p : m;
    }
    return j < 0 ? 0 : hi;
  }
  long map_alphabet(long j) const { return map_index(j, impl_->spec.window_end); }
  long map_adjacency(long j) const { return map_index(j, impl_->spec.window_end - 1); }

  WordSetPtr words_locked(long j, int depth) const {
    auto key = std::make_pair(j, depth);
    auto it = impl_->cache.find(key);
    if (it != impl_->cache.end()) return it->second;

    auto ws = std::make_shared<WordSet>();
    ws->base = j;
    ws->depth = depth;
    if (depth == 1) {
      int d = alphabet_size(j);
      ws->flat.resize(static_cast<std::size_t>(d));
      for (int a = 0; a < d; ++a) ws->flat[static_cast<std::size_t>(a)] = static_cast<std::uint8_t>(a);
      ws->prefix_of.assign(static_cast<std::size_t>(d), 0);
    } else {
      WordSetPtr shorter = words_locked(j, depth - 1);
      int d_new = alphabet_size(j + depth - 1);
      for (std::int64_t i = 0; i < shorter->count(); ++i) {
        const std::uint8_t* w = shorter->word(i);
        std::uint8_t last = w[depth - 2];
        for (int b = 0; b < d_new; ++b) {
          if (!edge(j + depth - 2, last, b)) continue;
          ws->flat.insert(ws->flat.end(), w, w + depth - 1);
          ws->flat.push_back(static_cast<std::uint8_t>(b));
          ws->prefix_of.push_back(static_cast<std::uint32_t>(i));
        }
      }
      if (ws->count() > (1 << 24))
        throw DepthOverflow("word table at depth " + std::to_string(depth) +
                            " exceeds the entry cap");
      WordSetPtr tail = words_locked(j + 1, depth - 1);
      ws->suffix_of.resize(static_cast<std::size_t>(ws->count()));
      for (std::int64_t i = 0; i < ws->count(); ++i) {
        auto r = tail->find(ws->word(i) + 1);
        if (!r) throw Inadmissible("suffix of an admissible word must be admissible");
        ws->suffix_of[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(*r);
      }
    }
    impl_->cache.emplace(key, ws);
    return impl_->cache.at(key);
  }
};

inline ValidatedSystem validate(const SystemSpec& spec) {
  long N = spec.window_end;
  if (N < 0) throw ShapeMismatch("window end must be >= 0");
  if (spec.alphabet_sizes.size() != static_cast<std::size_t>(N + 1))
    throw ShapeMismatch("need N+1 alphabet sizes for window [0, N]");
  if (spec.adjacency.size() != static_cast<std::size_t>(N))
    throw ShapeMismatch("need N adjacency matrices for window [0, N]");
  for (long j = 0; j <= N; ++j) {
    int d = spec.alphabet_sizes[static_cast<std::size_t>(j)];
    if (d < 1 || d > spec.d_max)
      throw ShapeMismatch("alphabet size at index " + std::to_string(j) +
                          " outside [1, d_max]");
  }
  for (long j = 0; j < N; ++j) {
    const AdjacencyMatrix& A = spec.adjacency[static_cast<std::size_t>(j)];
    if (A.rows() != spec.alphabet_sizes[static_cast<std::size_t>(j)] ||
        A.cols() != spec.alphabet_sizes[static_cast<std::size_t>(j + 1)])
      throw ShapeMismatch("adjacency shape at index " + std::to_string(j) +
                          " does not match alphabet sizes");
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
      if ((A.row(r).array() != 0).count() == 0)
        throw DeadSymbol("symbol " + std::to_string(r) + " at index " +
                         std::to_string(j) + " has no successor");
    }
    for (Eigen::Index c = 0; c < A.cols(); ++c) {
      if ((A.col(c).array() != 0).count() == 0)
        throw DeadSymbol("symbol " + std::to_string(c) + " at index " +
                         std::to_string(j + 1) + " has no predecessor");
    }
    for (Eigen::Index r = 0; r < A.rows(); ++r)
      for (Eigen::Index c = 0; c < A.cols(); ++c)
        if (A(r, c) != 0 && A(r, c) != 1)
          throw ShapeMismatch("adjacency entries must be 0 or 1");
  }
  if (spec.extension.kind == ExtensionRule::kPeriodic) {
    long p = spec.extension.period;
    if (p < 1) throw ShapeMismatch("periodic extension needs period >= 1");
    // Wrapped indices must agree with in-window data where both apply,
    // otherwise matrix shapes break at the seams.
    for (long j = 0; j <= N; ++j)
      if (spec.alphabet_sizes[static_cast<std::size_t>(j)] !=
          spec.alphabet_sizes[static_cast<std::size_t>(j % p)])
        throw ShapeMismatch("periodic extension inconsistent with alphabet sizes");
  } else {
    if (N >= 1) {
      if (spec.alphabet_sizes.front() != spec.alphabet_sizes[1] ||
          spec.alphabet_sizes[static_cast<std::size_t>(N - 1)] !=
              spec.alphabet_sizes[static_cast<std::size_t>(N)])
        throw ShapeMismatch("frozen extension needs matching boundary alphabets");
    }
  }
  ValidatedSystem sys;
  sys.impl_ = std::make_shared<ValidatedSystem::Impl>();
  sys.impl_->spec = spec;
  return sys;
}

// Smallest M >= 0 such that every product of M+1 consecutive adjacency
// matrices starting inside the window is entrywise positive. Products are
// evaluated in boolean arithmetic so long horizons cannot overflow.
inline int aperiodicity_window(const ValidatedSystem& sys, int M_cap = 64) {
  long N = sys.window_end();
  long lo = 0, hi = N >= 1 ? N - 1 : 0;
  for (int M = 0; M <= M_cap; ++M) {
    bool all_positive = true;
    for (long j = lo; j <= hi && all_positive; ++j) {
      AdjacencyMatrix P = sys.adjacency(j);
      for (int k = 1; k <= M; ++k) {
        P = (P * sys.adjacency(j + k)).unaryExpr(
            [](std::int64_t v) -> std::int64_t { return v != 0 ? 1 : 0; });
      }
      if ((P.array() == 0).count() != 0) all_positive = false;
    }
    if (all_positive) return M;
  }
  throw NotMixing("no positive product of length <= " + std::to_string(M_cap + 1));
}

inline std::vector<Word> enumerate_words(const ValidatedSystem& sys, long j, int L) {
  WordSetPtr ws = sys.words(j, L);
  std::vector<Word> out;
  out.reserve(static_cast<std::size_t>(ws->count()));
  for (std::int64_t i = 0; i < ws->count(); ++i) out.push_back(ws->word_at(i));
  return out;
}

}  // namespace seqsft
