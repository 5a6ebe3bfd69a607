// Shared fixtures and brute-force reference implementations for the test
// binaries. References here are deliberately naive (word enumeration and
// direct sums) so library results are checked against independent code.
#pragma once

#include <vector>

#include "seqsft/transfer.hpp"

namespace seqsft::testing {

inline AdjacencyMatrix ones_matrix(int r, int c) {
  return AdjacencyMatrix::Ones(r, c);
}

// Full shift on d symbols with constant structure.
inline ValidatedSystem full_shift(long N, int d = 2) {
  SystemSpec spec;
  spec.window_end = N;
  spec.alphabet_sizes.assign(static_cast<std::size_t>(N + 1), d);
  spec.adjacency.assign(static_cast<std::size_t>(N), ones_matrix(d, d));
  spec.extension = ExtensionRule::periodic(1);
  return validate(spec);
}

// Golden-mean shift: 2 symbols, word 11 forbidden.
inline ValidatedSystem golden_shift(long N) {
  AdjacencyMatrix A(2, 2);
  A << 1, 1, 1, 0;
  SystemSpec spec;
  spec.window_end = N;
  spec.alphabet_sizes.assign(static_cast<std::size_t>(N + 1), 2);
  spec.adjacency.assign(static_cast<std::size_t>(N), A);
  spec.extension = ExtensionRule::periodic(1);
  return validate(spec);
}

// Random aperiodic system on `d` symbols with period-p index structure.
// Entries are drawn from a counter RNG; dead rows/columns are repaired and
// the diagonal of the first matrix is forced so short products mix.
inline ValidatedSystem random_system(std::uint64_t seed, long N, int d = 3, long p = 2) {
  CounterRng rng{seed, 77u};
  std::vector<AdjacencyMatrix> mats;
  std::uint64_t step = 0;
  for (long k = 0; k < p; ++k) {
    AdjacencyMatrix A = AdjacencyMatrix::Zero(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) A(r, c) = rng.uniform(step++) < 0.6 ? 1 : 0;
    for (int r = 0; r < d; ++r) A(r, (r + 1) % d) = 1;
    for (int c = 0; c < d; ++c) A((c + 1) % d, c) = 1;
    A(0, 0) = 1;
    mats.push_back(A);
  }
  SystemSpec spec;
  spec.window_end = N;
  spec.alphabet_sizes.assign(static_cast<std::size_t>(N + 1), d);
  for (long j = 0; j < N; ++j) spec.adjacency.push_back(mats[static_cast<std::size_t>(j % p)]);
  spec.extension = ExtensionRule::periodic(p);
  return validate(spec);
}

// Brute-force admissible-word enumeration by filtering all symbol tuples.
inline std::vector<Word> brute_words(const ValidatedSystem& sys, long j, int L) {
  std::vector<Word> out;
  std::vector<std::uint8_t> cur(static_cast<std::size_t>(L), 0);
  while (true) {
    Word w{j, cur};
    if (sys.is_admissible(w)) out.push_back(w);
    int k = L - 1;
    while (k >= 0) {
      if (cur[static_cast<std::size_t>(k)] + 1 <
          static_cast<std::uint8_t>(sys.alphabet_size(j + k))) {
        ++cur[static_cast<std::size_t>(k)];
        for (int m = k + 1; m < L; ++m) cur[static_cast<std::size_t>(m)] = 0;
        break;
      }
      --k;
    }
    if (k < 0) break;
  }
  return out;
}

// Random real finite-depth function with values in [-1, 1].
inline FnR random_fn(const ValidatedSystem& sys, long j, int depth, std::uint64_t seed) {
  FnR f = make_constant<Real>(sys, j, depth, 0.0);
  CounterRng rng{seed, 11u};
  for (std::int64_t i = 0; i < f.values.size(); ++i)
    f.values[i] = 2.0 * rng.uniform(static_cast<std::uint64_t>(i)) - 1.0;
  return f;
}

inline FnSeq constant_seq(const ValidatedSystem& sys, long count, const FnR& f0) {
  FnSeq seq;
  for (long j = 0; j < count; ++j) {
    FnR f = f0;
    f.base = j;
    f.words = sys.words(j, f.depth);
    seq.entries.push_back(std::move(f));
  }
  return seq;
}

// Brute-force transfer apply: (L_j f)(v) as an explicit sum over preimage
// symbols, evaluated word by word.
inline FnR brute_raw_apply(const ValidatedSystem& sys, const FnR& phi_j, const FnR& f,
                           int out_depth) {
  FnR out = make_constant<Real>(sys, f.base + 1, out_depth, 0.0);
  for (std::int64_t i = 0; i < out.words->count(); ++i) {
    Word v = out.words->word_at(i);
    Real acc = 0.0;
    for (int a = 0; a < sys.alphabet_size(f.base); ++a) {
      if (!sys.edge(f.base, a, v.symbols[0])) continue;
      Word pre;
      pre.base = f.base;
      pre.symbols.push_back(static_cast<std::uint8_t>(a));
      pre.symbols.insert(pre.symbols.end(), v.symbols.begin(), v.symbols.end());
      acc += std::exp(evaluate(phi_j, pre)) * evaluate(f, pre);
    }
    out.values[i] = acc;
  }
  return out;
}

}  // namespace seqsft::testing
