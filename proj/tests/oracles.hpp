// Brute-force helpers shared by the unit tests. Everything here enumerates
// raw sequences, never count vectors, so it stays independent of the library.
#ifndef NML_DDIM_TESTS_ORACLES_HPP
#define NML_DDIM_TESTS_ORACLES_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace oracle {

inline void for_each_sequence(int n, int m, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> seq(n, 0);
  while (true) {
    f(seq);
    int i = n - 1;
    while (i >= 0 && seq[i] == m - 1) seq[i--] = 0;
    if (i < 0) return;
    ++seq[i];
  }
}

inline std::vector<int> counts_of(const std::vector<int>& seq, int m, std::size_t begin,
                                  std::size_t end) {
  std::vector<int> c(m, 0);
  for (std::size_t i = begin; i < end; ++i) ++c[seq[i]];
  return c;
}

// max over the free simplex of prod p_j^{c_j}
inline double ml_likelihood(const std::vector<int>& c) {
  int n = 0;
  for (int v : c) n += v;
  double out = 1.0;
  for (int v : c)
    if (v > 0) out *= std::pow(static_cast<double>(v) / n, v);
  return out;
}

inline double product_prob(const std::vector<double>& p, const std::vector<int>& c) {
  double out = 1.0;
  for (std::size_t j = 0; j < c.size(); ++j) out *= std::pow(p[j], c[j]);
  return out;
}

// sum over all m^n sequences of the ML likelihood
inline double brute_complexity(int n, int m) {
  double total = 0.0;
  for_each_sequence(n, m, [&](const std::vector<int>& s) {
    total += ml_likelihood(counts_of(s, m, 0, s.size()));
  });
  return total;
}

}  // namespace oracle

#endif
