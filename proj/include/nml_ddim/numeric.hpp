#ifndef NML_DDIM_NUMERIC_HPP
#define NML_DDIM_NUMERIC_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace nml_ddim {

using Count = std::int64_t;

/// ln(n!). Small arguments come from an immutable table built on first use.
double log_factorial(Count n);

double log_binomial(Count n, Count k);

/// ln( n! / prod_j counts[j]! ) with n = sum(counts).
double log_multinomial(std::span<const Count> counts);

/// k ln k with 0 ln 0 = 0.
inline double xlogx(double k) { return k > 0.0 ? k * std::log(k) : 0.0; }

/// Streaming log-sum-exp. Adding -inf terms is a no-op.
class LogSumExp {
 public:
  void add(double log_term) {
    if (log_term == -std::numeric_limits<double>::infinity()) return;
    if (log_term <= max_) {
      sum_ += std::exp(log_term - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
      max_ = log_term;
    }
  }
  double value() const {
    return sum_ == 0.0 ? -std::numeric_limits<double>::infinity()
                       : max_ + std::log(sum_);
  }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
};

/// Number of count vectors of length m summing to n, i.e. C(n+m-1, m-1).
/// Returned as a double since it overflows 64 bits for modest n, m.
double lattice_size(Count n, int m);

/// Enumeration cap for count-lattice sums. Defaults to 1e8; overridden by the
/// NML_DDIM_LATTICE_CAP environment variable (read once).
double lattice_cap();

/// Throws IntractableEnumeration if lattice_size(n, m) exceeds the cap.
void check_lattice(Count n, int m, const char* what);

/// Visits every count vector of length m summing to n, in lexicographic
/// order with the first coordinate varying slowest.
void for_each_count_vector(Count n, int m,
                           const std::function<void(std::span<const Count>)>& visit);

/// splitmix64 finalizer; used to derive independent substream seeds.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace nml_ddim

#endif  // NML_DDIM_NUMERIC_HPP
