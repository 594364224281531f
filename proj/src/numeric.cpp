#include "nml_ddim/numeric.hpp"

#include <cstdlib>
#include <string>

#include "nml_ddim/error.hpp"

namespace nml_ddim {

namespace {

constexpr Count kTableSize = 1 << 16;

const std::vector<double>& factorial_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kTableSize);
    t[0] = 0.0;
    for (Count i = 1; i < kTableSize; ++i)
      t[i] = t[i - 1] + std::log(static_cast<double>(i));
    return t;
  }();
  return table;
}

// Stirling series for ln Gamma(x + 1); exact to double precision for x > 6e4.
double stirling_log_factorial(double x) {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  return x * std::log(x) - x + 0.5 * std::log(2.0 * M_PI * x) +
         inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0));
}

}  // namespace

double log_factorial(Count n) {
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "log_factorial of negative");
  if (n < kTableSize) return factorial_table()[n];
  return stirling_log_factorial(static_cast<double>(n));
}

double log_binomial(Count n, Count k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

double log_multinomial(std::span<const Count> counts) {
  Count n = 0;
  double acc = 0.0;
  for (Count c : counts) {
    n += c;
    acc -= log_factorial(c);
  }
  return acc + log_factorial(n);
}

double lattice_size(Count n, int m) {
  if (m <= 0) return 0.0;
  return std::round(std::exp(log_binomial(n + m - 1, m - 1)));
}

double lattice_cap() {
  static const double cap = [] {
    if (const char* env = std::getenv("NML_DDIM_LATTICE_CAP")) {
      try {
        const double v = std::stod(env);
        if (v > 0.0) return v;
      } catch (const std::exception&) {
      }
    }
    return 1e8;
  }();
  return cap;
}

void check_lattice(Count n, int m, const char* what) {
  const double size = lattice_size(n, m);
  if (size > lattice_cap()) {
    throw Error(ErrorCode::IntractableEnumeration,
                std::string(what) + ": count lattice of " + std::to_string(size) +
                    " points exceeds cap " + std::to_string(lattice_cap()));
  }
}

void for_each_count_vector(Count n, int m,
                           const std::function<void(std::span<const Count>)>& visit) {
  if (m <= 0) return;
  std::vector<Count> counts(m, 0);
  counts[m - 1] = n;
  if (m == 1) {
    visit(counts);
    return;
  }
  // counts[0..m-2] is an odometer; the last coordinate takes the remainder.
  for (;;) {
    visit(counts);
    int j = m - 2;
    while (j >= 0) {
      if (counts[m - 1] > 0) {
        ++counts[j];
        --counts[m - 1];
        break;
      }
      counts[m - 1] += counts[j];
      counts[j] = 0;
      --j;
    }
    if (j < 0) return;
  }
}

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace nml_ddim
