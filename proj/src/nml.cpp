#include "nml_ddim/nml.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <string>

#include "nml_ddim/error.hpp"

namespace nml_ddim {

namespace {

using Table = std::vector<double>;

// ln [ binom(r, r1) (r1/r)^r1 (r2/r)^r2 ]
double log_split_weight(Count r, Count r1) {
  const Count r2 = r - r1;
  return log_binomial(r, r1) + xlogx(static_cast<double>(r1)) + xlogx(static_cast<double>(r2)) -
         xlogx(static_cast<double>(r));
}

Table combine(const Table& a, const Table& b, Count n_max) {
  Table out(n_max + 1);
  out[0] = 0.0;
  for (Count r = 1; r <= n_max; ++r) {
    LogSumExp acc;
    for (Count r1 = 0; r1 <= r; ++r1) acc.add(log_split_weight(r, r1) + a[r1] + b[r - r1]);
    out[r] = acc.value();
  }
  return out;
}

Table build_table(int m, Count n_max, std::map<int, Table>& memo) {
  if (m == 1) return Table(n_max + 1, 0.0);
  if (auto it = memo.find(m); it != memo.end()) return it->second;
  const int m1 = m / 2;
  const int m2 = m - m1;
  Table left = build_table(m1, n_max, memo);
  Table right = m2 == m1 ? left : build_table(m2, n_max, memo);
  Table t = combine(left, right, n_max);
  memo.emplace(m, t);
  return t;
}

int combine_levels(int m) {
  int levels = 0;
  while (m > 1) {
    m = (m + 1) / 2;
    ++levels;
  }
  return levels;
}

void check_work(int m, Count n_max) {
  const double work = 0.5 * static_cast<double>(n_max + 1) * static_cast<double>(n_max + 2) *
                      combine_levels(m);
  if (work > lattice_cap())
    throw Error(ErrorCode::IntractableEnumeration,
                "exact complexity for alphabet " + std::to_string(m) + " at n=" +
                    std::to_string(n_max) + " exceeds the enumeration cap");
}

struct TableCache {
  std::mutex mutex;
  std::map<int, std::shared_ptr<const Table>> tables;
};

TableCache& table_cache() {
  static TableCache cache;
  return cache;
}

double binary_complexity(Count n) {
  LogSumExp acc;
  for (Count k = 0; k <= n; ++k) acc.add(log_split_weight(n, k));
  return acc.value();
}

void require_positive_horizon(Count n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "complexity requires n >= 1");
}

}  // namespace

std::string_view method_name(Method method) noexcept {
  switch (method) {
    case Method::Exact: return "exact";
    case Method::Asymptotic: return "asymptotic";
    case Method::Auto: return "auto";
  }
  return "auto";
}

Method parse_method(std::string_view text) {
  if (text == "exact") return Method::Exact;
  if (text == "asymptotic") return Method::Asymptotic;
  if (text == "auto") return Method::Auto;
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(text) + "'");
}

Method resolve_method(const ModelClass& model, Count n, Method requested) {
  if (model.kind() == FamilyKind::FixedDistribution) return Method::Exact;
  if (requested != Method::Auto) return requested;
  return lattice_size(n, model.alphabet_size()) <= kAutoExactLimit ? Method::Exact
                                                                   : Method::Asymptotic;
}

std::shared_ptr<const std::vector<double>> log_complexity_table(const ModelClass& model,
                                                                Count n_max) {
  if (n_max < 0) throw Error(ErrorCode::InvalidArgument, "negative horizon");
  if (model.kind() == FamilyKind::FixedDistribution)
    return std::make_shared<const Table>(n_max + 1, 0.0);
  const int m = model.alphabet_size();
  auto& cache = table_cache();
  {
    std::lock_guard lock(cache.mutex);
    if (auto it = cache.tables.find(m);
        it != cache.tables.end() && static_cast<Count>(it->second->size()) > n_max)
      return it->second;
  }
  check_work(m, n_max);
  std::map<int, Table> memo;
  auto table = std::make_shared<const Table>(build_table(m, n_max, memo));
  std::lock_guard lock(cache.mutex);
  auto& slot = cache.tables[m];
  if (!slot || slot->size() < table->size()) slot = table;
  return slot;
}

double log_parametric_complexity_exact(const ModelClass& model, Count n) {
  require_positive_horizon(n);
  if (model.kind() == FamilyKind::FixedDistribution) return 0.0;
  if (model.alphabet_size() == 2) return binary_complexity(n);
  return (*log_complexity_table(model, n))[n];
}

double log_parametric_complexity_asymptotic(const ModelClass& model, Count n) {
  if (model.dimension() == 0)
    throw Error(ErrorCode::ZeroDimensional, "asymptotic complexity of a zero-dimensional class");
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "asymptotic complexity requires n >= 2");
  const double k = model.dimension();
  return 0.5 * k * std::log(static_cast<double>(n) / (2.0 * M_PI)) +
         std::log(fisher_integral(model));
}

double log_parametric_complexity(const ModelClass& model, Count n, Method method) {
  switch (resolve_method(model, n, method)) {
    case Method::Asymptotic: return log_parametric_complexity_asymptotic(model, n);
    default: return log_parametric_complexity_exact(model, n);
  }
}

double lattice_log_complexity(const ModelClass& model, Count n) {
  require_positive_horizon(n);
  if (model.kind() == FamilyKind::FixedDistribution) return 0.0;
  const int m = model.alphabet_size();
  check_lattice(n, m, "lattice_log_complexity");
  LogSumExp acc;
  SufficientStat stat;
  stat.n = n;
  for_each_count_vector(n, m, [&](std::span<const Count> counts) {
    stat.counts.assign(counts.begin(), counts.end());
    acc.add(log_multinomial(counts) + max_log_likelihood(model, stat));
  });
  return acc.value();
}

CodelengthReport nml_codelength(const ModelClass& model, const SufficientStat& stat,
                                Method method) {
  if (stat.n <= 0) throw Error(ErrorCode::EmptySequence, "codelength of an empty sequence");
  CodelengthReport report;
  report.n = stat.n;
  report.method = resolve_method(model, stat.n, method);
  report.neg_max_loglik = -max_log_likelihood(model, stat);
  report.log_complexity = log_parametric_complexity(model, stat.n, report.method);
  report.total = report.neg_max_loglik + report.log_complexity;
  return report;
}

NmlDistribution make_nml_distribution(const ModelClass& model, Count n, Method method) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "NML horizon must be >= 1");
  const Method resolved = resolve_method(model, n, method);
  return NmlDistribution{model, n, log_parametric_complexity(model, n, resolved), resolved};
}

double nml_log_prob(const NmlDistribution& dist, const SufficientStat& stat) {
  if (stat.n != dist.n)
    throw Error(ErrorCode::HorizonMismatch, "sequence length " + std::to_string(stat.n) +
                                                " differs from NML horizon " +
                                                std::to_string(dist.n));
  return max_log_likelihood(dist.model, stat) - dist.log_complexity;
}

double regret(const ModelClass& model, const SufficientStat& stat, Method method) {
  if (stat.n <= 0) throw Error(ErrorCode::EmptySequence, "regret of an empty sequence");
  const NmlDistribution dist = make_nml_distribution(model, stat.n, method);
  return -nml_log_prob(dist, stat) + max_log_likelihood(model, stat);
}

}  // namespace nml_ddim
