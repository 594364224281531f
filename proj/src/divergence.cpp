#include "nml_ddim/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "nml_ddim/error.hpp"

namespace nml_ddim {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double family_unnormalized(const FamilyNmlLaw& law, std::span<const Count> counts, Count length) {
  SufficientStat stat{{counts.begin(), counts.end()}, length};
  double best = kNegInf;
  for (std::size_t i = 0; i < law.members.size(); ++i)
    best = std::max(best, max_log_likelihood(law.members[i], stat) - law.log_complexities[i]);
  return best - std::log(static_cast<double>(law.members.size()));
}

// Dense table over the count lattice of a fixed total; the first m-1
// coordinates index the entry, the last is implied.
class LatticeTable {
 public:
  LatticeTable(Count total, int m) : total_(total), m_(m) {
    const double size = std::pow(static_cast<double>(total + 1), m - 1);
    if (size > lattice_cap())
      throw Error(ErrorCode::IntractableEnumeration, "count lattice table exceeds the cap");
    values_.assign(static_cast<std::size_t>(size), kNegInf);
  }

  Count total() const { return total_; }

  std::size_t index(std::span<const Count> counts) const {
    std::size_t idx = 0;
    for (int j = m_ - 2; j >= 0; --j) idx = idx * (total_ + 1) + static_cast<std::size_t>(counts[j]);
    return idx;
  }

  double& at(std::span<const Count> counts) { return values_[index(counts)]; }
  double at(std::span<const Count> counts) const { return values_[index(counts)]; }

 private:
  Count total_;
  int m_;
  std::vector<double> values_;
};

// log of sum over sequences of one piece with counts c of prod_j theta_j^(w c_j)
LatticeTable piece_table(Count length, std::span<const double> params, double weight) {
  const int m = static_cast<int>(params.size());
  LatticeTable table(length, m);
  for_each_count_vector(length, m, [&](std::span<const Count> c) {
    table.at(c) = log_multinomial(c) + weight * log_likelihood(params, c);
  });
  return table;
}

LatticeTable convolve(const LatticeTable& a, const LatticeTable& b, int m) {
  const Count total = a.total() + b.total();
  if (lattice_size(a.total(), m) * lattice_size(b.total(), m) > lattice_cap())
    throw Error(ErrorCode::IntractableEnumeration, "lattice convolution exceeds the cap");
  LatticeTable out(total, m);
  std::vector<LogSumExp> acc(static_cast<std::size_t>(std::pow(total + 1.0, m - 1)));
  std::vector<Count> sum(m);
  for_each_count_vector(a.total(), m, [&](std::span<const Count> ca) {
    const double va = a.at(ca);
    if (va == kNegInf) return;
    for_each_count_vector(b.total(), m, [&](std::span<const Count> cb) {
      const double vb = b.at(cb);
      if (vb == kNegInf) return;
      for (int j = 0; j < m; ++j) sum[j] = ca[j] + cb[j];
      acc[out.index(sum)].add(va + vb);
    });
  });
  for_each_count_vector(total, m, [&](std::span<const Count> c) {
    out.at(c) = acc[out.index(c)].value();
  });
  return out;
}

double pow_weight(double p, double w) {
  if (p == 0.0) return 0.0;
  return std::pow(p, w);
}

double product_vs_product(const DistributionHandle& p, const DistributionHandle& q, double alpha) {
  const auto& sp = p.segments();
  const auto& sq = q.segments();
  std::size_t i = 0, k = 0;
  Count end_p = sp[0].length, end_q = sq[0].length, pos = 0;
  double total = 0.0;
  while (pos < p.n()) {
    const Count next = std::min(end_p, end_q);
    const auto& a = std::get<ProductLaw>(sp[i].law).params;
    const auto& b = std::get<ProductLaw>(sq[k].law).params;
    double coeff = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j)
      coeff += pow_weight(a[j], alpha) * pow_weight(b[j], 1.0 - alpha);
    total += static_cast<double>(next - pos) * std::log(coeff);
    pos = next;
    if (pos == end_p && ++i < sp.size()) end_p += sp[i].length;
    if (pos == end_q && ++k < sq.size()) end_q += sq[k].length;
  }
  return total;
}

double aligned(const DistributionHandle& p, const DistributionHandle& q, double alpha) {
  const int m = p.alphabet_size();
  double total = 0.0;
  for (std::size_t s = 0; s < p.segments().size(); ++s) {
    const Segment& a = p.segments()[s];
    const Segment& b = q.segments()[s];
    check_lattice(a.length, m, "log_affinity");
    LogSumExp acc;
    for_each_count_vector(a.length, m, [&](std::span<const Count> c) {
      const double la = segment_log_prob(a, c);
      const double lb = segment_log_prob(b, c);
      if (la == kNegInf || lb == kNegInf) return;
      acc.add(log_multinomial(c) + alpha * la + (1.0 - alpha) * lb);
    });
    total += acc.value();
  }
  return total;
}

// outer has arbitrary exchangeable segments; inner is all-product.
double refined(const DistributionHandle& outer, const DistributionHandle& inner, double alpha) {
  const int m = outer.alphabet_size();
  const auto& si = inner.segments();
  std::size_t k = 0;
  Count end_inner = si[0].length;
  Count pos = 0;
  double total = 0.0;
  for (const Segment& seg : outer.segments()) {
    const Count seg_end = pos + seg.length;
    std::optional<LatticeTable> acc;
    while (pos < seg_end) {
      const Count next = std::min(seg_end, end_inner);
      LatticeTable piece =
          piece_table(next - pos, std::get<ProductLaw>(si[k].law).params, 1.0 - alpha);
      acc = acc ? convolve(*acc, piece, m) : std::move(piece);
      pos = next;
      if (pos == end_inner && ++k < si.size()) end_inner += si[k].length;
    }
    LogSumExp sum;
    for_each_count_vector(seg.length, m, [&](std::span<const Count> c) {
      const double g = acc->at(c);
      const double f = segment_log_prob(seg, c);
      if (g == kNegInf || f == kNegInf) return;
      sum.add(g + alpha * f);
    });
    total += sum.value();
  }
  return total;
}

}  // namespace

double segment_log_prob(const Segment& segment, std::span<const Count> counts) {
  return std::visit(
      Overloaded{
          [&](const ProductLaw& law) { return log_likelihood(law.params, counts); },
          [&](const NmlLaw& law) {
            SufficientStat stat{{counts.begin(), counts.end()}, segment.length};
            return max_log_likelihood(law.model, stat) - law.log_complexity;
          },
          [&](const FamilyNmlLaw& law) {
            return family_unnormalized(law, counts, segment.length) - law.log_normalizer;
          },
      },
      segment.law);
}

DistributionHandle::DistributionHandle(std::vector<Segment> segments, int alphabet_size)
    : segments_(std::move(segments)), alphabet_size_(alphabet_size) {
  for (const auto& s : segments_) {
    if (s.length < 1) throw Error(ErrorCode::EmptySegment, "segment lengths must be >= 1");
    n_ += s.length;
  }
}

DistributionHandle DistributionHandle::fixed_product(std::vector<double> params, Count n) {
  validate_params(params);
  const int m = static_cast<int>(params.size());
  return DistributionHandle({Segment{n, ProductLaw{std::move(params)}}}, m);
}

DistributionHandle DistributionHandle::nml(const NmlDistribution& dist) {
  if (dist.model.kind() == FamilyKind::FixedDistribution)
    return fixed_product(dist.model.fixed_params(), dist.n);
  return DistributionHandle({Segment{dist.n, NmlLaw{dist.model, dist.log_complexity}}},
                            dist.model.alphabet_size());
}

DistributionHandle DistributionHandle::nml(const ModelClass& model, Count n, Method method) {
  return nml(make_nml_distribution(model, n, method));
}

DistributionHandle DistributionHandle::family_nml(std::vector<ModelClass> members, Count n,
                                                  Method method) {
  if (members.empty()) throw Error(ErrorCode::InvalidArgument, "empty family");
  const int m = members.front().alphabet_size();
  FamilyNmlLaw law;
  for (const auto& member : members) {
    if (member.alphabet_size() != m)
      throw Error(ErrorCode::InvalidArgument, "family members disagree on the alphabet");
    law.log_complexities.push_back(log_parametric_complexity(member, n, method));
  }
  law.members = std::move(members);
  check_lattice(n, m, "family_nml");
  LogSumExp acc;
  for_each_count_vector(n, m, [&](std::span<const Count> c) {
    acc.add(log_multinomial(c) + family_unnormalized(law, c, n));
  });
  law.log_normalizer = acc.value();
  return DistributionHandle({Segment{n, std::move(law)}}, m);
}

DistributionHandle DistributionHandle::concat(std::span<const DistributionHandle> parts) {
  if (parts.empty()) throw Error(ErrorCode::InvalidArgument, "concatenation of nothing");
  std::vector<Segment> segments;
  const int m = parts.front().alphabet_size();
  for (const auto& part : parts) {
    if (part.alphabet_size() != m)
      throw Error(ErrorCode::InvalidArgument, "concatenated parts disagree on the alphabet");
    segments.insert(segments.end(), part.segments().begin(), part.segments().end());
  }
  return DistributionHandle(std::move(segments), m);
}

HandleKind DistributionHandle::kind() const noexcept {
  if (segments_.size() > 1) return HandleKind::ConcatProduct;
  return std::holds_alternative<ProductLaw>(segments_.front().law) ? HandleKind::FixedProduct
                                                                   : HandleKind::Nml;
}

std::vector<Count> DistributionHandle::boundaries() const {
  std::vector<Count> out;
  Count pos = 0;
  for (const auto& s : segments_) out.push_back(pos += s.length);
  return out;
}

bool DistributionHandle::all_product() const noexcept {
  return std::all_of(segments_.begin(), segments_.end(), [](const Segment& s) {
    return std::holds_alternative<ProductLaw>(s.law);
  });
}

double DistributionHandle::log_prob(std::span<const Symbol> seq) const {
  if (static_cast<Count>(seq.size()) != n_)
    throw Error(ErrorCode::HorizonMismatch, "sequence length differs from the handle horizon");
  double total = 0.0;
  std::size_t pos = 0;
  for (const auto& s : segments_) {
    const auto stat = sufficient_stat(seq.subspan(pos, s.length), alphabet_size_);
    total += segment_log_prob(s, stat.counts);
    pos += s.length;
  }
  return total;
}

HandleSampler::HandleSampler(const DistributionHandle& handle) : handle_(handle) {
  const int m = handle_.alphabet_size();
  for (const auto& seg : handle_.segments()) {
    if (std::holds_alternative<ProductLaw>(seg.law)) {
      tables_.push_back(nullptr);
      continue;
    }
    check_lattice(seg.length, m, "HandleSampler");
    auto table = std::make_shared<SegmentTable>();
    LogSumExp norm;
    std::vector<double> logw;
    for_each_count_vector(seg.length, m, [&](std::span<const Count> c) {
      table->classes.emplace_back(c.begin(), c.end());
      logw.push_back(log_multinomial(c) + segment_log_prob(seg, c));
      norm.add(logw.back());
    });
    double running = 0.0;
    for (double lw : logw) table->cdf.push_back(running += std::exp(lw - norm.value()));
    tables_.push_back(std::move(table));
  }
}

Sequence HandleSampler::draw(Rng& rng) const {
  Sequence out;
  out.reserve(static_cast<std::size_t>(handle_.n()));
  for (std::size_t s = 0; s < handle_.segments().size(); ++s) {
    const Segment& seg = handle_.segments()[s];
    if (const auto* law = std::get_if<ProductLaw>(&seg.law)) {
      Sequence part = sample(law->params, static_cast<std::size_t>(seg.length), rng);
      out.insert(out.end(), part.begin(), part.end());
      continue;
    }
    const SegmentTable& table = *tables_[s];
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * table.cdf.back();
    auto it = std::upper_bound(table.cdf.begin(), table.cdf.end(), u);
    if (it == table.cdf.end()) --it;
    const auto& counts = table.classes[static_cast<std::size_t>(it - table.cdf.begin())];
    Sequence part;
    for (std::size_t j = 0; j < counts.size(); ++j)
      part.insert(part.end(), static_cast<std::size_t>(counts[j]), static_cast<Symbol>(j));
    std::shuffle(part.begin(), part.end(), rng);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

double log_affinity(const DistributionHandle& p, const DistributionHandle& q, double alpha) {
  if (p.n() != q.n())
    throw Error(ErrorCode::HorizonMismatch, "distributions have different horizons");
  if (p.alphabet_size() != q.alphabet_size())
    throw Error(ErrorCode::InvalidArgument, "distributions have different alphabets");
  if (p.all_product() && q.all_product()) return product_vs_product(p, q, alpha);
  if (p.boundaries() == q.boundaries()) return aligned(p, q, alpha);
  if (q.all_product()) return refined(p, q, alpha);
  if (p.all_product()) return refined(q, p, 1.0 - alpha);
  throw Error(ErrorCode::ExactIntractable,
              "segment boundaries differ and neither side is a product; use Monte Carlo");
}

double bhattacharyya(const DistributionHandle& p, const DistributionHandle& q) {
  const double d = -log_affinity(p, q, 0.5) / static_cast<double>(p.n());
  return std::max(0.0, d);
}

MonteCarloEstimate bhattacharyya_monte_carlo(const DistributionHandle& p,
                                             const DistributionHandle& q, std::size_t trials,
                                             std::uint64_t seed) {
  if (p.n() != q.n())
    throw Error(ErrorCode::HorizonMismatch, "distributions have different horizons");
  if (trials < 2) throw Error(ErrorCode::InvalidArgument, "Monte Carlo needs >= 2 trials");
  const HandleSampler sampler(p);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(mix_seed(seed, t));
    const Sequence y = sampler.draw(rng);
    const double w = std::exp(0.5 * (q.log_prob(y) - p.log_prob(y)));
    sum += w;
    sum_sq += w * w;
  }
  const double count = static_cast<double>(trials);
  const double mean = sum / count;
  const double var = std::max(0.0, (sum_sq - count * mean * mean) / (count - 1.0));
  const double n = static_cast<double>(p.n());
  MonteCarloEstimate est;
  est.trials = trials;
  est.value = -std::log(mean) / n;
  est.std_error = std::sqrt(var / count) / (mean * n);
  return est;
}

double alpha_divergence(const DistributionHandle& p, const DistributionHandle& q, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in (0, 1)");
  const double per_symbol = std::exp(log_affinity(p, q, alpha) / static_cast<double>(p.n()));
  return std::max(0.0, (1.0 - per_symbol) / (2.0 * alpha * (1.0 - alpha)));
}

double hellinger(const DistributionHandle& p, const DistributionHandle& q) {
  return alpha_divergence(p, q, 0.5);
}

double kl_per_symbol(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw Error(ErrorCode::InvalidArgument, "distributions have different alphabets");
  double kl = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] == 0.0) continue;
    if (q[j] == 0.0)
      throw Error(ErrorCode::SupportViolation,
                  "q has zero mass on symbol " + std::to_string(j) + " where p is positive");
    kl += p[j] * std::log(p[j] / q[j]);
  }
  return kl;
}

}  // namespace nml_ddim
