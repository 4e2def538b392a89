#include "dlmtrace/fingerprint.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace dlmtrace {

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::cell:
      return "cell";
    case Granularity::row:
      return "row";
    case Granularity::col:
      return "col";
  }
  return "unknown";
}

Granularity parse_granularity(std::string_view name) {
  if (name == "cell") return Granularity::cell;
  if (name == "row") return Granularity::row;
  if (name == "col") return Granularity::col;
  throw UsageError("unknown granularity '" + std::string(name) + "'");
}

namespace detail {

void check_shape(const Fingerprint& fp, Eigen::Index rows, Eigen::Index cols) {
  if (fp.rows() != rows || fp.cols() != cols) {
    throw DataError("shape mismatch: fingerprint " + fp.model_id + " is " +
                    shape_string(fp.rows(), fp.cols()) + ", target is " +
                    shape_string(rows, cols));
  }
}

}  // namespace detail

namespace {

struct Moments {
  long double mean = 0.0L;
  long double var = 0.0L;
};

// Two-pass moments over the values produced by `value(k)`, k in [0, n).
template <typename F>
Moments two_pass(std::size_t n, const F& value) {
  Moments m;
  for (std::size_t k = 0; k < n; ++k) m.mean += value(k);
  m.mean /= static_cast<long double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const long double d = value(k) - m.mean;
    m.var += d * d;
  }
  m.var /= static_cast<long double>(n);
  return m;
}

}  // namespace

Fingerprint fit(std::span<const Matrix> maps, std::string model_id, double variance_floor,
                Granularity granularity) {
  if (maps.empty()) throw DataError("fit: no maps for model " + model_id);
  if (!(variance_floor > 0.0)) throw UsageError("fit: variance_floor must be > 0");
  const Eigen::Index T = maps.front().rows();
  const Eigen::Index L = maps.front().cols();
  for (std::size_t k = 1; k < maps.size(); ++k) {
    if (maps[k].rows() != T || maps[k].cols() != L) {
      throw DataError("fit: map " + std::to_string(k) + " is " +
                      shape_string(maps[k].rows(), maps[k].cols()) + ", expected " +
                      shape_string(T, L));
    }
  }

  Fingerprint fp;
  fp.model_id = std::move(model_id);
  fp.n_samples = static_cast<int>(maps.size());
  fp.variance_floor = variance_floor;
  fp.granularity = granularity;
  fp.mu.resize(T, L);
  fp.var.resize(T, L);

  const std::size_t N = maps.size();
  switch (granularity) {
    case Granularity::cell:
      for (Eigen::Index t = 0; t < T; ++t) {
        for (Eigen::Index l = 0; l < L; ++l) {
          const Moments m =
              two_pass(N, [&](std::size_t n) -> long double { return maps[n](t, l); });
          fp.mu(t, l) = static_cast<double>(m.mean);
          fp.var(t, l) = static_cast<double>(m.var);
        }
      }
      break;
    case Granularity::row:
      for (Eigen::Index t = 0; t < T; ++t) {
        const auto Lu = static_cast<std::size_t>(L);
        const Moments m = two_pass(N * Lu, [&](std::size_t k) -> long double {
          return maps[k / Lu](t, static_cast<Eigen::Index>(k % Lu));
        });
        fp.mu.row(t).setConstant(static_cast<double>(m.mean));
        fp.var.row(t).setConstant(static_cast<double>(m.var));
      }
      break;
    case Granularity::col:
      for (Eigen::Index l = 0; l < L; ++l) {
        const auto Tu = static_cast<std::size_t>(T);
        const Moments m = two_pass(N * Tu, [&](std::size_t k) -> long double {
          return maps[k / Tu](static_cast<Eigen::Index>(k % Tu), l);
        });
        fp.mu.col(l).setConstant(static_cast<double>(m.mean));
        fp.var.col(l).setConstant(static_cast<double>(m.var));
      }
      break;
  }
  fp.var = fp.var.cwiseMax(variance_floor);
  return fp;
}

double loglik_constant(const Fingerprint& fp) {
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  const Eigen::Index cols = fp.cols();
  const long double s = detail::pairwise_sum(0, fp.var.size(), [&](Eigen::Index k) {
    return std::log(two_pi * static_cast<long double>(fp.var(k / cols, k % cols)));
  });
  return static_cast<double>(-0.5L * s);
}

AttributionScore attribute(std::span<const Fingerprint> fps, const Matrix& target) {
  if (fps.size() < 2) throw UsageError("attribute: need at least two fingerprints");
  std::set<std::string> ids;
  for (const auto& fp : fps) {
    if (!ids.insert(fp.model_id).second) {
      throw DataError("attribute: duplicate model_id '" + fp.model_id + "'");
    }
  }

  AttributionScore out;
  for (const auto& fp : fps) out.loglik[fp.model_id] = loglik(fp, target);

  // std::map iterates in lexicographic order, so strict '>' keeps the
  // smallest id among equal maxima.
  double best = -std::numeric_limits<double>::infinity();
  double second = -std::numeric_limits<double>::infinity();
  for (const auto& [id, ll] : out.loglik) {
    if (out.decision.empty() || ll > best) {
      second = best;
      best = ll;
      out.decision = id;
    } else if (ll > second) {
      second = ll;
    }
  }
  out.margin = best - second;
  out.tie_broken = out.margin == 0.0;
  return out;
}

}  // namespace dlmtrace
