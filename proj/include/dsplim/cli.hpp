// Command layer behind the dsplim executable. Each command reads its
// inputs from RunConfig, writes CSV to a stream and returns an exit code.
// CSV: '.' decimals, %.17g, LF line endings, fixed header row.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dsplim/bayes.hpp"
#include "dsplim/dataset_io.hpp"
#include "dsplim/ds_limits.hpp"
#include "dsplim/errors.hpp"
#include "dsplim/evalharness.hpp"

namespace dsplim::cli {

enum ExitCode : int { kOk = 0, kInvalid = 2, kNumerical = 3, kUnboundedOnly = 4 };

struct RunConfig {
  std::string command;
  std::string method = "ds";  // ds | bayes:B1 | bayes:B2 | bayes:upper | bayes:lower
  std::vector<double> quantiles = {0.90, 0.99};
  std::uint64_t seed = sampling::kDefaultSeed;
  unsigned threads = 0;

  ds::GridConfig grid;

  // coverage / simulate truth and grid; NaN bounds pick the command default
  double t = NAN, u = NAN, eps = NAN, b = NAN;
  double s_lo = NAN, s_hi = NAN, s_step = NAN;
  std::string coverage_mode = "enumerate";  // enumerate | importance
  double cutoff = 1e-10;                    // enumeration tail mass per margin
  std::uint64_t samples = 10000;
  double s_ref = NAN;                       // NaN: grid midpoint
  std::uint64_t reps = 10000;

  // credibility prior: task1a | task1b | b_mean,b_sd,e_mean,e_sd
  std::string prior = "task1a";

  void validate() const {
    eval::detail::check_levels(quantiles);
    grid.validate();
    if (!(cutoff > 0.0 && cutoff < 1.0)) throw DomainError("cutoff must lie in (0, 1)");
    if (samples == 0) throw DomainError("samples must be positive");
    if (reps == 0) throw DomainError("reps must be positive");
  }
};

inline eval::LimitMethod make_method(const RunConfig& cfg) {
  if (cfg.method == "ds") return eval::ds_method(cfg.grid);
  if (cfg.method.rfind("bayes:", 0) == 0) return eval::bayes_method(bayes::PriorConfig::preset(cfg.method.substr(6)));
  throw DomainError("unknown method '" + cfg.method + "'");
}

inline eval::CredibilityConfig make_prior(const std::string& spec) {
  if (spec == "task1a") return eval::CredibilityConfig::task1a();
  if (spec == "task1b") return eval::CredibilityConfig::task1b();
  eval::CredibilityConfig c;
  char tail = 0;
  if (std::sscanf(spec.c_str(), "%lf,%lf,%lf,%lf%c", &c.b_mean, &c.b_sd, &c.e_mean, &c.e_sd, &tail) != 4) {
    throw DomainError("prior must be task1a, task1b or b_mean,b_sd,e_mean,e_sd");
  }
  c.validate();
  return c;
}

inline std::string level_name(double q) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", q);
  return buf;
}

using io::format_double;

inline std::string format_limit(double v) { return std::isinf(v) ? "inf" : format_double(v); }

/// One row per dataset: dataset_id, limit_<q>..., status.
inline int cmd_limits(const RunConfig& cfg, const std::vector<ds::Dataset>& data, std::ostream& out) {
  cfg.validate();
  const auto method = make_method(cfg);
  const auto rows = parallel_map<std::vector<double>>(data.size(), cfg.threads, [&](std::size_t i) {
    return method.limits(data[i], cfg.quantiles);
  });
  out << "dataset_id";
  for (double q : cfg.quantiles) out << ",limit_" << level_name(q);
  out << ",status\n";
  std::size_t unbounded = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const bool inf = std::isinf(rows[i].back());
    unbounded += inf;
    out << i;
    for (double v : rows[i]) out << ',' << (std::isinf(v) ? "" : format_double(v));
    out << ',' << (inf ? "unbounded" : "ok") << '\n';
  }
  return !rows.empty() && unbounded == rows.size() ? kUnboundedOnly : kOk;
}

/// Channel curves and the combined density on each dataset's DS grid.
/// Rows with series "combined" fill pdf/cdf; channel rows fill the rest.
inline int cmd_curves(const RunConfig& cfg, const std::vector<ds::Dataset>& data, std::ostream& out) {
  cfg.validate();
  out << "dataset_id,series,x,f_lower,f_upper,r,pdf,cdf\n";
  std::size_t unbounded = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i].validate();
    const auto xs = ds::make_grid(data[i].channels, cfg.grid);
    std::vector<ds::ChannelCurves> curves;
    for (std::size_t c = 0; c < data[i].channels.size(); ++c) {
      curves.push_back(ds::channel_curves(data[i].channels[c], xs, cfg.grid.quadrature));
      const auto& cv = curves.back();
      for (std::size_t k = 0; k < cv.xs.size(); ++k) {
        out << i << ',' << c << ',' << format_double(cv.xs[k]) << ',' << format_double(cv.f_lower[k]) << ','
            << format_double(cv.f_upper[k]) << ',' << format_double(cv.r[k]) << ",,\n";
      }
    }
    try {
      const auto d = ds::combine_channels(curves, cfg.grid);
      for (std::size_t k = 0; k < d.xs.size(); ++k) {
        out << i << ",combined," << format_double(d.xs[k]) << ",,,," << format_double(d.pdf[k]) << ','
            << format_double(d.cdf[k]) << '\n';
      }
    } catch (const UnboundedLimit&) {
      ++unbounded;
    }
  }
  return !data.empty() && unbounded == data.size() ? kUnboundedOnly : kOk;
}

inline std::vector<double> grid_or(const RunConfig& cfg, double lo, double hi, double step) {
  return eval::s_grid(std::isnan(cfg.s_lo) ? lo : cfg.s_lo, std::isnan(cfg.s_hi) ? hi : cfg.s_hi,
                      std::isnan(cfg.s_step) ? step : cfg.s_step);
}

inline double value_or(double v, double fallback) { return std::isnan(v) ? fallback : v; }

/// Coverage curve (s, estimate, std_err, ess) at the first quantile.
/// Defaults: t=3.3, u=10, eps=0.1, b=0.3 and s in 0:25:0.25.
inline int cmd_coverage(const RunConfig& cfg, std::ostream& out, std::ostream* log = nullptr) {
  cfg.validate();
  const auto method = make_method(cfg);
  const auto grid = grid_or(cfg, 0.0, 25.0, 0.25);
  const double t = value_or(cfg.t, 3.3), u = value_or(cfg.u, 10.0);
  const double eps = value_or(cfg.eps, 0.1), b = value_or(cfg.b, 0.3);
  eval::CoverageReport rep;
  if (cfg.coverage_mode == "enumerate") {
    rep = eval::coverage_enumerate(method, t, u, eps, b, grid, cfg.quantiles.front(), cfg.cutoff, 2'000'000,
                                   cfg.threads);
  } else if (cfg.coverage_mode == "importance") {
    const double s_ref = value_or(cfg.s_ref, 0.5 * (grid.front() + grid.back()));
    rep = eval::coverage_importance(method, t, u, eps, b, grid, cfg.quantiles.front(), cfg.samples, s_ref, cfg.seed,
                                    cfg.threads);
  } else {
    throw DomainError("coverage mode must be enumerate or importance");
  }
  if (log) {
    for (const auto& w : rep.warnings) *log << "warning: " << w << '\n';
  }
  out << "s,estimate,std_err,ess\n";
  for (std::size_t k = 0; k < rep.s_grid.size(); ++k) {
    out << format_double(rep.s_grid[k]) << ',' << format_double(rep.estimate[k]) << ','
        << format_double(rep.std_err[k]) << ',' << format_double(rep.ess[k]) << '\n';
  }
  return kOk;
}

/// Credibility of each dataset's limits under the chosen prior.
inline int cmd_credibility(const RunConfig& cfg, const std::vector<ds::Dataset>& data, std::ostream& out) {
  cfg.validate();
  const auto method = make_method(cfg);
  const auto prior = make_prior(cfg.prior);
  for (const auto& d : data) {
    if (d.channels.size() != 1) throw DomainError("credibility: single-channel datasets only");
  }
  const auto rows = parallel_map<std::vector<std::pair<double, eval::CredibilityEstimate>>>(
      data.size(), cfg.threads, [&](std::size_t i) {
        const auto lims = method.limits(data[i], cfg.quantiles);
        sampling::RngHandle rng(cfg.seed, sampling::stream_id("credibility", i));
        const auto cred = eval::credibility_curve(lims, data[i].channels[0], prior, cfg.samples, rng);
        std::vector<std::pair<double, eval::CredibilityEstimate>> r;
        for (std::size_t l = 0; l < lims.size(); ++l) r.emplace_back(lims[l], cred[l]);
        return r;
      });
  out << "dataset_id,level,limit,credibility,std_err\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t l = 0; l < rows[i].size(); ++l) {
      out << i << ',' << level_name(cfg.quantiles[l]) << ',' << format_limit(rows[i][l].first) << ','
          << format_double(rows[i][l].second.value) << ',' << format_double(rows[i][l].second.std_err) << '\n';
    }
  }
  return kOk;
}

/// Fixed-truth simulation summarized as (method, level, mean, stdev).
/// Defaults: t=33, u=100, eps=1, b=3 and s in 0:40:0.25.
inline int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  eval::StudyConfig sc;
  sc.t = value_or(cfg.t, 33.0);
  sc.u = value_or(cfg.u, 100.0);
  sc.eps = value_or(cfg.eps, 1.0);
  sc.b = value_or(cfg.b, 3.0);
  sc.s_grid = grid_or(cfg, 0.0, 40.0, 0.25);
  sc.reps = cfg.reps;
  sc.levels = cfg.quantiles;
  sc.seed = cfg.seed;
  sc.threads = cfg.threads;
  const auto methods = eval::standard_methods(cfg.grid);
  const auto res = eval::simulate_study(sc, methods);
  out << "method,level,mean,stdev\n";
  for (const auto& row : res.summary) {
    out << row.method << ',' << level_name(row.level) << ',' << format_double(row.mean) << ','
        << format_double(row.stdev) << '\n';
  }
  return kOk;
}

}  // namespace dsplim::cli
