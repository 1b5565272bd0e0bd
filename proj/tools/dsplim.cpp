// dsplim: Dempster-Shafer and Bayesian upper limits for the Poisson
// signal + background + efficiency model, and their evaluation.
//
//   dsplim limits      --input data.txt [--method ds|bayes:B1|...]
//   dsplim curves      --input data.txt
//   dsplim coverage    [--coverage-mode enumerate|importance] [--s-grid 0:25:0.25]
//   dsplim credibility --input data.txt [--prior task1a|task1b|bm,bsd,em,esd]
//   dsplim simulate    [--reps 10000] [--s-grid 0:40:0.25]
//
// Exit codes: 0 ok, 2 parse/validation, 3 numerical failure, 4 every limit unbounded.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "dsplim/cli.hpp"

namespace {

using namespace dsplim;

void parse_s_grid(const std::string& spec, cli::RunConfig& cfg) {
  double lo, hi, step;
  char tail;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%lf%c", &lo, &hi, &step, &tail) != 3) {
    throw DomainError("--s-grid expects lo:hi:step");
  }
  eval::s_grid(lo, hi, step);  // validates
  cfg.s_lo = lo;
  cfg.s_hi = hi;
  cfg.s_step = step;
}

std::vector<ds::Dataset> read_input(const std::string& path) {
  if (path.empty()) throw DomainError("--input is required for this command");
  if (path == "-") return io::parse_dataset_file(std::cin);
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read '" + path + "'");
  return io::parse_dataset_file(in);
}

int run(const cli::RunConfig& cfg, const std::string& input, const std::string& output) {
  std::ostringstream buf;
  int code = cli::kOk;
  if (cfg.command == "limits") code = cli::cmd_limits(cfg, read_input(input), buf);
  else if (cfg.command == "curves") code = cli::cmd_curves(cfg, read_input(input), buf);
  else if (cfg.command == "coverage") code = cli::cmd_coverage(cfg, buf, &std::cerr);
  else if (cfg.command == "credibility") code = cli::cmd_credibility(cfg, read_input(input), buf);
  else if (cfg.command == "simulate") code = cli::cmd_simulate(cfg, buf);

  if (output.empty() || output == "-") {
    std::cout << buf.str();
  } else {
    std::ofstream out(output, std::ios::binary);
    if (!out) throw DomainError("cannot write '" + output + "'");
    out << buf.str();
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dempster-Shafer upper limits for Poisson counts with background and efficiency"};
  app.require_subcommand(1);

  cli::RunConfig cfg;
  std::string input, output, s_grid, format = std::string(io::kFormat);
  int threads = -1;

  const char* names[] = {"limits", "curves", "coverage", "credibility", "simulate"};
  const char* help[] = {"upper limits per dataset", "channel CDFs and the combined density",
                        "frequentist coverage curve", "Bayesian credibility of each limit",
                        "fixed-truth simulation study"};
  for (int i = 0; i < 5; ++i) {
    auto* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--input", input, "dataset file (dsplim/1), '-' for stdin");
    sub->add_option("--output", output, "CSV output path, default stdout");
    sub->add_option("--method", cfg.method, "ds, bayes:B1, bayes:B2, bayes:upper or bayes:lower")->capture_default_str();
    sub->add_option("--quantiles", cfg.quantiles, "upper-limit levels")->delimiter(',')->capture_default_str();
    sub->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    sub->add_option("--threads", threads, "worker threads, 0 = one per core (env DSPLIM_THREADS)");
    sub->add_option("--grid-points", cfg.grid.points, "DS grid knots")->capture_default_str();
    sub->add_option("--tail-eps", cfg.grid.tail_eps, "DS grid tail mass")->capture_default_str();
    sub->add_option("--format", format, "dataset format")->check(CLI::IsMember({std::string(io::kFormat)}));
    sub->add_option("--s-grid", s_grid, "signal grid lo:hi:step");
    sub->add_option("--samples", cfg.samples, "Monte Carlo draws")->capture_default_str();
    sub->add_option("--s-ref", cfg.s_ref, "importance-sampling reference signal, default grid midpoint");
    sub->add_option("--prior", cfg.prior, "credibility prior: task1a, task1b or b_mean,b_sd,e_mean,e_sd")
        ->capture_default_str();
    sub->add_option("--coverage-mode", cfg.coverage_mode, "enumerate or importance")->capture_default_str();
    sub->add_option("--cutoff", cfg.cutoff, "enumeration tail mass per margin")->capture_default_str();
    sub->add_option("--reps", cfg.reps, "datasets per signal value")->capture_default_str();
    sub->add_option("--t", cfg.t, "background scale");
    sub->add_option("--u", cfg.u, "efficiency scale");
    sub->add_option("--eps", cfg.eps, "true efficiency");
    sub->add_option("--b", cfg.b, "true background");
    sub->callback([&cfg, i, &names] { cfg.command = names[i]; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kInvalid;
  }

  try {
    if (threads < 0) {
      const char* env = std::getenv("DSPLIM_THREADS");
      threads = env ? std::atoi(env) : 0;
      if (threads < 0) threads = 0;
    }
    cfg.threads = static_cast<unsigned>(threads);
    if (!s_grid.empty()) parse_s_grid(s_grid, cfg);
    return run(cfg, input, output);
  } catch (const ParseError& e) {
    std::cerr << "dsplim: parse error: " << e.what() << '\n';
    return cli::kInvalid;
  } catch (const NumericalError& e) {
    std::cerr << "dsplim: numerical failure: " << e.what() << '\n';
    return cli::kNumerical;
  } catch (const UnboundedLimit& e) {
    std::cerr << "dsplim: " << e.what() << '\n';
    return cli::kUnboundedOnly;
  } catch (const std::exception& e) {
    std::cerr << "dsplim: " << e.what() << '\n';
    return cli::kInvalid;
  }
}
