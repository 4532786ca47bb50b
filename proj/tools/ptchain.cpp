// Command-line front end: spectrum / transport / classify / census / ep / evolve.

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ptchain/errors.hpp"
#include "ptchain/exceptional.hpp"
#include "ptchain/io.hpp"
#include "ptchain/spectrum.hpp"
#include "ptchain/state_classify.hpp"
#include "ptchain/transport.hpp"

namespace {

using namespace ptchain;

enum ExitCode { kOk = 0, kUsage = 1, kIo = 2, kNumerical = 3 };

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  int N = 10;
  int k = 1;
  double t = 1.0;
  double eta = 0.0;
  std::string eta_range;
  std::string k_range;
  std::string out;
  std::string format;
  double tol_secular = 1e-11;
  double tol_eigen = 1e-9;
  int threads = 0;
  // evolve
  std::string init = "site:1";
  double t_final = 10.0;
  double dt = 0.0;
  int sample_every = 1;
};

struct Range {
  double lo, hi;
  int steps;
};

Range parse_range(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string p;
  while (std::getline(ss, p, ':')) parts.push_back(p);
  if (parts.size() != 3) throw UsageError("range must be MIN:MAX:STEPS, got '" + spec + "'");
  Range r{parse_double(parts[0]), parse_double(parts[1]), 0};
  r.steps = static_cast<int>(parse_double(parts[2]));
  if (r.steps < 2 || !(r.lo >= 0.0) || !(r.hi >= r.lo))
    throw UsageError("range needs MIN >= 0, MAX >= MIN and STEPS >= 2");
  return r;
}

std::vector<double> eta_values(const Options& o) {
  if (o.eta_range.empty()) return {o.eta};
  const Range r = parse_range(o.eta_range);
  std::vector<double> v(static_cast<std::size_t>(r.steps));
  for (int i = 0; i < r.steps; ++i) v[i] = r.lo + (r.hi - r.lo) * i / (r.steps - 1);
  return v;
}

std::pair<int, int> k_values(const Options& o) {
  if (o.k_range.empty()) return {1, o.N / 2};
  const auto colon = o.k_range.find(':');
  if (colon == std::string::npos) throw UsageError("--k-range must be KMIN:KMAX");
  const int lo = static_cast<int>(parse_double(o.k_range.substr(0, colon)));
  const int hi = static_cast<int>(parse_double(o.k_range.substr(colon + 1)));
  if (lo < 1 || hi < lo || 2 * hi > o.N) throw UsageError("--k-range must lie within 1..N/2");
  return {lo, hi};
}

// Runs f(i) for i in [0, n) on a fixed pool; results land in caller-owned slots.
void parallel_for(int n, int threads, const std::function<void(int)>& f) {
  unsigned nt = threads > 0 ? static_cast<unsigned>(threads) : std::thread::hardware_concurrency();
  nt = std::max(1u, std::min<unsigned>(nt, static_cast<unsigned>(n)));
  std::vector<std::exception_ptr> errors(nt);
  const auto work = [&](unsigned w) {
    try {
      for (int i = static_cast<int>(w); i < n; i += static_cast<int>(nt)) f(i);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (nt == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < nt; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw IoError("cannot open output file: " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
  void finish() {
    stream().flush();
    if (!stream()) throw IoError("write failed");
  }

 private:
  std::ofstream file_;
};

SolverOptions solver_options(const Options& o) {
  SolverOptions s;
  s.secular_tol = o.tol_secular;
  s.eigen_tol = o.tol_eigen;
  return s;
}

std::vector<Spectrum> sweep_spectra(const Options& o) {
  const ChainConfig base = ChainConfig::normalized(o.N, o.k, o.t, 0.0);
  const std::vector<double> etas = eta_values(o);
  std::vector<Spectrum> out(etas.size());
  parallel_for(static_cast<int>(etas.size()), o.threads, [&](int i) {
    out[i] = solve_spectrum(base.with_eta(etas[i]), solver_options(o));
  });
  return out;
}

int cmd_spectrum(const Options& o, const OutputMeta& meta) {
  const auto sweep = sweep_spectra(o);
  Output out(o.out);
  if (o.format == "json") write_spectrum_json(out.stream(), sweep, meta);
  else write_spectrum_csv(out.stream(), sweep, meta);
  out.finish();
  return kOk;
}

int cmd_transport(const Options& o, const OutputMeta& meta) {
  const auto sweep = sweep_spectra(o);
  std::vector<TransportReport> reports;
  reports.reserve(sweep.size());
  for (const auto& s : sweep) reports.push_back(make_transport_report(s));
  Output out(o.out);
  if (o.format == "json") write_transport_json(out.stream(), reports, meta);
  else write_transport_csv(out.stream(), reports, meta);
  out.finish();
  return kOk;
}

int cmd_classify(const Options& o, const OutputMeta& meta, bool json_default) {
  ChainConfig{o.N, 1}.validate();
  const auto [lo, hi] = k_values(o);
  std::vector<SpecialStateCensus> rows;
  for (int k = lo; k <= hi; ++k) rows.push_back(make_census(o.N, k));
  const bool json = o.format.empty() ? json_default : o.format == "json";
  Output out(o.out);
  if (json) write_census_json(out.stream(), rows, meta);
  else write_census_csv(out.stream(), rows, meta);
  out.finish();
  return kOk;
}

int cmd_ep(const Options& o, const OutputMeta& meta) {
  const ChainConfig family = ChainConfig::normalized(o.N, o.k, o.t, 0.0);
  EPSearchOptions eo;
  if (!o.eta_range.empty()) {
    const Range r = parse_range(o.eta_range);
    eo.eta_min = r.lo;
    eo.eta_max = r.hi;
    eo.grid = r.steps;
  }
  eo.threads = o.threads;
  const EPSearchResult res = find_exceptional_points(family, eo);
  Output out(o.out);
  if (o.format == "csv") write_ep_csv(out.stream(), res, meta);
  else write_ep_json(out.stream(), family, res, meta);
  out.finish();
  return kOk;
}

ComplexVector initial_state(const Options& o, const ChainConfig& cfg) {
  const auto colon = o.init.find(':');
  if (colon == std::string::npos) throw UsageError("--init must be site:j, eigenstate:index or file:path");
  const std::string kind = o.init.substr(0, colon), arg = o.init.substr(colon + 1);
  if (kind == "site") {
    const int j = static_cast<int>(parse_double(arg));
    if (j < 1 || j > cfg.N) throw UsageError("--init site index out of range");
    ComplexVector c = ComplexVector::Zero(cfg.N);
    c[j - 1] = 1.0;
    return c;
  }
  if (kind == "eigenstate") {
    const int idx = static_cast<int>(parse_double(arg));
    const Spectrum s = solve_spectrum(cfg, solver_options(o));
    if (idx < 0 || idx >= cfg.N) throw UsageError("--init eigenstate index out of range");
    return s.pairs[idx].vector;
  }
  if (kind == "file") {
    ComplexVector c;
    try {
      c = read_state_file(arg);
    } catch (const std::ios_base::failure& e) {
      throw IoError(e.what());
    }
    if (c.size() != cfg.N) throw UsageError("state file has the wrong number of amplitudes");
    return c;
  }
  throw UsageError("unknown --init kind: " + kind);
}

int cmd_evolve(const Options& o, const OutputMeta& meta) {
  if (o.format == "json") throw UsageError("evolve writes CSV only");
  const ChainConfig cfg = ChainConfig::normalized(o.N, o.k, o.t, o.eta);
  const WaveState init{initial_state(o, cfg), 0.0};
  const double dt = o.dt > 0.0 ? o.dt : default_time_step(cfg);
  if (o.sample_every < 1) throw UsageError("--sample-every must be at least 1");
  Output out(o.out);
  std::ostream& os = out.stream();
  write_trajectory_header(os, meta);
  double max_residual = 0.0;
  long long step = 0;
  WaveState last = init;
  const double t_end = o.t_final;
  evolve_visit(init, cfg, o.t_final, dt, [&](const WaveState& s) {
    for (double r : continuity_residual(s, cfg)) max_residual = std::max(max_residual, std::abs(r));
    if (step++ % o.sample_every == 0 || s.time == t_end) write_trajectory_rows(os, s);
    last = s;
  });
  os << "# max_continuity_residual=" << format_double(max_residual) << '\n';
  os << "# norm_ratio=" << format_double(last.c.squaredNorm() / init.c.squaredNorm()) << '\n';
  out.finish();
  return kOk;
}

std::string invocation(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PT-symmetric tight-binding chain: spectra, transport, exceptional points"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI file with the same keys as the flags; flags win");
  app.set_version_flag("--version", std::string(library_version()));

  Options o;
  const auto common = [&](CLI::App* sub, bool eta) {
    sub->add_option("--N", o.N, "number of sites")->check(CLI::Range(2, 1 << 20));
    sub->add_option("--k", o.k, "gain site (mirrored into 1..N/2 if larger)");
    sub->add_option("--t", o.t, "hopping amplitude");
    if (eta) {
      sub->add_option("--eta", o.eta, "gain/loss strength");
      sub->add_option("--eta-range", o.eta_range, "sweep MIN:MAX:STEPS");
    }
    sub->add_option("--out", o.out, "output path (default stdout)");
    sub->add_option("--format", o.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--tol-secular", o.tol_secular, "scaled secular residual target");
    sub->add_option("--tol-eigen", o.tol_eigen, "closed-form eigenvector acceptance");
    sub->add_option("--threads", o.threads, "worker threads (0 = all cores)");
  };

  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues along an eta sweep (CSV)");
  common(spectrum, true);
  auto* transport = app.add_subcommand("transport", "transport coefficients along an eta sweep (CSV)");
  common(transport, true);
  auto* classify = app.add_subcommand("classify", "opaque/transparent counts per k (CSV)");
  common(classify, false);
  classify->add_option("--k-range", o.k_range, "KMIN:KMAX (default 1:N/2)");
  auto* census = app.add_subcommand("census", "opaque/transparent pseudo-momenta per k (JSON)");
  common(census, false);
  census->add_option("--k-range", o.k_range, "KMIN:KMAX (default: --k only)");
  auto* ep = app.add_subcommand("ep", "exceptional points over an eta range (JSON)");
  common(ep, false);
  ep->add_option("--eta-range", o.eta_range, "MIN:MAX:GRID (default 0:5:2000)");
  auto* evolve = app.add_subcommand("evolve", "RK4 time evolution with flux output (CSV)");
  common(evolve, true);
  evolve->add_option("--init", o.init, "site:j | eigenstate:index | file:path");
  evolve->add_option("--t-final", o.t_final, "final time");
  evolve->add_option("--dt", o.dt, "time step (default 1e-3/max(1,eta))");
  evolve->add_option("--sample-every", o.sample_every, "write every n-th step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  const OutputMeta meta{invocation(argc, argv)};
  try {
    if (spectrum->parsed()) return cmd_spectrum(o, meta);
    if (transport->parsed()) return cmd_transport(o, meta);
    if (classify->parsed()) return cmd_classify(o, meta, false);
    if (census->parsed()) {
      if (o.k_range.empty()) o.k_range = std::to_string(o.k) + ":" + std::to_string(o.k);
      return cmd_classify(o, meta, true);
    }
    if (ep->parsed()) return cmd_ep(o, meta);
    if (evolve->parsed()) return cmd_evolve(o, meta);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}
