#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include "ptchain/errors.hpp"
#include "ptchain/io.hpp"

using namespace ptchain;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

const fs::path& scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("ptchain_io_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run_cli(const std::string& args, const fs::path& out = {}) {
  std::string cmd = std::string(PTCHAIN_CLI) + " " + args;
  if (!out.empty()) cmd += " > " + out.string();
  cmd += " 2> " + (scratch() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string strip_comments(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line))
    if (line.empty() || line[0] != '#') out += line + '\n';
  return out;
}

struct Trajectory {
  std::map<double, double> norm2;  // time -> sum rho
  double max_residual = -1.0;
  double norm_ratio = -1.0;
};

Trajectory read_trajectory(const fs::path& p) {
  std::ifstream in(p);
  Trajectory t;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.rfind("# max_continuity_residual=", 0) == 0) t.max_residual = parse_double(line.substr(26));
    if (line.rfind("# norm_ratio=", 0) == 0) t.norm_ratio = parse_double(line.substr(13));
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      CHECK(line == "time,site,re_c,im_c,rho,J");
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string x;
    while (std::getline(ss, x, ',')) f.push_back(x);
    REQUIRE(f.size() == 6);
    t.norm2[parse_double(f[0])] += parse_double(f[4]);
  }
  return t;
}

}  // namespace

TEST_CASE("shortest round-trip float formatting") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int i = 0; i < 20000; ++i) {
    const std::uint64_t b = bits(rng);
    double x;
    std::memcpy(&x, &b, sizeof x);
    if (!std::isfinite(x)) continue;
    const std::string s = format_double(x);
    CHECK(parse_double(s) == x);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5e-300) == "-2.5e-300");
  CHECK_THROWS_AS(parse_double("1.0x"), UsageError);
  CHECK_THROWS_AS(parse_double(""), UsageError);
}

TEST_CASE("spectrum CSV round trip") {
  std::vector<Spectrum> sweep;
  for (double eta : {0.0, 0.75, 2.0}) sweep.push_back(solve_spectrum({10, 2, 1.0, eta}));
  std::stringstream ss;
  write_spectrum_csv(ss, sweep, {"unit test"});
  const std::string text = ss.str();
  CHECK(text.rfind("# ptchain " + std::string(library_version()) + "\n# unit test\n", 0) == 0);
  const std::vector<SpectrumRow> rows = read_spectrum_csv(ss);
  REQUIRE(rows.size() == 30);
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t i = 0; i < 10; ++i) {
      const SpectrumRow& r = rows[s * 10 + i];
      const EigenPair& p = sweep[s].pairs[i];
      CHECK(r.eta == sweep[s].config.eta);
      CHECK(r.index == static_cast<int>(i));
      CHECK(r.energy == p.energy);
      CHECK(r.theta == p.theta);
      CHECK(r.tag == to_string(p.tag));
      CHECK(r.secular_residual == p.residuals.secular);
    }
  std::istringstream bad("eta,index\n1,2\n");
  CHECK_THROWS_AS(read_spectrum_csv(bad), UsageError);
}

TEST_CASE("transport CSV and JSON keep undefined values explicit") {
  const TransportReport rep = make_transport_report(solve_spectrum({23, 2, 1.0, 1.3}));
  std::stringstream ss;
  write_transport_csv(ss, {rep}, {"t"});
  const std::vector<TransportRow> rows = read_transport_csv(ss);
  REQUIRE(rows.size() == 23);
  int undefined = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].xi == rep.records[i].xi.xi());
    undefined += !rows[i].xi.has_value();
  }
  CHECK(undefined == 1);
  std::stringstream js;
  write_transport_json(js, {rep}, {"t"});
  const auto doc = nlohmann::json::parse(js.str());
  CHECK(doc.at("meta").at("version") == std::string(library_version()));
  int nulls = 0;
  for (const auto& r : doc.at("rows")) {
    if (r.at("xi").is_null()) {
      ++nulls;
      CHECK(r.at("tag") == "Opaque");
    }
  }
  CHECK(nulls == 1);
  CHECK(js.str().find("NaN") == std::string::npos);
}

TEST_CASE("spectrum JSON") {
  std::stringstream js;
  write_spectrum_json(js, {solve_spectrum({6, 1, 1.0, 0.5})}, {"t"});
  const auto doc = nlohmann::json::parse(js.str());
  CHECK(doc.at("config").at("N") == 6);
  CHECK(doc.at("rows").size() == 6);
}

TEST_CASE("census output") {
  std::stringstream csv, js;
  const std::vector<SpecialStateCensus> rows{make_census(23, 6), make_census(23, 8)};
  write_census_csv(csv, rows, {"t"});
  CHECK(strip_comments(csv.str()) == "k,n_opaque,n_transparent\n6,5,6\n8,7,0\n");
  write_census_json(js, rows, {"t"});
  const auto doc = nlohmann::json::parse(js.str());
  const auto& first = doc.at("census").at(0);
  CHECK(first.at("n_opaque") == 5);
  CHECK(first.at("transparent_theta_over_pi").at(0) == nlohmann::json::array({1, 12}));
  CHECK(first.at("opaque_theta_over_pi").size() == 5);
}

TEST_CASE("EP JSON round trip") {
  const ChainConfig family{10, 2, 1.0, 0.0};
  const EPSearchResult res = find_exceptional_points(family);
  std::stringstream ss;
  write_ep_json(ss, family, res, {"t"});
  const std::vector<EPRecord> back = read_ep_json(ss);
  REQUIRE(back.size() == res.points.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].eta_c == res.points[i].eta_c);
    CHECK(back[i].theta_c == res.points[i].theta_c);
    CHECK(back[i].energy_c == res.points[i].energy_c);
    CHECK(back[i].order == res.points[i].order);
    CHECK(back[i].complex_sector == res.points[i].complex_sector);
    CHECK(back[i].residuals.F == res.points[i].residuals.F);
  }
  std::istringstream broken("{not json");
  CHECK_THROWS_AS(read_ep_json(broken), UsageError);
  std::stringstream csv;
  write_ep_csv(csv, res, {"t"});
  CHECK(strip_comments(csv.str()).find("eta_c") == 0);
}

TEST_CASE("state files") {
  const fs::path p = scratch() / "state.txt";
  std::ofstream(p) << "# amplitudes\n1,0\n0.5 -0.5\n\n0,2\n";
  const ComplexVector v = read_state_file(p.string());
  REQUIRE(v.size() == 3);
  CHECK(v[1] == cplx(0.5, -0.5));
  CHECK(v[2] == cplx(0.0, 2.0));
  CHECK_THROWS_AS(read_state_file((scratch() / "missing.txt").string()), std::ios_base::failure);
}

TEST_CASE("cli: spectrum sweep") {
  const fs::path out = scratch() / "spectrum.csv";
  REQUIRE(run_cli("spectrum --N 10 --k 1 --eta-range 0:3:300 --out " + out.string()) == 0);
  std::ifstream in(out);
  const std::vector<SpectrumRow> rows = read_spectrum_csv(in);
  REQUIRE(rows.size() == 3000);
  std::vector<double> free;
  for (int r = 10; r >= 1; --r) free.push_back(2.0 * std::cos(r * pi / 11.0));
  for (int i = 0; i < 10; ++i) {
    CHECK(rows[i].eta == 0.0);
    CHECK(std::abs(rows[i].energy.real() - free[i]) <= 1e-12);
  }
  int wide = 0;
  for (const SpectrumRow& r : rows)
    if (r.eta == 3.0 && std::abs(r.energy.imag()) > 1.0) ++wide;
  CHECK(wide == 2);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const SpectrumRow &a = rows[i - 1], &b = rows[i];
    if (a.eta != b.eta) {
      CHECK(a.eta < b.eta);
      continue;
    }
    CHECK((a.energy.real() < b.energy.real() ||
           (a.energy.real() == b.energy.real() && a.energy.imag() <= b.energy.imag())));
  }
  // Values survive the text round trip bit for bit.
  const Spectrum direct = solve_spectrum({10, 1, 1.0, rows[1500].eta});
  CHECK(rows[1500].energy == direct.pairs[static_cast<std::size_t>(rows[1500].index)].energy);
}

TEST_CASE("cli: identical command lines give identical bytes") {
  const fs::path a = scratch() / "det_a.csv", b = scratch() / "det_b.csv";
  const std::string args = "spectrum --N 14 --k 3 --eta-range 0:2.5:60";
  REQUIRE(run_cli(args, a) == 0);
  REQUIRE(run_cli(args, b) == 0);
  CHECK(slurp(a) == slurp(b));
  REQUIRE(run_cli(args + " --threads 1", a) == 0);
  REQUIRE(run_cli(args + " --threads 3", b) == 0);
  CHECK(strip_comments(slurp(a)) == strip_comments(slurp(b)));
  const std::string text = slurp(a);
  CHECK(text.rfind("# ptchain " + std::string(library_version()) + "\n", 0) == 0);
  CHECK(text.find(args + " --threads 1") != std::string::npos);
  const fs::path e1 = scratch() / "ep1.json", e2 = scratch() / "ep2.json";
  REQUIRE(run_cli("ep --N 10 --k 2", e1) == 0);
  REQUIRE(run_cli("ep --N 10 --k 2", e2) == 0);
  CHECK(slurp(e1) == slurp(e2));
}

TEST_CASE("cli: transport") {
  {
    const fs::path out = scratch() / "xi23.csv";
    REQUIRE(run_cli("transport --N 23 --k 8 --eta 2", out) == 0);
    std::ifstream in(out);
    int checked = 0;
    for (const TransportRow& r : read_transport_csv(in)) {
      if (r.tag == "Opaque") {
        CHECK_FALSE(r.xi.has_value());
        continue;
      }
      REQUIRE(r.xi.has_value());
      CHECK(std::abs(*r.xi - 1.0) > 1e-6);
      ++checked;
    }
    CHECK(checked == 16);
  }
  for (int k = 1; k <= 5; ++k) {
    const fs::path out = scratch() / "xi10.csv";
    REQUIRE(run_cli("transport --N 10 --k " + std::to_string(k) + " --eta 0.2", out) == 0);
    std::ifstream in(out);
    for (const TransportRow& r : read_transport_csv(in)) CHECK(std::abs(r.xi.value() - 1.0) <= 1e-9);
  }
  {
    const fs::path xs = scratch() / "xi_pairs.csv", es = scratch() / "e_pairs.csv";
    const std::string args = " --N 16 --k 3 --eta-range 1.5:5:8";
    REQUIRE(run_cli("transport" + args, xs) == 0);
    REQUIRE(run_cli("spectrum" + args, es) == 0);
    std::ifstream xin(xs), ein(es);
    const auto xi = read_transport_csv(xin);
    const auto en = read_spectrum_csv(ein);
    REQUIRE(xi.size() == en.size());
    int pairs = 0;
    for (std::size_t i = 0; i < en.size(); ++i) {
      if (en[i].energy.imag() <= 1e-9) continue;
      for (std::size_t j = 0; j < en.size(); ++j)
        if (en[j].eta == en[i].eta && std::abs(en[j].energy - std::conj(en[i].energy)) <= 1e-9) {
          CHECK(std::abs(*xi[i].xi * *xi[j].xi - 1.0) <= 1e-8);
          ++pairs;
        }
    }
    CHECK(pairs > 0);
  }
}

TEST_CASE("cli: classify and census") {
  const fs::path out = scratch() / "classify.csv";
  REQUIRE(run_cli("classify --N 23", out) == 0);
  const std::string body = strip_comments(slurp(out));
  CHECK(body.rfind("k,n_opaque,n_transparent\n", 0) == 0);
  CHECK(body.find("\n8,7,0\n") != std::string::npos);
  CHECK(body.find("\n6,5,6\n") != std::string::npos);
  std::istringstream lines(body);
  std::string line;
  int n = -1;
  while (std::getline(lines, line)) ++n;
  CHECK(n == 11);
  REQUIRE(run_cli("classify --N 839 --k-range 280:280", out) == 0);
  CHECK(strip_comments(slurp(out)) == "k,n_opaque,n_transparent\n280,279,0\n");
  REQUIRE(run_cli("classify --N 838", out) == 0);
  std::istringstream all(strip_comments(slurp(out)));
  std::getline(all, line);
  int rows = 0;
  while (std::getline(all, line)) {
    ++rows;
    CHECK(line.substr(line.find(',')) == ",0,0");
  }
  CHECK(rows == 419);
  const fs::path js = scratch() / "census.json";
  REQUIRE(run_cli("census --N 23 --k 6", js) == 0);
  const auto doc = nlohmann::json::parse(slurp(js));
  CHECK(doc.at("census").size() == 1);
  CHECK(doc.at("census").at(0).at("n_transparent") == 6);
}

TEST_CASE("cli: exceptional points") {
  const fs::path out = scratch() / "ep.json";
  REQUIRE(run_cli("ep --N 10 --k 1", out) == 0);
  {
    std::ifstream in(out);
    const auto pts = read_ep_json(in);
    REQUIRE(pts.size() == 1);
    CHECK(std::abs(pts[0].eta_c - 1.0) <= 1e-6);
  }
  REQUIRE(run_cli("ep --N 10 --k 5", out) == 0);
  {
    std::ifstream in(out);
    const auto pts = read_ep_json(in);
    REQUIRE(pts.size() == 5);
    for (const auto& p : pts) CHECK(std::abs(p.eta_c - 1.0) <= 1e-6);
  }
  REQUIRE(run_cli("ep --N 4 --k 1 --eta-range 0:5:500", out) == 0);
  {
    const auto doc = nlohmann::json::parse(slurp(out));
    REQUIRE(doc.at("points").size() >= 1);
    for (const auto& p : doc.at("points")) {
      CHECK(p.at("residual_F").get<double>() <= 1e-9);
      CHECK(p.at("residual_dF").get<double>() <= 1e-9);
      CHECK(p.at("p") == 2);
      CHECK(p.at("flags").is_array());
    }
  }
  CHECK(run_cli("ep --N 10 --k 1 --eta-range 0:5:50", out) == 1);
}

TEST_CASE("cli: evolve") {
  const fs::path out = scratch() / "evolve.csv";
  REQUIRE(run_cli("evolve --N 10 --k 1 --eta 0 --init site:1 --t-final 10 --dt 0.001 --sample-every 100", out) == 0);
  Trajectory tr = read_trajectory(out);
  CHECK(tr.norm2.size() == 101);
  CHECK(tr.norm2.rbegin()->first == 10.0);
  for (const auto& [t, n2] : tr.norm2) CHECK(std::abs(std::sqrt(n2) - 1.0) <= 1e-8);
  CHECK(tr.max_residual >= 0.0);
  CHECK(tr.max_residual <= 1e-10);

  // Eigenstate 4 of the N=10, k=1, eta=1.5 chain belongs to the imaginary pair.
  const Spectrum s = solve_spectrum({10, 1, 1.0, 1.5});
  const double im = s.pairs[4].energy.imag();
  REQUIRE(std::abs(im) > 0.1);
  REQUIRE(run_cli("evolve --N 10 --k 1 --eta 1.5 --init eigenstate:4 --t-final 5 --sample-every 1000", out) == 0);
  tr = read_trajectory(out);
  CHECK(std::abs(tr.norm_ratio / std::exp(2.0 * im * 5.0) - 1.0) <= 1e-5);
  CHECK(tr.max_residual <= 1e-10);

  const fs::path init = scratch() / "init.txt";
  {
    std::ofstream f(init);
    f.precision(17);
    for (int j = 0; j < 6; ++j) f << std::cos(j) << ',' << std::sin(j) << '\n';
  }
  REQUIRE(run_cli("evolve --N 6 --k 2 --eta 0.7 --t-final 3 --init file:" + init.string(), out) == 0);
  tr = read_trajectory(out);
  CHECK(tr.max_residual <= 1e-10);
  CHECK(std::abs(tr.norm2.begin()->second - 6.0) <= 1e-12);
}

TEST_CASE("cli: evolved norm ratio equals e^{-2 Im E t}" * doctest::should_fail(true)) {
  // The exact flow c(t) = e^{-i E t} c(0) gives |c|^2 ratio e^{+2 Im E t}.
  const fs::path out = scratch() / "evolve_sign.csv";
  const Spectrum s = solve_spectrum({10, 1, 1.0, 1.5});
  REQUIRE(run_cli("evolve --N 10 --k 1 --eta 1.5 --init eigenstate:4 --t-final 5 --sample-every 1000", out) == 0);
  CHECK(std::abs(read_trajectory(out).norm_ratio / std::exp(-2.0 * s.pairs[4].energy.imag() * 5.0) - 1.0) <= 1e-5);
}

TEST_CASE("cli: configuration files mirror the flags") {
  const fs::path cfg = scratch() / "run.toml";
  std::ofstream(cfg) << "[spectrum]\nN=6\neta=0.5\n";
  const fs::path a = scratch() / "cfg_a.csv", b = scratch() / "cfg_b.csv";
  REQUIRE(run_cli("spectrum --config " + cfg.string(), a) == 0);
  REQUIRE(run_cli("spectrum --N 6 --eta 0.5", b) == 0);
  CHECK(strip_comments(slurp(a)) == strip_comments(slurp(b)));
  REQUIRE(run_cli("spectrum --config " + cfg.string() + " --eta 0.7", a) == 0);
  std::ifstream in(a);
  const auto rows = read_spectrum_csv(in);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].eta == 0.7);
}

TEST_CASE("cli: exit codes") {
  const fs::path out = scratch() / "junk.txt";
  CHECK(run_cli("", out) == 1);
  CHECK(run_cli("nonsense", out) == 1);
  CHECK(run_cli("spectrum --N 1", out) == 1);
  CHECK(run_cli("spectrum --N 10 --k 6", out) == 0);  // mirrored into k = 5
  CHECK(run_cli("spectrum --N 10 --k 11", out) == 1);
  CHECK(run_cli("spectrum --eta -1", out) == 1);
  CHECK(run_cli("spectrum --eta-range 0:1", out) == 1);
  CHECK(run_cli("spectrum --format xml", out) == 1);
  CHECK(run_cli("evolve --format json", out) == 1);
  CHECK(run_cli("evolve --init site:99", out) == 1);
  CHECK(run_cli("spectrum --out /nonexistent/dir/out.csv") == 2);
  CHECK(run_cli("evolve --N 4 --init file:/nonexistent/state.txt", out) == 2);
  CHECK(run_cli("evolve --N 10 --eta 1 --dt 5", out) == 3);
  CHECK(run_cli("--version", out) == 0);
  CHECK(slurp(out) == std::string(library_version()) + "\n");
  CHECK(run_cli("--help", out) == 0);
}
