#include "ptchain/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "ptchain/errors.hpp"

namespace ptchain {

namespace {

using json = nlohmann::ordered_json;

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Data lines of a CSV stream: comments dropped, header checked and dropped.
std::vector<std::vector<std::string>> read_table(std::istream& is, std::string_view header) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool seen_header = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!seen_header) {
      if (line != header) throw UsageError("unexpected CSV header: " + line);
      seen_header = true;
      continue;
    }
    rows.push_back(split_csv(line));
  }
  if (!seen_header) throw UsageError("CSV header not found");
  return rows;
}

int parse_int(const std::string& s) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw UsageError("invalid integer: " + s);
  return v;
}

json meta_json(const OutputMeta& meta) {
  return json{{"invocation", meta.invocation}, {"version", meta.version}};
}

json config_json(const ChainConfig& cfg) {
  return json{{"N", cfg.N}, {"k", cfg.k}, {"t", cfg.t}, {"mirrored", cfg.mirrored}};
}

std::vector<std::string> ep_flags(const EPRecord& ep) {
  std::vector<std::string> f;
  if (ep.complex_sector) f.emplace_back("complex_sector");
  if (ep.unresolved) f.emplace_back("unresolved");
  if (ep.order_ambiguous) f.emplace_back("order_ambiguous");
  return f;
}

}  // namespace

std::string_view library_version() {
#ifdef PTCHAIN_VERSION
  return PTCHAIN_VERSION;
#else
  return "unknown";
#endif
}

std::string format_double(double x) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw NumericalError("format_double failed");
  return std::string(buf, p);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw UsageError("invalid number: " + std::string(s));
  return v;
}

void write_header(std::ostream& os, const OutputMeta& meta) {
  os << "# ptchain " << meta.version << '\n';
  os << "# " << meta.invocation << '\n';
}

void write_spectrum_csv(std::ostream& os, const std::vector<Spectrum>& sweep, const OutputMeta& meta) {
  write_header(os, meta);
  os << "eta,index,re_E,im_E,re_theta,im_theta,tag,secular_residual\n";
  for (const Spectrum& s : sweep)
    for (std::size_t i = 0; i < s.pairs.size(); ++i) {
      const EigenPair& p = s.pairs[i];
      os << format_double(s.config.eta) << ',' << i << ',' << format_double(p.energy.real()) << ','
         << format_double(p.energy.imag()) << ',' << format_double(p.theta.real()) << ','
         << format_double(p.theta.imag()) << ',' << to_string(p.tag) << ','
         << format_double(p.residuals.secular) << '\n';
    }
}

void write_spectrum_json(std::ostream& os, const std::vector<Spectrum>& sweep, const OutputMeta& meta) {
  json rows = json::array();
  for (const Spectrum& s : sweep)
    for (std::size_t i = 0; i < s.pairs.size(); ++i) {
      const EigenPair& p = s.pairs[i];
      rows.push_back({{"eta", s.config.eta},
                      {"index", i},
                      {"re_E", p.energy.real()},
                      {"im_E", p.energy.imag()},
                      {"re_theta", p.theta.real()},
                      {"im_theta", p.theta.imag()},
                      {"tag", to_string(p.tag)},
                      {"secular_residual", p.residuals.secular},
                      {"near_coalescence", p.near_coalescence}});
    }
  json out{{"meta", meta_json(meta)}};
  if (!sweep.empty()) out["config"] = config_json(sweep.front().config);
  out["rows"] = std::move(rows);
  os << out.dump(2) << '\n';
}

std::vector<SpectrumRow> read_spectrum_csv(std::istream& is) {
  std::vector<SpectrumRow> out;
  for (const auto& f : read_table(is, "eta,index,re_E,im_E,re_theta,im_theta,tag,secular_residual")) {
    if (f.size() != 8) throw UsageError("spectrum CSV row has wrong field count");
    out.push_back({parse_double(f[0]), parse_int(f[1]), {parse_double(f[2]), parse_double(f[3])},
                   {parse_double(f[4]), parse_double(f[5])}, f[6], parse_double(f[7])});
  }
  return out;
}

void write_transport_csv(std::ostream& os, const std::vector<TransportReport>& sweep, const OutputMeta& meta) {
  write_header(os, meta);
  os << "eta,index,xi,tag\n";
  for (const TransportReport& r : sweep)
    for (std::size_t i = 0; i < r.records.size(); ++i) {
      const TransportRecord& rec = r.records[i];
      os << format_double(r.config.eta) << ',' << i << ',';
      if (const auto xi = rec.xi.xi()) os << format_double(*xi);
      os << ',' << to_string(rec.tag) << '\n';
    }
}

void write_transport_json(std::ostream& os, const std::vector<TransportReport>& sweep, const OutputMeta& meta) {
  json rows = json::array();
  for (const TransportReport& r : sweep)
    for (std::size_t i = 0; i < r.records.size(); ++i) {
      const TransportRecord& rec = r.records[i];
      const auto xi = rec.xi.xi();
      rows.push_back({{"eta", r.config.eta},
                      {"index", i},
                      {"xi", xi ? json(*xi) : json(nullptr)},
                      {"one_sided", rec.xi.kind == TransportCoefficient::Kind::OneSided},
                      {"tag", to_string(rec.tag)}});
    }
  json out{{"meta", meta_json(meta)}};
  if (!sweep.empty()) out["config"] = config_json(sweep.front().config);
  out["rows"] = std::move(rows);
  os << out.dump(2) << '\n';
}

std::vector<TransportRow> read_transport_csv(std::istream& is) {
  std::vector<TransportRow> out;
  for (const auto& f : read_table(is, "eta,index,xi,tag")) {
    if (f.size() != 4) throw UsageError("transport CSV row has wrong field count");
    TransportRow r{parse_double(f[0]), parse_int(f[1]), std::nullopt, f[3]};
    if (!f[2].empty()) r.xi = parse_double(f[2]);
    out.push_back(r);
  }
  return out;
}

void write_census_csv(std::ostream& os, const std::vector<SpecialStateCensus>& rows, const OutputMeta& meta) {
  write_header(os, meta);
  os << "k,n_opaque,n_transparent\n";
  for (const auto& c : rows) os << c.k << ',' << c.n_opaque() << ',' << c.n_transparent() << '\n';
}

void write_census_json(std::ostream& os, const std::vector<SpecialStateCensus>& rows, const OutputMeta& meta) {
  json arr = json::array();
  const auto fractions = [](const std::vector<PiFraction>& v) {
    json a = json::array();
    for (const auto& f : v) a.push_back(json::array({f.num, f.den}));
    return a;
  };
  for (const auto& c : rows)
    arr.push_back({{"N", c.N},
                   {"k", c.k},
                   {"n_opaque", c.n_opaque()},
                   {"n_transparent", c.n_transparent()},
                   {"opaque_theta_over_pi", fractions(c.opaque)},
                   {"transparent_theta_over_pi", fractions(c.transparent)}});
  os << json{{"meta", meta_json(meta)}, {"census", arr}}.dump(2) << '\n';
}

void write_ep_json(std::ostream& os, const ChainConfig& family, const EPSearchResult& result,
                   const OutputMeta& meta) {
  json pts = json::array();
  for (const EPRecord& ep : result.points)
    pts.push_back({{"eta_c", ep.eta_c},
                   {"re_theta", ep.theta_c.real()},
                   {"im_theta", ep.theta_c.imag()},
                   {"re_E", ep.energy_c.real()},
                   {"im_E", ep.energy_c.imag()},
                   {"p", ep.order},
                   {"flags", ep_flags(ep)},
                   {"log_slope", ep.log_slope},
                   {"residual_F", ep.residuals.F},
                   {"residual_dF", ep.residuals.dF}});
  json cr = json::array();
  for (const CrossingRecord& c : result.crossings)
    cr.push_back({{"eta", c.eta},
                  {"re_theta", c.theta.real()},
                  {"im_theta", c.theta.imag()},
                  {"re_E", c.energy.real()},
                  {"im_E", c.energy.imag()}});
  json doc{{"meta", meta_json(meta)},
           {"config", config_json(family)},
           {"points", pts},
           {"crossings", cr}};
  os << doc.dump(2) << '\n';
}

void write_ep_csv(std::ostream& os, const EPSearchResult& result, const OutputMeta& meta) {
  write_header(os, meta);
  os << "eta_c,re_theta,im_theta,re_E,im_E,p,flags\n";
  for (const EPRecord& ep : result.points) {
    std::string flags;
    for (const auto& f : ep_flags(ep)) flags += (flags.empty() ? "" : ";") + f;
    os << format_double(ep.eta_c) << ',' << format_double(ep.theta_c.real()) << ','
       << format_double(ep.theta_c.imag()) << ',' << format_double(ep.energy_c.real()) << ','
       << format_double(ep.energy_c.imag()) << ',' << ep.order << ',' << flags << '\n';
  }
}

std::vector<EPRecord> read_ep_json(std::istream& is) {
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw UsageError(std::string("EP JSON: ") + e.what());
  }
  std::vector<EPRecord> out;
  for (const auto& p : doc.at("points")) {
    EPRecord ep;
    ep.eta_c = p.at("eta_c").get<double>();
    ep.theta_c = {p.at("re_theta").get<double>(), p.at("im_theta").get<double>()};
    ep.energy_c = {p.at("re_E").get<double>(), p.at("im_E").get<double>()};
    ep.order = p.at("p").get<int>();
    for (const auto& f : p.at("flags")) {
      const auto s = f.get<std::string>();
      if (s == "complex_sector") ep.complex_sector = true;
      if (s == "unresolved") ep.unresolved = true;
      if (s == "order_ambiguous") ep.order_ambiguous = true;
    }
    if (p.contains("log_slope")) ep.log_slope = p["log_slope"].get<double>();
    if (p.contains("residual_F")) ep.residuals.F = p["residual_F"].get<double>();
    if (p.contains("residual_dF")) ep.residuals.dF = p["residual_dF"].get<double>();
    out.push_back(ep);
  }
  return out;
}

void write_trajectory_header(std::ostream& os, const OutputMeta& meta) {
  write_header(os, meta);
  os << "time,site,re_c,im_c,rho,J\n";
}

void write_trajectory_rows(std::ostream& os, const WaveState& state) {
  const std::string tm = format_double(state.time);
  for (int n = 1; n <= state.c.size(); ++n) {
    const cplx c = state.c[n - 1];
    os << tm << ',' << n << ',' << format_double(c.real()) << ',' << format_double(c.imag()) << ','
       << format_double(std::norm(c)) << ',' << format_double(local_flux(state, n)) << '\n';
  }
}

ComplexVector read_state_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open state file: " + path);
  std::vector<cplx> vals;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    for (char& ch : line)
      if (ch == ',' || ch == '\t') ch = ' ';
    std::istringstream ss(line);
    std::string re, im;
    ss >> re >> im;
    if (re.empty()) continue;
    vals.emplace_back(parse_double(re), im.empty() ? 0.0 : parse_double(im));
  }
  ComplexVector v(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
  return v;
}

}  // namespace ptchain
