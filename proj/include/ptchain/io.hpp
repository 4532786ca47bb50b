#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ptchain/exceptional.hpp"
#include "ptchain/spectrum.hpp"
#include "ptchain/state_classify.hpp"
#include "ptchain/transport.hpp"

namespace ptchain {

std::string_view library_version();

/// Shortest decimal string that parses back to exactly x.
std::string format_double(double x);

/// Strict parse of a full string; throws UsageError on trailing garbage.
double parse_double(std::string_view s);

/// Written as '#'-prefixed lines at the top of CSV files and as the "meta"
/// object of JSON files.
struct OutputMeta {
  std::string invocation;
  std::string version = std::string(library_version());
};

void write_header(std::ostream& os, const OutputMeta& meta);

/// eta,index,re_E,im_E,re_theta,im_theta,tag,secular_residual
void write_spectrum_csv(std::ostream& os, const std::vector<Spectrum>& sweep, const OutputMeta& meta);

/// {"meta", "config", "rows": [{eta, index, re_E, im_E, re_theta, im_theta, tag, secular_residual, near_coalescence}]}
void write_spectrum_json(std::ostream& os, const std::vector<Spectrum>& sweep, const OutputMeta& meta);

struct SpectrumRow {
  double eta = 0.0;
  int index = 0;
  cplx energy;
  cplx theta;
  std::string tag;
  double secular_residual = 0.0;
};
std::vector<SpectrumRow> read_spectrum_csv(std::istream& is);

/// eta,index,xi,tag  (xi empty where undefined)
void write_transport_csv(std::ostream& os, const std::vector<TransportReport>& sweep, const OutputMeta& meta);

/// {"meta", "config", "rows": [{eta, index, xi, one_sided, tag}]}; xi is null where undefined.
void write_transport_json(std::ostream& os, const std::vector<TransportReport>& sweep, const OutputMeta& meta);

struct TransportRow {
  double eta = 0.0;
  int index = 0;
  std::optional<double> xi;
  std::string tag;
};
std::vector<TransportRow> read_transport_csv(std::istream& is);

/// k,n_opaque,n_transparent
void write_census_csv(std::ostream& os, const std::vector<SpecialStateCensus>& rows, const OutputMeta& meta);
void write_census_json(std::ostream& os, const std::vector<SpecialStateCensus>& rows, const OutputMeta& meta);

/// {"meta": {...}, "config": {...}, "points": [{eta_c, re_theta, im_theta, re_E, im_E, p, flags, ...}], "crossings": [...]}
void write_ep_json(std::ostream& os, const ChainConfig& family, const EPSearchResult& result,
                   const OutputMeta& meta);
void write_ep_csv(std::ostream& os, const EPSearchResult& result, const OutputMeta& meta);

/// Parses the "points" array written by write_ep_json.
std::vector<EPRecord> read_ep_json(std::istream& is);

/// time,site,re_c,im_c,rho,J  with J the flux J_n into site n from site n-1.
void write_trajectory_header(std::ostream& os, const OutputMeta& meta);
void write_trajectory_rows(std::ostream& os, const WaveState& state);

/// Initial amplitudes: one "re,im" (or "re im") pair per non-comment line.
ComplexVector read_state_file(const std::string& path);

}  // namespace ptchain
