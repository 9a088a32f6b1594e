#pragma once

// Sweep records and their one-line-per-row CSV encoding.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "rfnoise/core.hpp"

namespace rfnoise {

enum class Source { analytic, quadrature, mc, estimator };

inline std::string_view to_string(Source s) {
  switch (s) {
    case Source::analytic: return "analytic";
    case Source::quadrature: return "quadrature";
    case Source::mc: return "mc";
    case Source::estimator: return "estimator";
  }
  return "?";
}

inline Source parse_source(std::string_view s) {
  if (s == "analytic") return Source::analytic;
  if (s == "quadrature") return Source::quadrature;
  if (s == "mc") return Source::mc;
  if (s == "estimator") return Source::estimator;
  throw std::invalid_argument("unknown source '" + std::string(s) + "'");
}

struct SweepRecord {
  Source source = Source::analytic;
  double lambda0 = 0.0;
  double gamma = 0.0;
  double alpha = 1.0;
  double sigma0_sq = 0.0;
  double kappa = std::nan("");
  Count d = 0, n = 0, p = 0, trials = 0;
  std::uint64_t seed = 0;
  double bias_sq = 0.0, var_clean = 0.0, var_noise = 0.0, risk = 0.0;

  void set(const Decomposition& dec) {
    bias_sq = dec.bias_sq;
    var_clean = dec.var_clean;
    var_noise = dec.var_noise;
    risk = dec.risk;
  }
};

inline constexpr std::string_view kCsvHeader =
    "source,lambda0,gamma,alpha,sigma0_sq,kappa,d,n,p,trials,seed,bias_sq,var_clean,var_noise,risk";

namespace csv_detail {

inline void put_real(std::string& out, double v) {
  if (std::isnan(v)) {
    out += "nan";
    return;
  }
  if (std::isinf(v)) {
    out += v > 0 ? "inf" : "-inf";
    return;
  }
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), end);
}

template <typename Int>
void put_int(std::string& out, Int v) {
  std::array<char, 24> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), end);
}

inline double get_real(std::string_view s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument("bad real field '" + std::string(s) + "'");
  return v;
}

template <typename Int>
Int get_int(std::string_view s) {
  Int v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument("bad integer field '" + std::string(s) + "'");
  return v;
}

}  // namespace csv_detail

/// One CSV row without the trailing newline. Reals use the shortest decimal
/// form that round-trips.
inline std::string serialize(const SweepRecord& r) {
  using namespace csv_detail;
  std::string out;
  out.reserve(160);
  out += to_string(r.source);
  for (double v : {r.lambda0, r.gamma, r.alpha, r.sigma0_sq, r.kappa}) {
    out += ',';
    put_real(out, v);
  }
  for (Count v : {r.d, r.n, r.p, r.trials}) {
    out += ',';
    put_int(out, v);
  }
  out += ',';
  put_int(out, r.seed);
  for (double v : {r.bias_sq, r.var_clean, r.var_noise, r.risk}) {
    out += ',';
    put_real(out, v);
  }
  return out;
}

inline SweepRecord parse_record(std::string_view line) {
  using namespace csv_detail;
  std::vector<std::string_view> f;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      f.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  if (f.size() != 15) throw std::invalid_argument("expected 15 CSV fields, got " + std::to_string(f.size()));
  SweepRecord r;
  r.source = parse_source(f[0]);
  r.lambda0 = get_real(f[1]);
  r.gamma = get_real(f[2]);
  r.alpha = get_real(f[3]);
  r.sigma0_sq = get_real(f[4]);
  r.kappa = get_real(f[5]);
  r.d = get_int<Count>(f[6]);
  r.n = get_int<Count>(f[7]);
  r.p = get_int<Count>(f[8]);
  r.trials = get_int<Count>(f[9]);
  r.seed = get_int<std::uint64_t>(f[10]);
  r.bias_sq = get_real(f[11]);
  r.var_clean = get_real(f[12]);
  r.var_noise = get_real(f[13]);
  r.risk = get_real(f[14]);
  return r;
}

inline void write_csv(std::ostream& os, const std::vector<SweepRecord>& rows) {
  os << kCsvHeader << '\n';
  for (const auto& r : rows) os << serialize(r) << '\n';
}

inline std::vector<SweepRecord> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw std::invalid_argument("missing or wrong CSV header");
  std::vector<SweepRecord> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    rows.push_back(parse_record(line));
  }
  return rows;
}

/// Field-wise equality where two NaNs compare equal.
inline bool same_record(const SweepRecord& a, const SweepRecord& b) {
  auto eq = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
  return a.source == b.source && eq(a.lambda0, b.lambda0) && eq(a.gamma, b.gamma) && eq(a.alpha, b.alpha) &&
         eq(a.sigma0_sq, b.sigma0_sq) && eq(a.kappa, b.kappa) && a.d == b.d && a.n == b.n && a.p == b.p &&
         a.trials == b.trials && a.seed == b.seed && eq(a.bias_sq, b.bias_sq) && eq(a.var_clean, b.var_clean) &&
         eq(a.var_noise, b.var_noise) && eq(a.risk, b.risk);
}

}  // namespace rfnoise
