#include "mtlsa/weighting.hpp"

#include <algorithm>
#include <stdexcept>

#include "mtlsa/errors.hpp"
#include "mtlsa/textio.hpp"

namespace mtlsa {

std::string to_string(const WeightMode& mode) {
  switch (mode.kind) {
    case WeightMode::Kind::Full:
      return "full";
    case WeightMode::Kind::OnlyConfidence:
      return "only-wc";
    case WeightMode::Kind::OnlyDensity:
      return "only-wd";
    case WeightMode::Kind::OnlyDistribution:
      return "only-wg";
    case WeightMode::Kind::Constant:
      return "const:" + textio::format_double(mode.constant);
  }
  return "full";
}

WeightMode parse_weight_mode(std::string_view text) {
  if (text == "full") return WeightMode::full();
  if (text == "only-wc") return {WeightMode::Kind::OnlyConfidence, 0.0};
  if (text == "only-wd") return {WeightMode::Kind::OnlyDensity, 0.0};
  if (text == "only-wg") return {WeightMode::Kind::OnlyDistribution, 0.0};
  if (text.starts_with("const:")) {
    double w = 0.0;
    try {
      w = textio::parse_double(text.substr(6));
    } catch (const std::invalid_argument&) {
      throw ConfigError("bad constant weight in '" + std::string(text) + "'");
    }
    if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("constant weight must lie in [0,1]");
    return WeightMode::fixed(w);
  }
  throw ConfigError("unknown weight mode '" + std::string(text) +
                    "' (expected full, only-wc, only-wd, only-wg, const:<w>)");
}

namespace {

std::vector<double> normalize_by_max(std::vector<double> v) {
  const double peak = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
  if (!(peak > 0.0)) {
    std::fill(v.begin(), v.end(), 0.0);
    return v;
  }
  for (double& x : v) x /= peak;
  return v;
}

std::vector<double> copy_checked(std::span<const double> v, std::string_view name) {
  if (v.empty()) throw ShapeError("combine: missing " + std::string(name));
  return {v.begin(), v.end()};
}

}  // namespace

std::vector<double> combine(const WeightComponents& c, const WeightMode& mode) {
  // Every nonempty span must agree on the sample count.
  std::size_t n = 0;
  for (auto s : {c.w_c, c.w_d, c.w_s, c.w_g}) {
    if (s.empty()) continue;
    if (n != 0 && s.size() != n) throw ShapeError("combine: weight sequences differ in length");
    n = s.size();
  }
  switch (mode.kind) {
    case WeightMode::Kind::Full: {
      if (c.w_s.size() != c.w_g.size()) throw ShapeError("combine: w_s and w_g lengths differ");
      std::vector<double> prod(c.w_s.size());
      for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = c.w_s[i] * c.w_g[i];
      return normalize_by_max(std::move(prod));
    }
    case WeightMode::Kind::OnlyConfidence:
      return normalize_by_max(copy_checked(c.w_c, "w_c"));
    case WeightMode::Kind::OnlyDensity:
      return normalize_by_max(copy_checked(c.w_d, "w_d"));
    case WeightMode::Kind::OnlyDistribution:
      return normalize_by_max(copy_checked(c.w_g, "w_g"));
    case WeightMode::Kind::Constant:
      if (!(mode.constant >= 0.0 && mode.constant <= 1.0)) {
        throw DomainError("constant weight must lie in [0,1]");
      }
      return std::vector<double>(n, mode.constant);
  }
  return {};
}

std::vector<double> combine(std::span<const double> w_s, std::span<const double> w_g) {
  return combine(WeightComponents{{}, {}, w_s, w_g}, WeightMode::full());
}

std::string write_weight_audit(std::span<const SampleWeightRecord> records) {
  std::string out(kAuditHeader);
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.sample_index) + ',' + std::to_string(r.pseudo_class) + ',' +
           textio::format_double(r.w_c) + ',' + textio::format_double(r.w_d) + ',' +
           textio::format_double(r.w_s) + ',' + textio::format_double(r.h_hat) + ',' +
           textio::format_double(r.w_g) + ',' + textio::format_double(r.w_combined) + '\n';
  }
  return out;
}

std::vector<SampleWeightRecord> read_weight_audit(std::string_view text,
                                                  const std::string& source) {
  std::vector<SampleWeightRecord> out;
  const auto lines = textio::split(text, '\n');
  if (lines.empty() || textio::trim(lines[0]) != kAuditHeader) {
    throw ParseError(source, 1, "missing weight audit header");
  }
  for (std::size_t l = 1; l < lines.size(); ++l) {
    const auto line = textio::trim(lines[l]);
    if (line.empty()) continue;
    const auto f = textio::split(line, ',');
    if (f.size() != 8) throw ParseError(source, l + 1, "expected 8 fields");
    try {
      out.push_back({static_cast<std::size_t>(textio::parse_uint(f[0])),
                     static_cast<std::size_t>(textio::parse_uint(f[1])),
                     textio::parse_double(f[2]), textio::parse_double(f[3]),
                     textio::parse_double(f[4]), textio::parse_double(f[5]),
                     textio::parse_double(f[6]), textio::parse_double(f[7])});
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, l + 1, e.what());
    }
  }
  return out;
}

}  // namespace mtlsa
