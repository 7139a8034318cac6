#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mtlsa {

/// How per-sample interpolation weights are formed.
struct WeightMode {
  enum class Kind { Full, OnlyConfidence, OnlyDensity, OnlyDistribution, Constant };

  Kind kind = Kind::Full;
  double constant = 0.0;  // used by Kind::Constant, must lie in [0,1]

  static WeightMode full() { return {Kind::Full, 0.0}; }
  static WeightMode fixed(double w) { return {Kind::Constant, w}; }

  bool operator==(const WeightMode&) const = default;
};

/// "full", "only-wc", "only-wd", "only-wg", "const:<w>".
std::string to_string(const WeightMode& mode);
/// Inverse of to_string; throws ConfigError on unknown names.
WeightMode parse_weight_mode(std::string_view text);

/// Per-sample component weights feeding combine().
struct WeightComponents {
  std::span<const double> w_c;
  std::span<const double> w_d;
  std::span<const double> w_s;
  std::span<const double> w_g;
};

/// Final interpolation coefficients.
///
/// Full mode normalizes w_s * w_g by its maximum; the only-X modes normalize
/// the chosen weight by its maximum; constant modes broadcast the constant.
/// An all-zero product yields all-zero weights. Spans not used by the mode may
/// be empty; used spans must share one length (ShapeError otherwise).
std::vector<double> combine(const WeightComponents& components, const WeightMode& mode);

/// Convenience overload for the full mode.
std::vector<double> combine(std::span<const double> w_s, std::span<const double> w_g);

struct SampleWeightRecord {
  std::size_t sample_index = 0;
  std::size_t pseudo_class = 0;
  double w_c = 0.0;
  double w_d = 0.0;
  double w_s = 0.0;
  double h_hat = 0.0;
  double w_g = 0.0;
  double w_combined = 0.0;

  bool operator==(const SampleWeightRecord&) const = default;
};

inline constexpr std::string_view kAuditHeader = "index,pseudo_class,w_c,w_d,w_s,h_hat,w_g,w_combined";

std::string write_weight_audit(std::span<const SampleWeightRecord> records);
/// Throws ParseError on malformed text.
std::vector<SampleWeightRecord> read_weight_audit(std::string_view text,
                                                  const std::string& source = "weights");

}  // namespace mtlsa
