#pragma once

// One-vs-all polynomial (degree 2) SVM models, fixed-point quantization and the
// bit-exact reference inference used to check generated programs.
//
// Fixed-point contract, per support vector i of class c and 8-bit input x:
//   dot_i  = sum_f x_f * sv_if                (exact, at most 32 bits)
//   t_i    = (dot_i >> shift) + c0            (fits 16 bits by construction)
//   k_i    = t_i * t_i                        (32 bits)
//   term_i = |alpha_i| * k_i                  (alpha: 16-bit signed, |alpha| <= 32767)
//   score_c = sum_i sign(alpha_i) * term_i - rho_c   (int64)
// gamma and coef0 are folded into `shift` and `c0`; every scale factor is a
// positive constant shared by all classes, so argmax is unchanged.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "spinpim/device.hpp"

namespace spinpim {

class SvmError : public Error {
 public:
  using Error::Error;
};

struct SupportVector {
  double alpha = 0.0;
  std::vector<double> x;
};

struct SvmClass {
  double rho = 0.0;
  std::vector<SupportVector> svs;
};

struct SvmModel {
  int degree = 2;
  double gamma = 1.0;
  double coef0 = 0.0;
  std::size_t n_features = 0;
  std::vector<SvmClass> classes;

  std::size_t n_classes() const noexcept { return classes.size(); }
  std::size_t n_support_vectors() const;
  /// Throws SvmError on inconsistent dimensions or an unsupported degree.
  void validate() const;
  /// Real-valued decision scores sum(alpha K(x, sv)) - rho.
  std::vector<double> decision(std::span<const double> x) const;
  std::size_t predict(std::span<const double> x) const;
};

SvmModel parse_model(const std::string& text);
SvmModel load_model(const std::filesystem::path& path);
std::string format_model(const SvmModel& model);
void save_model(const SvmModel& model, const std::filesystem::path& path);

struct QuantizedSv {
  std::size_t class_index = 0;
  std::int32_t alpha = 0;  // in [-32767, 32767]
  std::vector<std::uint8_t> x;
};

struct QuantizedModel {
  std::size_t n_classes = 0;
  std::size_t n_features = 0;
  unsigned shift = 0;
  std::uint32_t c0 = 0;
  std::vector<std::int64_t> rho;
  std::vector<QuantizedSv> svs;  // grouped by class, in model order

  std::uint64_t max_dot() const { return std::uint64_t(n_features) * 255u * 255u; }
};

struct QuantizationReport {
  double scale = 0.0;              // score_q ~= scale * score_real
  double max_alpha_error = 0.0;    // |alpha_q / alpha_scale - alpha|, worst case
  double max_sv_error = 0.0;       // rounding of support-vector elements to 8 bits
  double max_rho_error = 0.0;
};

/// Throws SvmError when coef0 < 0, an element leaves [0, 255] by more than
/// rounding, or the kernel argument cannot fit 16 bits.
QuantizedModel quantize(const SvmModel& model, QuantizationReport* report = nullptr);

struct Inference {
  std::vector<std::int64_t> scores;
  std::size_t label = 0;
};

/// Lowest index wins ties.
std::size_t argmax(std::span<const std::int64_t> scores);
Inference oracle_infer(const QuantizedModel& model, std::span<const std::uint8_t> x);

struct Sample {
  std::size_t label = 0;
  std::vector<std::uint8_t> x;
};

/// CSV rows `label,f1,...,fF` with 8-bit integer features; `#` lines and a
/// non-numeric header line are skipped.
std::vector<Sample> load_dataset(const std::filesystem::path& path);

}  // namespace spinpim
