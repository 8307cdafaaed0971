#include "spinpim/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

namespace spinpim {

namespace {

constexpr double kAlphaFull = 32767.0;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw SvmError(fmt::format("cannot open '{}'", path.string()));
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

double parse_double(const std::string& tok, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != tok.size() || !std::isfinite(v)) {
    throw SvmError(fmt::format("line {}: '{}' is not a number", line, tok));
  }
  return v;
}

}  // namespace

std::size_t SvmModel::n_support_vectors() const {
  std::size_t n = 0;
  for (const auto& c : classes) n += c.svs.size();
  return n;
}

void SvmModel::validate() const {
  if (degree != 2) throw SvmError(fmt::format("only degree-2 polynomial kernels are supported, got {}", degree));
  if (classes.size() < 2) throw SvmError("a one-vs-all model needs at least two classes");
  if (n_features == 0) throw SvmError("model has no features");
  if (!(gamma > 0.0)) throw SvmError("gamma must be positive");
  for (std::size_t c = 0; c < classes.size(); ++c) {
    for (const auto& sv : classes[c].svs) {
      if (sv.x.size() != n_features) {
        throw SvmError(fmt::format("class {} has a support vector with {} features, expected {}", c, sv.x.size(),
                                   n_features));
      }
    }
  }
}

std::vector<double> SvmModel::decision(std::span<const double> x) const {
  if (x.size() != n_features) throw SvmError(fmt::format("input has {} features, model {}", x.size(), n_features));
  std::vector<double> scores;
  for (const auto& c : classes) {
    double s = -c.rho;
    for (const auto& sv : c.svs) {
      double dot = 0.0;
      for (std::size_t f = 0; f < n_features; ++f) dot += x[f] * sv.x[f];
      const double k = gamma * dot + coef0;
      s += sv.alpha * k * k;
    }
    scores.push_back(s);
  }
  return scores;
}

std::size_t SvmModel::predict(std::span<const double> x) const {
  const auto s = decision(x);
  return static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
}

SvmModel parse_model(const std::string& text) {
  SvmModel m;
  std::size_t declared_classes = 0;
  bool have_features = false;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string& key = tok[0];
    const auto one_value = [&] {
      if (tok.size() != 2) throw SvmError(fmt::format("line {}: '{}' takes one value", line_no, key));
      return parse_double(tok[1], line_no);
    };
    if (key == "classes") {
      declared_classes = static_cast<std::size_t>(one_value());
    } else if (key == "features") {
      m.n_features = static_cast<std::size_t>(one_value());
      have_features = true;
    } else if (key == "degree") {
      m.degree = static_cast<int>(one_value());
      if (m.degree != 2) throw SvmError(fmt::format("line {}: degree {} is not supported", line_no, m.degree));
    } else if (key == "gamma") {
      m.gamma = one_value();
    } else if (key == "coef0") {
      m.coef0 = one_value();
    } else if (key == "rho") {
      m.classes.push_back({one_value(), {}});
    } else {
      if (m.classes.empty()) throw SvmError(fmt::format("line {}: support vector before any 'rho' line", line_no));
      if (!have_features) throw SvmError(fmt::format("line {}: 'features' must precede support vectors", line_no));
      const std::size_t first = key == "alpha" ? 1 : 0;
      if (tok.size() - first != m.n_features + 1) {
        throw SvmError(fmt::format("line {}: expected alpha and {} features, got {} values", line_no, m.n_features,
                                   tok.size() - first));
      }
      SupportVector sv;
      sv.alpha = parse_double(tok[first], line_no);
      for (std::size_t k = first + 1; k < tok.size(); ++k) sv.x.push_back(parse_double(tok[k], line_no));
      m.classes.back().svs.push_back(std::move(sv));
    }
  }
  if (declared_classes != m.classes.size()) {
    throw SvmError(fmt::format("'classes {}' but {} class blocks", declared_classes, m.classes.size()));
  }
  m.validate();
  return m;
}

SvmModel load_model(const std::filesystem::path& path) { return parse_model(read_file(path)); }

std::string format_model(const SvmModel& m) {
  std::string out = fmt::format("classes {}\nfeatures {}\ndegree {}\ngamma {:.17g}\ncoef0 {:.17g}\n", m.n_classes(),
                                m.n_features, m.degree, m.gamma, m.coef0);
  for (const auto& c : m.classes) {
    out += fmt::format("rho {:.17g}\n", c.rho);
    for (const auto& sv : c.svs) {
      out += fmt::format("{:.17g}", sv.alpha);
      for (double v : sv.x) out += fmt::format(" {:.17g}", v);
      out += '\n';
    }
  }
  return out;
}

void save_model(const SvmModel& model, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw SvmError(fmt::format("cannot open '{}' for writing", path.string()));
  f << format_model(model);
}

QuantizedModel quantize(const SvmModel& model, QuantizationReport* report) {
  model.validate();
  if (model.coef0 < 0.0) throw SvmError("negative coef0 cannot be represented in the unsigned kernel pipeline");

  QuantizedModel q;
  q.n_classes = model.n_classes();
  q.n_features = model.n_features;

  bool found = false;
  for (unsigned s = 0; s < 48; ++s) {
    const double c0 = std::round(model.coef0 / std::ldexp(model.gamma, int(s)));
    if (c0 >= 65536.0) continue;
    if ((q.max_dot() >> s) + static_cast<std::uint64_t>(c0) < 65536u) {
      q.shift = s;
      q.c0 = static_cast<std::uint32_t>(c0);
      found = true;
      break;
    }
  }
  if (!found) throw SvmError("kernel argument does not fit 16 bits for any shift");

  double max_alpha = 0.0;
  for (const auto& c : model.classes) {
    for (const auto& sv : c.svs) max_alpha = std::max(max_alpha, std::abs(sv.alpha));
  }
  const double alpha_scale = max_alpha > 0.0 ? kAlphaFull / max_alpha : 1.0;
  const double unit = std::ldexp(model.gamma, int(q.shift));
  const double scale = alpha_scale / (unit * unit);

  QuantizationReport rep;
  rep.scale = scale;
  for (std::size_t ci = 0; ci < model.classes.size(); ++ci) {
    const auto& c = model.classes[ci];
    const double rho = std::round(c.rho * scale);
    if (std::abs(rho) > 0x1p62) throw SvmError(fmt::format("rho of class {} overflows 64 bits", ci));
    q.rho.push_back(static_cast<std::int64_t>(rho));
    rep.max_rho_error = std::max(rep.max_rho_error, std::abs(rho / scale - c.rho));
    for (const auto& sv : c.svs) {
      QuantizedSv qs;
      qs.class_index = ci;
      qs.alpha = static_cast<std::int32_t>(std::round(sv.alpha * alpha_scale));
      rep.max_alpha_error = std::max(rep.max_alpha_error, std::abs(qs.alpha / alpha_scale - sv.alpha));
      for (double v : sv.x) {
        const double r = std::round(v);
        if (r < 0.0 || r > 255.0) throw SvmError(fmt::format("support vector element {} is not an 8-bit value", v));
        qs.x.push_back(static_cast<std::uint8_t>(r));
        rep.max_sv_error = std::max(rep.max_sv_error, std::abs(r - v));
      }
      q.svs.push_back(std::move(qs));
    }
  }
  if (report) *report = rep;
  return q;
}

std::size_t argmax(std::span<const std::int64_t> scores) {
  if (scores.empty()) throw SvmError("argmax of an empty score list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

Inference oracle_infer(const QuantizedModel& model, std::span<const std::uint8_t> x) {
  if (x.size() != model.n_features) {
    throw SvmError(fmt::format("input has {} features, model {}", x.size(), model.n_features));
  }
  Inference out;
  out.scores.assign(model.n_classes, 0);
  for (const auto& sv : model.svs) {
    std::uint64_t dot = 0;
    for (std::size_t f = 0; f < x.size(); ++f) dot += std::uint64_t(x[f]) * sv.x[f];
    const std::uint64_t t = (dot >> model.shift) + model.c0;
    const std::uint64_t k = t * t;
    const auto term = static_cast<std::int64_t>(std::uint64_t(std::abs(sv.alpha)) * k);
    out.scores[sv.class_index] += sv.alpha < 0 ? -term : term;
  }
  for (std::size_t c = 0; c < model.n_classes; ++c) out.scores[c] -= model.rho[c];
  out.label = argmax(out.scores);
  return out;
}

std::vector<Sample> load_dataset(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw SvmError(fmt::format("cannot open '{}'", path.string()));
  std::vector<Sample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<long> vals;
    std::istringstream ls(line);
    bool numeric = true;
    for (std::string tok; std::getline(ls, tok, ',');) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stol(tok, &used));
        if (used != tok.size() && tok.find_first_not_of(" \r\t", used) != std::string::npos) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (out.empty() && line_no == 1) continue;  // header
      throw SvmError(fmt::format("{}:{}: non-integer field", path.string(), line_no));
    }
    if (vals.size() < 2) throw SvmError(fmt::format("{}:{}: need a label and features", path.string(), line_no));
    Sample s;
    if (vals[0] < 0) throw SvmError(fmt::format("{}:{}: negative label", path.string(), line_no));
    s.label = static_cast<std::size_t>(vals[0]);
    for (std::size_t k = 1; k < vals.size(); ++k) {
      if (vals[k] < 0 || vals[k] > 255) {
        throw SvmError(fmt::format("{}:{}: feature {} is not 8-bit", path.string(), line_no, vals[k]));
      }
      s.x.push_back(static_cast<std::uint8_t>(vals[k]));
    }
    if (!out.empty() && s.x.size() != out.front().x.size()) {
      throw SvmError(fmt::format("{}:{}: inconsistent feature count", path.string(), line_no));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace spinpim
