// Text form of DistributionSpec:
//   normal d=3 | normal mean=0,1 var=2 | normal mean=0,0 cov=1,0.5,0.5,1
//   laplace d=3 | cauchy d=2
//   skewnormal d=3 delta=0.9 [psi=...]
//   mixture beta=0.2 base=(normal d=2) contaminant=(cauchy d=2)
//   brownian points=20 mean=2 scale=2 | brownian grid=0.25,0.5,1 mean=0 scale=1

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>

#include "spatialqq/distributions.hpp"
#include "spatialqq/error.hpp"

namespace sqq {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::BadSpec, what); }

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

double parse_number(std::string_view s) {
  const std::string t = trim(s);
  double value = 0.0;
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, value);
  if (ec != std::errc() || ptr != end || t.empty()) bad("not a number: '" + t + "'");
  return value;
}

std::vector<double> parse_list(std::string_view s) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::size_t stop = comma == std::string_view::npos ? s.size() : comma;
    out.push_back(parse_number(s.substr(start, stop - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

Index parse_count(std::string_view s) {
  const double v = parse_number(s);
  if (v < 1 || v != static_cast<double>(static_cast<Index>(v))) bad("expected a positive integer");
  return static_cast<Index>(v);
}

struct Parsed {
  std::string family;
  std::map<std::string, std::string> keys;
};

Parsed tokenize(std::string_view text) {
  Parsed out;
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  skip_ws();
  while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) {
    out.family.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
    ++i;
  }
  if (out.family.empty()) bad("empty distribution text");
  while (true) {
    skip_ws();
    if (i >= text.size()) break;
    const std::size_t eq = text.find('=', i);
    if (eq == std::string_view::npos) bad("expected key=value near '" + std::string(text.substr(i)) + "'");
    std::string key = trim(text.substr(i, eq - i));
    i = eq + 1;
    skip_ws();
    std::string value;
    if (i < text.size() && text[i] == '(') {
      int depth = 0;
      const std::size_t open = i;
      for (; i < text.size(); ++i) {
        if (text[i] == '(') ++depth;
        if (text[i] == ')' && --depth == 0) break;
      }
      if (depth != 0) bad("unbalanced parentheses");
      value = std::string(text.substr(open + 1, i - open - 1));
      ++i;
    } else {
      while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) value.push_back(text[i++]);
    }
    if (key.empty() || value.empty()) bad("empty key or value");
    if (!out.keys.emplace(key, value).second) bad("duplicate key '" + key + "'");
  }
  return out;
}

class KeyReader {
 public:
  explicit KeyReader(Parsed p) : p_(std::move(p)) {}

  const std::string* get(const std::string& key) {
    auto it = p_.keys.find(key);
    if (it == p_.keys.end()) return nullptr;
    used_.push_back(key);
    return &it->second;
  }

  void finish() const {
    for (const auto& [k, v] : p_.keys) {
      if (std::find(used_.begin(), used_.end(), k) == used_.end())
        bad("unknown key '" + k + "' for family " + p_.family);
    }
  }

  const std::string& family() const { return p_.family; }

 private:
  Parsed p_;
  std::vector<std::string> used_;
};

Vector broadcast(const std::vector<double>& values, Index d, const char* what) {
  if (values.size() == 1) return Vector::Constant(d, values[0]);
  if (static_cast<Index>(values.size()) != d) bad(std::string(what) + " has wrong length");
  return Eigen::Map<const Vector>(values.data(), d);
}

Matrix square_from(const std::vector<double>& values, Index d, const char* what) {
  if (static_cast<Index>(values.size()) != d * d) bad(std::string(what) + " needs d*d entries");
  Matrix m(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) m(i, j) = values[static_cast<std::size_t>(i * d + j)];
  return m;
}

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fmt_list(const double* data, Index count) {
  std::string out;
  for (Index i = 0; i < count; ++i) {
    if (i) out += ',';
    out += fmt(data[i]);
  }
  return out;
}

bool all_equal(const Vector& v, double x) { return (v.array() == x).all(); }

}  // namespace

DistributionSpec DistributionSpec::parse(std::string_view text) {
  KeyReader r(tokenize(text));
  const std::string& fam = r.family();
  auto dim_key = [&]() -> std::optional<Index> {
    if (const auto* v = r.get("d")) return parse_count(*v);
    return std::nullopt;
  };

  if (fam == "normal") {
    const auto d_opt = dim_key();
    const auto* mean_s = r.get("mean");
    const auto* var_s = r.get("var");
    const auto* cov_s = r.get("cov");
    Index d = 0;
    if (d_opt) {
      d = *d_opt;
    } else if (mean_s) {
      d = static_cast<Index>(parse_list(*mean_s).size());
    } else if (cov_s) {
      const auto n = parse_list(*cov_s).size();
      d = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(n))));
    } else {
      bad("normal: need d, mean, or cov");
    }
    Vector mean = mean_s ? broadcast(parse_list(*mean_s), d, "mean") : Vector::Zero(d);
    if (var_s && cov_s) bad("normal: var and cov are exclusive");
    Matrix cov = Matrix::Identity(d, d);
    if (var_s) cov *= parse_number(*var_s);
    if (cov_s) cov = square_from(parse_list(*cov_s), d, "cov");
    r.finish();
    return normal(std::move(mean), std::move(cov));
  }
  if (fam == "laplace" || fam == "cauchy") {
    const auto d = dim_key();
    if (!d) bad(fam + ": need d");
    r.finish();
    return fam == "laplace" ? laplace(*d) : cauchy(*d);
  }
  if (fam == "skewnormal") {
    const auto d_opt = dim_key();
    const auto* delta_s = r.get("delta");
    const auto* psi_s = r.get("psi");
    if (!delta_s) bad("skewnormal: need delta");
    const auto delta_list = parse_list(*delta_s);
    const Index d = d_opt ? *d_opt : static_cast<Index>(delta_list.size());
    Vector delta = broadcast(delta_list, d, "delta");
    Matrix psi = psi_s ? square_from(parse_list(*psi_s), d, "psi") : Matrix::Identity(d, d);
    r.finish();
    return skew_normal(std::move(delta), std::move(psi));
  }
  if (fam == "mixture") {
    const auto* beta_s = r.get("beta");
    const auto* base_s = r.get("base");
    const auto* cont_s = r.get("contaminant");
    if (!beta_s || !base_s || !cont_s) bad("mixture: need beta, base, contaminant");
    r.finish();
    return mixture(parse_number(*beta_s), parse(*base_s), parse(*cont_s));
  }
  if (fam == "brownian") {
    const auto* points_s = r.get("points");
    const auto* grid_s = r.get("grid");
    const auto* mean_s = r.get("mean");
    const auto* scale_s = r.get("scale");
    const double mean = mean_s ? parse_number(*mean_s) : 0.0;
    const double scale = scale_s ? parse_number(*scale_s) : 1.0;
    r.finish();
    if (points_s && grid_s) bad("brownian: points and grid are exclusive");
    if (grid_s) return brownian(mean, scale, parse_list(*grid_s));
    if (!points_s) bad("brownian: need points or grid");
    return brownian_equispaced(parse_count(*points_s), mean, scale);
  }
  bad("unknown family '" + fam + "'");
}

std::string DistributionSpec::to_string() const {
  const std::string d = "d=" + std::to_string(dim_);
  if (const auto* f = std::get_if<NormalFamily>(&family_)) {
    std::string out = "normal " + d;
    if (!all_equal(f->mean, 0.0)) out += " mean=" + fmt_list(f->mean.data(), f->mean.size());
    const double v = f->covariance(0, 0);
    bool scalar = true;
    for (Index i = 0; i < dim_; ++i)
      for (Index j = 0; j < dim_; ++j) scalar = scalar && f->covariance(i, j) == (i == j ? v : 0.0);
    if (scalar) {
      if (v != 1.0) out += " var=" + fmt(v);
    } else {
      const Matrix row_major = f->covariance.transpose();
      out += " cov=" + fmt_list(row_major.data(), row_major.size());
    }
    return out;
  }
  if (std::holds_alternative<LaplaceFamily>(family_)) return "laplace " + d;
  if (std::holds_alternative<CauchyFamily>(family_)) return "cauchy " + d;
  if (const auto* f = std::get_if<SkewNormalFamily>(&family_)) {
    std::string out = "skewnormal " + d + " delta=";
    const double first = f->delta(0);
    out += all_equal(f->delta, first) ? fmt(first) : fmt_list(f->delta.data(), f->delta.size());
    if (f->psi != Matrix::Identity(dim_, dim_)) {
      const Matrix row_major = f->psi.transpose();
      out += " psi=" + fmt_list(row_major.data(), row_major.size());
    }
    return out;
  }
  if (const auto* f = std::get_if<MixtureFamily>(&family_)) {
    return "mixture beta=" + fmt(f->beta) + " base=(" + f->base->to_string() +
           ") contaminant=(" + f->contaminant->to_string() + ")";
  }
  const auto& f = std::get<BrownianFamily>(family_);
  bool equispaced = true;
  const auto p = f.grid.size();
  for (std::size_t k = 0; k < p; ++k)
    equispaced = equispaced && f.grid[k] == static_cast<double>(k + 1) / static_cast<double>(p);
  std::string out = "brownian ";
  out += equispaced ? "points=" + std::to_string(p)
                    : "grid=" + fmt_list(f.grid.data(), static_cast<Index>(p));
  out += " mean=" + fmt(f.mean_level) + " scale=" + fmt(f.scale);
  return out;
}

}  // namespace sqq
