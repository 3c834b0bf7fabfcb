#include "wgeo/io/run_config.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>

#include <json.hpp>

#include "wgeo/errors.hpp"

namespace wgeo {

using nlohmann::json;

namespace {

// ---- text -> (section.key -> value, line) ----

struct Entry {
  json value;
  std::size_t line = 0;
};

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

class ValueParser {
 public:
  ValueParser(std::string_view text, std::size_t line) : s_(text), line_(line) {}

  json parse_all() {
    json v = parse_value();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters after value");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_); }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  json parse_value() {
    skip_ws();
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    if (c == '[') return parse_array();
    if (c == '"') return parse_string();
    return parse_scalar();
  }

  json parse_array() {
    ++pos_;
    json arr = json::array();
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ']') {
      ++pos_;
      return arr;
    }
    for (;;) {
      arr.push_back(parse_value());
      skip_ws();
      if (pos_ >= s_.size()) fail("unterminated array");
      if (s_[pos_] == ',') {
        ++pos_;
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {  // trailing comma
          ++pos_;
          return arr;
        }
        continue;
      }
      if (s_[pos_] == ']') {
        ++pos_;
        return arr;
      }
      fail("expected ',' or ']' in array");
    }
  }

  json parse_string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
      out += s_[pos_++];
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  json parse_scalar() {
    std::size_t end = pos_;
    while (end < s_.size() && s_[end] != ',' && s_[end] != ']' &&
           !std::isspace(static_cast<unsigned char>(s_[end])))
      ++end;
    const std::string tok(s_.substr(pos_, end - pos_));
    pos_ = end;
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
    if (tok == "-inf") return -std::numeric_limits<double>::infinity();
    const bool integral = tok.find_first_of(".eE") == std::string::npos;
    if (integral) {
      std::int64_t i = 0;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), i);
      if (ec == std::errc() && p == tok.data() + tok.size()) return i;
    }
    double d = 0.0;
    const char* first = tok.data();
    if (!tok.empty() && tok[0] == '+') ++first;
    auto [p, ec] = std::from_chars(first, tok.data() + tok.size(), d);
    if (ec != std::errc() || p != tok.data() + tok.size() || tok.empty())
      fail("cannot parse value '" + tok + "'");
    return d;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_;
};

int bracket_balance(const std::string& s) {
  int depth = 0;
  bool in_string = false;
  for (char c : s) {
    if (c == '"') in_string = !in_string;
    if (in_string) continue;
    if (c == '[') ++depth;
    if (c == ']') --depth;
  }
  return depth;
}

std::map<std::string, Entry> tokenize(const std::string& text) {
  std::map<std::string, Entry> entries;
  std::set<std::string> sections_seen;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto next_line = [&](std::string& out) {
    if (pos >= text.size()) return false;
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    out = text.substr(pos, nl - pos);
    if (!out.empty() && out.back() == '\r') out.pop_back();
    pos = nl + 1;
    ++line_no;
    return true;
  };

  std::string raw;
  while (next_line(raw)) {
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[' && line.find('=') == std::string::npos) {
      if (line.back() != ']') throw ParseError("malformed section header", line_no);
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) throw ParseError("empty section name", line_no);
      if (!sections_seen.insert(section).second)
        throw ParseError("duplicate section [" + section + "]", line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ParseError("missing key", line_no);
    std::string value_text = line.substr(eq + 1);
    const std::size_t start_line = line_no;
    while (bracket_balance(value_text) > 0) {
      std::string more;
      if (!next_line(more)) throw ParseError("unterminated array", start_line);
      value_text += ' ' + trim(strip_comment(more));
    }
    const std::string full = section.empty() ? key : section + "." + key;
    if (entries.count(full)) throw ParseError("duplicate key '" + full + "'", start_line);
    entries[full] = Entry{ValueParser(value_text, start_line).parse_all(), start_line};
  }
  return entries;
}

// ---- (section.key -> value) -> RunConfig ----

class Reader {
 public:
  explicit Reader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

  const Entry* find(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }
  bool has_section(const std::string& section) const {
    for (const auto& [k, _] : entries_)
      if (k.rfind(section + ".", 0) == 0) return true;
    return false;
  }

  void number(const std::string& key, double& out) {
    if (auto* e = find(key)) {
      if (!e->value.is_number()) throw ParseError("'" + key + "' must be a number", e->line);
      out = e->value.get<double>();
    }
  }
  void count(const std::string& key, std::size_t& out) {
    if (auto* e = find(key)) {
      if (!e->value.is_number_integer() || e->value.get<std::int64_t>() < 0)
        throw ParseError("'" + key + "' must be a non-negative integer", e->line);
      out = static_cast<std::size_t>(e->value.get<std::int64_t>());
    }
  }
  void flag(const std::string& key, bool& out) {
    if (auto* e = find(key)) {
      if (!e->value.is_boolean()) throw ParseError("'" + key + "' must be true or false", e->line);
      out = e->value.get<bool>();
    }
  }

  std::vector<double> vector(const std::string& key) {
    const Entry& e = require(key);
    return to_vector(e.value, key, e.line);
  }
  Matrix matrix(const std::string& key) {
    const Entry& e = require(key);
    return to_matrix(e.value, key, e.line);
  }
  std::string string(const std::string& key) {
    const Entry& e = require(key);
    if (!e.value.is_string()) throw ParseError("'" + key + "' must be a string", e.line);
    return e.value.get<std::string>();
  }
  const Entry& require(const std::string& key) {
    if (auto* e = find(key)) return *e;
    throw ParseError("missing required key '" + key + "'");
  }

  static std::vector<double> to_vector(const json& v, const std::string& key, std::size_t line) {
    if (!v.is_array()) throw ParseError("'" + key + "' must be an array of numbers", line);
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ParseError("'" + key + "' must be an array of numbers", line);
      out.push_back(x.get<double>());
    }
    return out;
  }
  static Matrix to_matrix(const json& v, const std::string& key, std::size_t line) {
    if (!v.is_array() || v.empty()) throw ParseError("'" + key + "' must be a nested array", line);
    const auto first = to_vector(v[0], key, line);
    Matrix m(v.size(), first.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto r = to_vector(v[i], key, line);
      if (r.size() != first.size()) throw ParseError("'" + key + "' has ragged rows", line);
      std::copy(r.begin(), r.end(), m.row(i).begin());
    }
    return m;
  }

  void reject_unused() const {
    for (const auto& [k, e] : entries_)
      if (!used_.count(k)) throw ParseError("unknown key '" + k + "'", e.line);
  }

 private:
  std::map<std::string, Entry> entries_;
  std::set<std::string> used_;
};

MeasureSpec read_measure(Reader& r, const std::string& section,
                         const std::filesystem::path& base_dir) {
  if (!r.has_section(section)) throw ParseError("missing [" + section + "] section");
  const std::string kind = r.string(section + ".kind");
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    return path.lexically_normal().string();
  };
  MeasureSpec spec;
  if (kind == "gaussian") {
    spec = GaussianSpec{r.vector(section + ".mean"), r.matrix(section + ".cov")};
  } else if (kind == "mixture") {
    MixtureSpec m;
    m.weights = r.vector(section + ".weights");
    const Entry& means = r.require(section + ".means");
    const Entry& covs = r.require(section + ".covs");
    if (!means.value.is_array() || !covs.value.is_array() || means.value.size() != covs.value.size())
      throw ParseError("'" + section + ".means' and '" + section + ".covs' must list the same components",
                       means.line);
    for (std::size_t i = 0; i < means.value.size(); ++i)
      m.components.push_back(
          GaussianSpec{Reader::to_vector(means.value[i], section + ".means", means.line),
                       Reader::to_matrix(covs.value[i], section + ".covs", covs.line)});
    spec = std::move(m);
  } else if (kind == "empirical") {
    spec = EmpiricalSpec{resolve(r.string(section + ".path"))};
  } else if (kind == "image") {
    spec = ImagePaletteSpec{resolve(r.string(section + ".path"))};
  } else {
    throw ParseError("unknown measure kind '" + kind + "' in [" + section + "]");
  }
  try {
    validate(spec);
  } catch (const std::invalid_argument& e) {
    throw ParseError("[" + section + "]: " + e.what());
  }
  return spec;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  Reader r(tokenize(text));
  RunConfig cfg;
  TrainConfig& t = cfg.train;

  double alpha = 2.0, beta = 1.0;
  r.number("cost.alpha", alpha);
  r.number("cost.beta", beta);
  try {
    t.cost = CostModel(alpha, beta);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("[cost]: ") + e.what());
  }

  r.count("net.width", t.network.width);
  r.count("net.field_hidden", t.network.field_hidden);
  r.count("net.potential_hidden", t.network.potential_hidden);

  std::size_t dim = 0;
  r.count("train.dim", dim);
  r.number("train.lr", t.lr);
  r.count("train.batch", t.interior_batch);
  r.count("train.boundary_batch", t.boundary_batch);
  r.count("train.cycle_batch", t.cycle_batch);
  r.count("train.inner_phi_steps", t.inner_phi_steps);
  r.count("train.outer_iters", t.outer_iters);
  r.count("train.min_iters", t.min_iters);
  r.number("train.lambda", t.lambda);
  if (r.find("train.epsilon")) {
    double eps = 0.0;
    r.number("train.epsilon", eps);
    t.epsilon = eps;
  }
  r.number("train.relative_epsilon", t.relative_epsilon);
  std::size_t seed = 0;
  r.count("train.seed", seed);
  t.seed = seed;
  r.flag("train.precondition", t.precondition);
  r.count("train.precondition_samples", t.precondition_samples);
  r.flag("train.deterministic", t.deterministic);
  r.count("train.workers", t.workers);
  r.count("train.chunk_rows", t.chunk_rows);
  r.number("train.sample_noise_std", t.sample_noise_std);
  r.count("train.checkpoint_every", t.checkpoint_every);
  r.number("train.max_seconds", t.max_seconds);
  r.number("train.adam_beta1", t.adam.beta1);
  r.number("train.adam_beta2", t.adam.beta2);
  r.number("train.adam_epsilon", t.adam.epsilon);

  cfg.source = read_measure(r, "source", base_dir);
  cfg.target = read_measure(r, "target", base_dir);
  r.reject_unused();

  if (dim == 0) dim = spec_dim(cfg.source);
  if (dim == 0) dim = spec_dim(cfg.target);
  if (dim == 0) dim = MeasureSampler(cfg.source).dim();
  t.dim = dim;
  for (const MeasureSpec* s : {&cfg.source, &cfg.target}) {
    const std::size_t sd = spec_dim(*s);
    if (sd != 0 && sd != dim)
      throw ParseError("measure dimension " + std::to_string(sd) + " does not match train.dim " +
                       std::to_string(dim));
  }
  try {
    t.validate();
  } catch (const ArgumentError& e) {
    throw ParseError(e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file(path), path.parent_path());
}

}  // namespace wgeo
