#include "wgeo/io/checkpoint.hpp"

#include "wgeo/errors.hpp"
#include "wgeo/io/canonical_json.hpp"

namespace wgeo {

using nlohmann::json;

namespace {

const json& field(const json& j, const char* key) {
  if (!j.is_object()) throw FormatError(std::string("expected an object holding '") + key + "'");
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(std::string("missing field '") + key + "'");
  return *it;
}

std::vector<double> doubles(const json& j) {
  if (!j.is_array()) throw FormatError("expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(json_to_double(e));
  return out;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw FormatError("expected a non-empty array of rows");
  const std::size_t cols = j.front().size();
  Matrix m(j.size(), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    auto r = doubles(j[i]);
    if (r.size() != cols) throw FormatError("ragged matrix rows");
    std::copy(r.begin(), r.end(), m.row(i).begin());
  }
  return m;
}

json gaussian_to_json(const GaussianSpec& g) {
  return json{{"mean", g.mean}, {"cov", matrix_to_json(g.cov)}};
}

GaussianSpec gaussian_from_json(const json& j) {
  return GaussianSpec{doubles(field(j, "mean")), matrix_from_json(field(j, "cov"))};
}

std::uint64_t to_u64(const json& j) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    throw FormatError("expected a non-negative integer, got " + j.dump());
  if (j.is_number_integer() && j.get<std::int64_t>() < 0)
    throw FormatError("expected a non-negative integer, got " + j.dump());
  return j.get<std::uint64_t>();
}

}  // namespace

json measure_to_json(const MeasureSpec& spec) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GaussianSpec>) {
          json j = gaussian_to_json(s);
          j["kind"] = "gaussian";
          return j;
        } else if constexpr (std::is_same_v<T, MixtureSpec>) {
          json comps = json::array();
          for (const auto& c : s.components) comps.push_back(gaussian_to_json(c));
          return json{{"kind", "mixture"}, {"weights", s.weights}, {"components", comps}};
        } else if constexpr (std::is_same_v<T, EmpiricalSpec>) {
          return json{{"kind", "empirical"}, {"path", s.path}};
        } else {
          return json{{"kind", "image"}, {"path", s.path}};
        }
      },
      spec);
}

MeasureSpec measure_from_json(const json& j) {
  const auto& kind_j = field(j, "kind");
  if (!kind_j.is_string()) throw FormatError("measure kind must be a string");
  const auto kind = kind_j.get<std::string>();
  MeasureSpec spec;
  if (kind == "gaussian") {
    spec = gaussian_from_json(j);
  } else if (kind == "mixture") {
    MixtureSpec m;
    m.weights = doubles(field(j, "weights"));
    for (const auto& c : field(j, "components")) m.components.push_back(gaussian_from_json(c));
    spec = std::move(m);
  } else if (kind == "empirical") {
    spec = EmpiricalSpec{field(j, "path").get<std::string>()};
  } else if (kind == "image") {
    spec = ImagePaletteSpec{field(j, "path").get<std::string>()};
  } else {
    throw FormatError("unknown measure kind '" + kind + "'");
  }
  try {
    validate(spec);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid measure: ") + e.what());
  }
  return spec;
}

json params_to_json(const MlpParams& params) {
  json layers = json::array();
  for (const auto& s : params.shapes()) layers.push_back({s.in, s.out});
  auto flat = params.flat();
  return json{{"layers", layers}, {"values", std::vector<double>(flat.begin(), flat.end())}};
}

MlpParams params_from_json(const json& j) {
  std::vector<LayerShape> shapes;
  for (const auto& l : field(j, "layers")) {
    if (!l.is_array() || l.size() != 2) throw FormatError("layer shape must be [in, out]");
    shapes.push_back({to_u64(l[0]), to_u64(l[1])});
  }
  if (shapes.empty()) throw FormatError("network has no layers");
  MlpParams params;
  try {
    params = MlpParams(shapes);
  } catch (const ShapeError& e) {
    throw FormatError(std::string("bad layer chain: ") + e.what());
  }
  const auto values = doubles(field(j, "values"));
  if (values.size() != params.size())
    throw FormatError("network declares " + std::to_string(params.size()) + " parameters but stores " +
                      std::to_string(values.size()));
  std::copy(values.begin(), values.end(), params.flat().begin());
  return params;
}

json checkpoint_to_json(const Checkpoint& ckpt) {
  const GeoState& s = ckpt.state;
  json j;
  j["format"] = "wgeo-checkpoint";
  j["version"] = kCheckpointVersion;
  j["dim"] = s.dim;
  j["cost"] = {{"alpha", s.cost.alpha()}, {"beta", s.cost.beta()}};
  j["preconditioner"] = {{"sigma", s.precond.sigma()}, {"mu", s.precond.mu()}};
  j["networks"] = {{"f", params_to_json(s.f_net)},
                   {"g", params_to_json(s.g_net)},
                   {"phi_f", params_to_json(s.phi_f)},
                   {"phi_g", params_to_json(s.phi_g)}};
  j["metadata"] = {{"iterations", ckpt.meta.iterations},
                   {"final_w_ab", ckpt.meta.final_w_ab},
                   {"final_w_ba", ckpt.meta.final_w_ba},
                   {"seed", ckpt.meta.seed},
                   {"aborted", ckpt.meta.aborted}};
  if (ckpt.source) j["source"] = measure_to_json(*ckpt.source);
  if (ckpt.target) j["target"] = measure_to_json(*ckpt.target);
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  if (!j.is_object() || j.value("format", std::string()) != "wgeo-checkpoint")
    throw FormatError("not a wgeo checkpoint");
  const auto& version = field(j, "version");
  if (!version.is_number_integer() || version.get<int>() != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + version.dump());
  Checkpoint ckpt;
  GeoState& s = ckpt.state;
  s.dim = to_u64(field(j, "dim"));
  const auto& cost = field(j, "cost");
  try {
    s.cost = CostModel(json_to_double(field(cost, "alpha")), json_to_double(field(cost, "beta")));
    const auto& p = field(j, "preconditioner");
    s.precond = Preconditioner(json_to_double(field(p, "sigma")), doubles(field(p, "mu")));
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  const auto& nets = field(j, "networks");
  s.f_net = params_from_json(field(nets, "f"));
  s.g_net = params_from_json(field(nets, "g"));
  s.phi_f = params_from_json(field(nets, "phi_f"));
  s.phi_g = params_from_json(field(nets, "phi_g"));
  try {
    s.validate();
  } catch (const ShapeError& e) {
    throw FormatError(e.what());
  }
  const auto& meta = field(j, "metadata");
  ckpt.meta.iterations = to_u64(field(meta, "iterations"));
  ckpt.meta.final_w_ab = json_to_double(field(meta, "final_w_ab"));
  ckpt.meta.final_w_ba = json_to_double(field(meta, "final_w_ba"));
  ckpt.meta.seed = to_u64(field(meta, "seed"));
  ckpt.meta.aborted = field(meta, "aborted").get<bool>();
  if (j.contains("source")) ckpt.source = measure_from_json(j["source"]);
  if (j.contains("target")) ckpt.target = measure_from_json(j["target"]);
  return ckpt;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  return to_canonical_json(checkpoint_to_json(ckpt));
}

Checkpoint parse_checkpoint(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    return checkpoint_from_json(j);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path));
}

}  // namespace wgeo
