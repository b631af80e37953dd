#include "localmax/checkpoint.hpp"

#include <fstream>
#include <sstream>

namespace localmax {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.storage()}};
}

Matrix matrix_from_json(const json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.size()) throw CheckpointError("matrix payload has wrong length");
  m.storage() = std::move(data);
  return m;
}

} // namespace

json network_to_json(const Network& net) {
  json layers = json::array();
  for (const auto& l : net.layers) {
    json jl{{"kind", to_string(l.spec.kind)}, {"in", l.spec.in_dim}, {"out", l.spec.out_dim}};
    if (l.spec.kind == LayerKind::leaky_relu) jl["slope"] = l.spec.slope;
    if (l.spec.kind == LayerKind::affine) {
      jl["weight"] = matrix_to_json(l.weight);
      jl["bias"] = l.bias;
    }
    if (l.spec.kind == LayerKind::batch_norm) {
      jl["gamma"] = l.gamma;
      jl["beta"] = l.beta;
      jl["running_mean"] = l.running_mean;
      jl["running_var"] = l.running_var;
    }
    layers.push_back(std::move(jl));
  }
  return json{{"seed", net.seed},
              {"batch_norm", {{"momentum", net.batch_norm.momentum}, {"eps", net.batch_norm.eps}}},
              {"layers", std::move(layers)}};
}

Network network_from_json(const json& j) {
  Network net;
  net.seed = j.at("seed").get<std::uint64_t>();
  net.batch_norm.momentum = j.at("batch_norm").at("momentum").get<double>();
  net.batch_norm.eps = j.at("batch_norm").at("eps").get<double>();
  std::vector<LayerSpec> specs;
  for (const auto& jl : j.at("layers")) {
    Layer l;
    l.spec.kind = layer_kind_from_string(jl.at("kind").get<std::string>());
    l.spec.in_dim = jl.at("in").get<std::size_t>();
    l.spec.out_dim = jl.at("out").get<std::size_t>();
    if (l.spec.kind == LayerKind::leaky_relu) l.spec.slope = jl.at("slope").get<double>();
    if (l.spec.kind == LayerKind::affine) {
      l.weight = matrix_from_json(jl.at("weight"));
      l.bias = jl.at("bias").get<std::vector<double>>();
      if (l.weight.rows() != l.spec.out_dim || l.weight.cols() != l.spec.in_dim ||
          l.bias.size() != l.spec.out_dim)
        throw CheckpointError("affine layer parameters do not match its dimensions");
    }
    if (l.spec.kind == LayerKind::batch_norm) {
      l.gamma = jl.at("gamma").get<std::vector<double>>();
      l.beta = jl.at("beta").get<std::vector<double>>();
      l.running_mean = jl.at("running_mean").get<std::vector<double>>();
      l.running_var = jl.at("running_var").get<std::vector<double>>();
      for (const auto* v : {&l.gamma, &l.beta, &l.running_mean, &l.running_var})
        if (v->size() != l.spec.out_dim)
          throw CheckpointError("batch-norm parameters do not match its dimensions");
    }
    specs.push_back(l.spec);
    net.layers.push_back(std::move(l));
  }
  try {
    validate_specs(specs);
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("invalid network in checkpoint: ") + e.what());
  }
  return net;
}

json adam_to_json(const AdamState& s) {
  return json{{"lr", s.hyper.lr},       {"beta1", s.hyper.beta1}, {"beta2", s.hyper.beta2},
              {"eps", s.hyper.eps},     {"step", s.step},         {"first", s.first},
              {"second", s.second}};
}

AdamState adam_from_json(const json& j) {
  AdamState s;
  s.hyper.lr = j.at("lr").get<double>();
  s.hyper.beta1 = j.at("beta1").get<double>();
  s.hyper.beta2 = j.at("beta2").get<double>();
  s.hyper.eps = j.at("eps").get<double>();
  s.step = j.at("step").get<std::uint64_t>();
  s.first = j.at("first").get<std::vector<std::vector<double>>>();
  s.second = j.at("second").get<std::vector<std::vector<double>>>();
  return s;
}

json model_options_to_json(const ModelOptions& o) {
  return json{{"hidden", o.hidden},
              {"batch_norm", o.batch_norm},
              {"leaky_slope", o.leaky_slope},
              {"generator_output",
               o.generator_output == GeneratorOutput::tanh ? "tanh" : "identity"}};
}

ModelOptions model_options_from_json(const json& j) {
  ModelOptions o;
  if (j.contains("hidden")) o.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  if (j.contains("batch_norm")) o.batch_norm = j.at("batch_norm").get<bool>();
  if (j.contains("leaky_slope")) o.leaky_slope = j.at("leaky_slope").get<double>();
  if (j.contains("generator_output")) {
    const auto s = j.at("generator_output").get<std::string>();
    if (s == "tanh")
      o.generator_output = GeneratorOutput::tanh;
    else if (s == "identity")
      o.generator_output = GeneratorOutput::identity;
    else
      throw ConfigError("generator_output must be 'tanh' or 'identity', got '" + s + "'");
  }
  return o;
}

json quad_model_to_json(const QuadModel& m) {
  json j{{"dim", m.dim},
         {"discriminator_options", model_options_to_json(m.discriminator_options)},
         {"generator_options", model_options_to_json(m.generator_options)},
         {"c", network_to_json(m.c)},
         {"h", network_to_json(m.h)},
         {"g_c", network_to_json(m.g_c)},
         {"g_h", network_to_json(m.g_h)}};
  if (m.standardization)
    j["standardization"] = {{"mean", m.standardization->mean}, {"std", m.standardization->std}};
  return j;
}

QuadModel quad_model_from_json(const json& j) {
  QuadModel m;
  m.dim = j.at("dim").get<std::size_t>();
  m.discriminator_options = model_options_from_json(j.at("discriminator_options"));
  m.generator_options = model_options_from_json(j.at("generator_options"));
  m.c = network_from_json(j.at("c"));
  m.h = network_from_json(j.at("h"));
  m.g_c = network_from_json(j.at("g_c"));
  m.g_h = network_from_json(j.at("g_h"));
  if (j.contains("standardization")) {
    Standardization s;
    s.mean = j.at("standardization").at("mean").get<std::vector<double>>();
    s.std = j.at("standardization").at("std").get<std::vector<double>>();
    m.standardization = std::move(s);
  }
  if (m.c.in_dim() != m.dim || m.h.in_dim() != 2 * m.dim || m.g_c.in_dim() != m.dim ||
      m.g_h.out_dim() != m.dim)
    throw CheckpointError("model checkpoint: networks do not share the recorded dimension");
  return m;
}

void write_checkpoint(const std::filesystem::path& path, const std::string& kind,
                      const json& header, const json& payload) {
  json doc{{"format", kCheckpointFormat},
           {"version", kCheckpointVersion},
           {"kind", kind},
           {"header", header},
           {"payload", payload}};
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
    out << doc.dump() << '\n';
    if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

CheckpointFile read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::exception& e) {
    throw CheckpointError("corrupt checkpoint " + path.string() + ": " + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kCheckpointFormat)
      throw CheckpointError("not a checkpoint file: " + path.string());
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw CheckpointError("checkpoint version " + std::to_string(version) +
                            " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
    return {doc.at("kind").get<std::string>(), doc.at("header"), doc.at("payload")};
  } catch (const json::exception& e) {
    throw CheckpointError("corrupt checkpoint " + path.string() + ": " + e.what());
  }
}

namespace {

template <class F>
auto decode(const std::filesystem::path& path, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw CheckpointError("corrupt checkpoint " + path.string() + ": " + e.what());
  }
}

} // namespace

void save_network(const std::filesystem::path& path, const Network& net, const std::string& role) {
  json header{{"role", role}, {"in_dim", net.in_dim()}, {"out_dim", net.out_dim()}};
  write_checkpoint(path, "network", header, network_to_json(net));
}

Network load_network(const std::filesystem::path& path) {
  auto file = read_checkpoint(path);
  if (file.kind != "network")
    throw CheckpointError(path.string() + " holds a '" + file.kind + "' checkpoint, not a network");
  return decode(path, [&] { return network_from_json(file.payload); });
}

void save_quad_model(const std::filesystem::path& path, const QuadModel& model) {
  json header{{"roles", {"classifier", "comparator", "generator", "generator"}},
              {"dim", model.dim}};
  write_checkpoint(path, "quad-model", header, quad_model_to_json(model));
}

QuadModel load_quad_model(const std::filesystem::path& path) {
  auto file = read_checkpoint(path);
  if (file.kind == "train-state")
    return decode(path, [&] { return quad_model_from_json(file.payload.at("model")); });
  if (file.kind != "quad-model")
    throw CheckpointError(path.string() + " holds a '" + file.kind + "' checkpoint, not a model");
  return decode(path, [&] { return quad_model_from_json(file.payload); });
}

} // namespace localmax
