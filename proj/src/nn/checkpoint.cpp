#include "fmsnet/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fmsnet::nn {

namespace {

constexpr char kMagic[8] = {'F', 'M', 'S', 'N', 'E', 'T', 'C', 'K'};

static_assert(std::endian::native == std::endian::little, "checkpoint payload assumes a little-endian host");

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint truncated");
  return value;
}

template <typename Scalar>
void write_values(std::ostream& out, const Vector<Scalar>& v) {
  const Eigen::VectorXd d = v.template cast<double>();
  out.write(reinterpret_cast<const char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(double)));
}

template <typename Scalar>
Vector<Scalar> read_values(std::istream& in, Index count) {
  Eigen::VectorXd d(count);
  in.read(reinterpret_cast<char*>(d.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw std::runtime_error("checkpoint payload truncated");
  return d.cast<Scalar>();
}

}  // namespace

void restore_rng(Rng& rng, const std::string& state) {
  std::istringstream in(state);
  in >> rng.engine();
  if (!in) throw std::runtime_error("malformed RNG state in checkpoint");
}

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, Network<Scalar>& network, const OptimizerState<Scalar>* optimizer,
                     const Rng* rng, const nlohmann::json& metadata) {
  auto params = network.parameters();
  auto states = network.state_tensors();
  nlohmann::json table = nlohmann::json::array();
  for (const auto& p : params) table.push_back({{"name", p.name}, {"shape", p.value->shape()}, {"role", "parameter"}});
  for (const auto& [name, t] : states) table.push_back({{"name", name}, {"shape", t->shape()}, {"role", "state"}});
  const bool has_moments = optimizer && !optimizer->first_moment.empty();
  if (has_moments) {
    for (const auto& p : params) table.push_back({{"name", p.name}, {"shape", p.value->shape()}, {"role", "adam_m"}});
    for (const auto& p : params) table.push_back({{"name", p.name}, {"shape", p.value->shape()}, {"role", "adam_v"}});
  }
  nlohmann::json specs = nlohmann::json::array();
  for (const auto& s : network.topology().layer_specs()) specs.push_back(to_json(s));

  nlohmann::json header{{"format_version", kCheckpointVersion},
                        {"payload_scalar", "float64"},
                        {"topology", to_json(network.topology())},
                        {"layer_specs", specs},
                        {"tensors", table},
                        {"metadata", metadata}};
  if (optimizer) {
    header["optimizer"] = {{"learning_rate", optimizer->learning_rate},
                           {"beta1", optimizer->beta1},
                           {"beta2", optimizer->beta2},
                           {"epsilon", optimizer->epsilon},
                           {"step", optimizer->step}};
  }
  if (rng) {
    std::ostringstream s;
    s << rng->engine();
    header["rng_state"] = s.str();
  }

  const std::string text = header.dump();
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out.write(kMagic, sizeof(kMagic));
    write_pod<std::uint32_t>(out, kCheckpointVersion);
    write_pod<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& p : params) write_values(out, p.value->values());
    for (const auto& s : states) write_values(out, s.second->values());
    if (has_moments) {
      for (const auto& m : optimizer->first_moment) write_values(out, m);
      for (const auto& v : optimizer->second_moment) write_values(out, v);
    }
    if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

template <typename Scalar>
LoadedCheckpoint<Scalar> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(path.string() + " is not a checkpoint (bad magic)");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = read_pod<std::uint64_t>(in);
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw std::runtime_error("checkpoint header truncated");
  const auto header = nlohmann::json::parse(text);

  LoadedCheckpoint<Scalar> out{Network<Scalar>(topology_from_json(header.at("topology"))), {}, {},
                               header.value("metadata", nlohmann::json::object())};
  auto params = out.network.parameters();
  auto states = out.network.state_tensors();
  std::vector<Vector<Scalar>> m, v;
  std::size_t pi = 0, si = 0;
  for (const auto& e : header.at("tensors")) {
    const Shape shape = e.at("shape").get<Shape>();
    const std::string role = e.at("role").get<std::string>();
    const std::string name = e.at("name").get<std::string>();
    Vector<Scalar> values = read_values<Scalar>(in, shape_size(shape));
    if (role == "parameter") {
      if (pi >= params.size() || params[pi].name != name || params[pi].value->shape() != shape) {
        throw std::runtime_error("checkpoint parameter '" + name + "' does not match the topology");
      }
      params[pi++].value->values() = std::move(values);
    } else if (role == "state") {
      if (si >= states.size() || states[si].first != name) {
        throw std::runtime_error("checkpoint state '" + name + "' does not match the topology");
      }
      states[si++].second->values() = std::move(values);
    } else if (role == "adam_m") {
      m.push_back(std::move(values));
    } else if (role == "adam_v") {
      v.push_back(std::move(values));
    } else {
      throw std::runtime_error("unknown tensor role '" + role + "'");
    }
  }
  if (pi != params.size()) throw std::runtime_error("checkpoint is missing parameters");
  if (header.contains("optimizer")) {
    const auto& o = header.at("optimizer");
    out.optimizer.learning_rate = o.at("learning_rate").get<double>();
    out.optimizer.beta1 = o.at("beta1").get<double>();
    out.optimizer.beta2 = o.at("beta2").get<double>();
    out.optimizer.epsilon = o.at("epsilon").get<double>();
    out.optimizer.step = o.at("step").get<std::int64_t>();
    out.optimizer.first_moment = std::move(m);
    out.optimizer.second_moment = std::move(v);
  }
  if (header.contains("rng_state")) out.rng_state = header.at("rng_state").get<std::string>();
  return out;
}

template void save_checkpoint<double>(const std::filesystem::path&, Network<double>&, const OptimizerState<double>*,
                                      const Rng*, const nlohmann::json&);
template void save_checkpoint<float>(const std::filesystem::path&, Network<float>&, const OptimizerState<float>*,
                                     const Rng*, const nlohmann::json&);
template LoadedCheckpoint<double> load_checkpoint<double>(const std::filesystem::path&);
template LoadedCheckpoint<float> load_checkpoint<float>(const std::filesystem::path&);

}  // namespace fmsnet::nn
