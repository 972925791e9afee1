#include <fstream>

#include <fmt/format.h>

#include "purank/error.hpp"
#include "purank/pipeline.hpp"

// Checkpoint layout (JSON, version 1):
//   format, version, categories, dim, best_epoch,
//   weights / final_weights        flat row-major category x dim arrays
//   config                         TrainConfig
//   optimizer                      step, hyperparameters, moment vectors
//   embeddings / final_embeddings  present only for a trainable encoder
//   log                            one record per epoch

namespace purank {

namespace {

constexpr const char* kFormat = "purank-checkpoint";
constexpr int kVersion = 1;

nlohmann::json table_to_json(const EmbeddingTable& t) {
  std::vector<std::string> tokens;
  tokens.reserve(t.size());
  for (std::size_t r = 0; r < t.size(); ++r) tokens.push_back(t.token(static_cast<int>(r)));
  return {{"dim", t.dim()},
          {"oov_policy", std::string(to_string(t.oov_policy()))},
          {"tokens", tokens},
          {"values", std::vector<double>(t.data().begin(), t.data().end())}};
}

EmbeddingTable table_from_json(const nlohmann::json& j) {
  EmbeddingTable t(j.at("dim").get<std::size_t>(), true,
                   oov_policy_from_string(j.at("oov_policy").get<std::string>()));
  const auto tokens = j.at("tokens").get<std::vector<std::string>>();
  const auto values = j.at("values").get<std::vector<double>>();
  if (values.size() != tokens.size() * t.dim()) {
    throw Error(ErrorKind::parse, "checkpoint embedding table has the wrong size");
  }
  for (std::size_t r = 0; r < tokens.size(); ++r) {
    t.add(tokens[r], std::span<const double>(values).subspan(r * t.dim(), t.dim()));
  }
  return t;
}

ModelParams params_from_json(const nlohmann::json& flat, std::size_t categories,
                             std::size_t dim) {
  ModelParams p(categories, dim);
  p.weights = flat.get<std::vector<double>>();
  if (p.weights.size() != categories * dim) {
    throw Error(ErrorKind::parse, "checkpoint weight matrix has the wrong size");
  }
  return p;
}

RankingMetrics metrics_from_json(const nlohmann::json& j) {
  RankingMetrics m;
  m.accuracy = j.at("accuracy").get<double>();
  m.recall_at_k = j.at("recall_at_k").get<double>();
  m.k = j.at("k").get<int>();
  m.mrr = j.at("mrr").get<double>();
  m.n = j.at("n").get<std::size_t>();
  return m;
}

}  // namespace

nlohmann::json checkpoint_to_json(const TrainedModel& m) {
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["categories"] = m.params.categories;
  j["dim"] = m.params.dim;
  j["best_epoch"] = m.best_epoch;
  j["weights"] = m.params.weights;
  j["final_weights"] = m.final_params.weights;
  j["config"] = to_json(m.config);
  j["optimizer"] = {{"step", m.optimizer.step},
                    {"learning_rate", m.optimizer.config.learning_rate},
                    {"beta1", m.optimizer.config.beta1},
                    {"beta2", m.optimizer.config.beta2},
                    {"epsilon", m.optimizer.config.epsilon},
                    {"m_weights", m.optimizer.m_weights},
                    {"v_weights", m.optimizer.v_weights},
                    {"m_embeddings", m.optimizer.m_embeddings},
                    {"v_embeddings", m.optimizer.v_embeddings}};
  if (m.table) j["embeddings"] = table_to_json(*m.table);
  if (m.final_table) j["final_embeddings"] = table_to_json(*m.final_table);
  auto log = nlohmann::json::array();
  for (const auto& e : m.log) log.push_back(to_json(e));
  j["log"] = std::move(log);
  return j;
}

TrainedModel checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != kFormat) {
      throw Error(ErrorKind::parse, "not a purank checkpoint");
    }
    if (j.at("version").get<int>() != kVersion) {
      throw Error(ErrorKind::parse,
                  fmt::format("unsupported checkpoint version {}", j.at("version").dump()));
    }
    TrainedModel m;
    const auto categories = j.at("categories").get<std::size_t>();
    const auto dim = j.at("dim").get<std::size_t>();
    m.params = params_from_json(j.at("weights"), categories, dim);
    m.final_params = params_from_json(j.at("final_weights"), categories, dim);
    m.best_epoch = j.at("best_epoch").get<int>();

    // Stored configs always carry the data-derived category count.
    auto cfg = j.at("config");
    m.config = train_config_from_json(cfg);

    const auto& opt = j.at("optimizer");
    m.optimizer.step = opt.at("step").get<std::uint64_t>();
    m.optimizer.config.learning_rate = opt.at("learning_rate").get<double>();
    m.optimizer.config.beta1 = opt.at("beta1").get<double>();
    m.optimizer.config.beta2 = opt.at("beta2").get<double>();
    m.optimizer.config.epsilon = opt.at("epsilon").get<double>();
    m.optimizer.m_weights = opt.at("m_weights").get<std::vector<double>>();
    m.optimizer.v_weights = opt.at("v_weights").get<std::vector<double>>();
    m.optimizer.m_embeddings = opt.at("m_embeddings").get<std::vector<double>>();
    m.optimizer.v_embeddings = opt.at("v_embeddings").get<std::vector<double>>();

    if (j.contains("embeddings")) m.table = table_from_json(j["embeddings"]);
    if (j.contains("final_embeddings")) m.final_table = table_from_json(j["final_embeddings"]);
    for (const auto& e : j.at("log")) {
      EpochLog entry;
      entry.epoch = e.at("epoch").get<int>();
      entry.phase = e.at("phase").get<std::string>();
      entry.phase_epoch = e.at("phase_epoch").get<int>();
      entry.loss = e.at("loss").get<double>();
      entry.repropagated = e.at("repropagated").get<bool>();
      entry.propagation_degenerate = e.at("propagation_degenerate").get<bool>();
      if (!e.at("valid").is_null()) entry.valid = metrics_from_json(e["valid"]);
      m.log.push_back(std::move(entry));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, fmt::format("malformed checkpoint: {}", e.what()));
  }
}

void save_checkpoint(const TrainedModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, fmt::format("cannot write {}", path.string()));
  out << checkpoint_to_json(m).dump() << '\n';
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot open {}", path.string()));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::parse, fmt::format("{}: {}", path.string(), e.what()));
  }
  return checkpoint_from_json(j);
}

std::string training_log_jsonl(const TrainedModel& m) {
  std::string out;
  for (const auto& e : m.log) {
    out += to_json(e).dump();
    out += '\n';
  }
  return out;
}

}  // namespace purank
