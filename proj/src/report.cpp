#include <fmt/format.h>

#include "purank/error.hpp"
#include "purank/pipeline.hpp"

namespace purank {

std::string_view to_string(TrainMode m) {
  switch (m) {
    case TrainMode::pn: return "pn";
    case TrainMode::pu_nearest: return "pu_nearest";
    case TrainMode::pu_mean: return "pu_mean";
  }
  return "pn";
}

TrainMode train_mode_from_string(std::string_view name) {
  if (name == "pn") return TrainMode::pn;
  if (name == "pu_nearest") return TrainMode::pu_nearest;
  if (name == "pu_mean") return TrainMode::pu_mean;
  throw Error(ErrorKind::parse, fmt::format("unknown training mode '{}'", name));
}

void TrainConfig::validate() const {
  auto fail = [](std::string_view what) { return Error(ErrorKind::invalid_argument, std::string(what)); };
  if (epochs_pn < 0 || epochs_pu < 0) throw fail("epoch counts must be >= 0");
  if (repropagate_every < 1) throw fail("repropagate_every must be >= 1");
  if (batch_size < 1) throw fail("batch_size must be >= 1");
  if (trial_count < 1) throw fail("trial_count must be >= 1");
  if (recall_k < 1) throw fail("recall_k must be >= 1");
  if (!(objective.margin < 1.0)) throw fail("margin must be < 1");
  if (!(objective.kappa > 0.0)) throw fail("kappa must be > 0");
  if (!(optimizer.learning_rate > 0.0)) throw fail("learning_rate must be > 0");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0) ||
      !(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) {
    throw fail("adam betas must lie in [0, 1)");
  }
  if (!(optimizer.epsilon > 0.0)) throw fail("epsilon must be > 0");
  if (!(init_scale >= 0.0)) throw fail("init_scale must be >= 0");
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::parse, "train config must be a JSON object");
  TrainConfig c;
  auto apply = [&c](const std::string& key, const nlohmann::json& v) {
    if (key == "mode") c.mode = train_mode_from_string(v.get<std::string>());
    else if (key == "epochs_pn") c.epochs_pn = v.get<int>();
    else if (key == "epochs_pu") c.epochs_pu = v.get<int>();
    else if (key == "repropagate_every") c.repropagate_every = v.get<int>();
    else if (key == "batch_size") c.batch_size = v.get<int>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "margin") c.objective.margin = v.get<double>();
    else if (key == "kappa") c.objective.kappa = v.get<double>();
    else if (key == "learning_rate") c.optimizer.learning_rate = v.get<double>();
    else if (key == "beta1") c.optimizer.beta1 = v.get<double>();
    else if (key == "beta2") c.optimizer.beta2 = v.get<double>();
    else if (key == "epsilon") c.optimizer.epsilon = v.get<double>();
    else if (key == "trainable_encoder") c.trainable_encoder = v.get<bool>();
    else if (key == "trial_count") c.trial_count = v.get<int>();
    else if (key == "recall_k") c.recall_k = v.get<int>();
    else if (key == "init_scale") c.init_scale = v.get<double>();
    else if (key == "categories") c.objective.categories = v.get<int>();
    else throw Error(ErrorKind::parse, fmt::format("unknown train config key '{}'", key));
  };
  for (const auto& [key, value] : j.items()) {
    try {
      if ((key == "objective" || key == "optimizer") && value.is_object()) {
        for (const auto& [k2, v2] : value.items()) apply(k2, v2);
      } else {
        apply(key, value);
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, fmt::format("bad value for '{}': {}", key, e.what()));
    }
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"mode", std::string(to_string(c.mode))},
          {"epochs_pn", c.epochs_pn},
          {"epochs_pu", c.epochs_pu},
          {"repropagate_every", c.repropagate_every},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"objective",
           {{"margin", c.objective.margin},
            {"kappa", c.objective.kappa},
            {"categories", c.objective.categories}}},
          {"optimizer",
           {{"learning_rate", c.optimizer.learning_rate},
            {"beta1", c.optimizer.beta1},
            {"beta2", c.optimizer.beta2},
            {"epsilon", c.optimizer.epsilon}}},
          {"trainable_encoder", c.trainable_encoder},
          {"trial_count", c.trial_count},
          {"recall_k", c.recall_k},
          {"init_scale", c.init_scale}};
}

nlohmann::json to_json(const EpochLog& e) {
  nlohmann::json j = {{"epoch", e.epoch},
                      {"phase", e.phase},
                      {"phase_epoch", e.phase_epoch},
                      {"loss", e.loss},
                      {"repropagated", e.repropagated},
                      {"propagation_degenerate", e.propagation_degenerate}};
  j["valid"] = e.valid ? to_json(*e.valid) : nlohmann::json();
  return j;
}

namespace {

nlohmann::json to_json(const MetricSummary& s) {
  return {{"mean", s.mean}, {"stddev", s.stddev}, {"values", s.values}};
}

nlohmann::json to_json(const TrialSummary& s) {
  auto per = nlohmann::json::array();
  for (const auto& m : s.per_trial) per.push_back(to_json(m));
  return {{"config", to_json(s.config)},
          {"accuracy", to_json(s.accuracy)},
          {"recall_at_k", to_json(s.recall_at_k)},
          {"mrr", to_json(s.mrr)},
          {"per_trial", per}};
}

std::string pm(const MetricSummary& s, double scale, int digits) {
  return fmt::format("{:.{}f} (±{:.{}f})", scale * s.mean, digits, scale * s.stddev,
                     digits);
}

}  // namespace

nlohmann::json to_json(const TrialsReport& r) {
  nlohmann::json j;
  j["seeds"] = r.seeds;
  j["a"] = to_json(r.a);
  if (r.b) j["b"] = to_json(*r.b);
  auto paired = nlohmann::json::array();
  for (const auto& p : r.paired) {
    paired.push_back({{"metric", p.metric},
                      {"differences", p.differences},
                      {"mean_difference", p.mean_difference},
                      {"stddev_difference", p.stddev_difference},
                      {"t_statistic", p.t_statistic ? nlohmann::json(*p.t_statistic)
                                                    : nlohmann::json()},
                      {"wins", p.wins},
                      {"losses", p.losses},
                      {"ties", p.ties}});
  }
  j["paired"] = std::move(paired);
  auto comp = nlohmann::json::array();
  for (const auto& c : r.comparative_rank) {
    comp.push_back(c ? nlohmann::json(*c) : nlohmann::json());
  }
  j["comparative_rank_percentage"] = std::move(comp);
  return j;
}

std::string format_trials_table(const TrialsReport& r) {
  const int k = r.a.config.recall_k;
  std::string out = fmt::format("{:<14} | {:>18} | {:>18} | {:>20}\n", "Model",
                                "Acc. (%)", fmt::format("R@{} (%)", k), "MRR");
  out += std::string(80, '-') + '\n';
  auto row = [&](const TrialSummary& s) {
    out += fmt::format("{:<14} | {:>18} | {:>18} | {:>20}\n", to_string(s.config.mode),
                       pm(s.accuracy, 100.0, 2), pm(s.recall_at_k, 100.0, 2),
                       pm(s.mrr, 1.0, 4));
  };
  row(r.a);
  if (r.b) row(*r.b);
  out += fmt::format("({} trials)\n", r.seeds.size());
  for (const auto& p : r.paired) {
    out += fmt::format("paired {:<12} mean diff {:+.5f}  t {}  wins {} / losses {} / ties {}\n",
                       p.metric, p.mean_difference,
                       p.t_statistic ? fmt::format("{:.3f}", *p.t_statistic) : "n/a",
                       p.wins, p.losses, p.ties);
  }
  return out;
}

}  // namespace purank
