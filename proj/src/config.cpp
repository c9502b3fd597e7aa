#include "klab/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "klab/checkpoint.hpp"

namespace klab {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const char* section,
                         std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) { known = true; break; }
    if (!known)
      throw ConfigError("config: unknown key \"" + item.key() + "\" in " +
                        std::string(section));
  }
}

Vector json_to_vector(const json& arr) {
  Vector v(arr.size());
  Eigen::Index i = 0;
  for (const auto& x : arr) v(i++) = x.get<double>();
  return v;
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

json matrix_to_json(const Matrix& m) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    arr.push_back(vector_to_json(m.row(i).transpose()));
  return arr;
}

}  // namespace

RunConfig parse_config_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: JSON parse error: ") + e.what());
  }
  reject_unknown_keys(root, "top level",
                      {"seed", "strategy", "data", "augmentation", "model",
                       "temperatures", "schedule", "collapse"});

  RunConfig cfg;
  cfg.seed = root.value("seed", std::uint64_t{0});
  cfg.strategy = parse_strategy(root.value("strategy", std::string("inverse_prior")));

  double min_angle_deg = 30.0;
  {
    const json data = root.value("data", json::object());
    reject_unknown_keys(data, "data",
                        {"k_true", "input_dim", "sigma", "n_train", "min_angle_deg",
                         "weights", "means"});
    cfg.mixture.k_true = data.value("k_true", 4);
    cfg.mixture.input_dim = data.value("input_dim", 8);
    cfg.mixture.sigma = data.value("sigma", 0.25);
    cfg.n_train = data.value("n_train", 2048);
    min_angle_deg = data.value("min_angle_deg", 30.0);
    if (data.contains("weights"))
      cfg.mixture.weights = json_to_vector(data["weights"]);
    else
      cfg.mixture.weights =
          Vector::Constant(cfg.mixture.k_true, 1.0 / cfg.mixture.k_true);
    if (data.contains("means")) {
      const json& rows = data["means"];
      cfg.mixture.means.resize(static_cast<Eigen::Index>(rows.size()),
                               cfg.mixture.input_dim);
      Eigen::Index r = 0;
      for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != cfg.mixture.input_dim)
          throw ConfigError("config: means row length != input_dim");
        cfg.mixture.means.row(r++) = json_to_vector(row).transpose();
      }
    }
  }
  {
    const json aug = root.value("augmentation", json::object());
    reject_unknown_keys(aug, "augmentation", {"noise_sigma", "rotation_angle_max"});
    cfg.augmentation.noise_sigma = aug.value("noise_sigma", 0.1);
    cfg.augmentation.rotation_angle_max = aug.value("rotation_angle_max", M_PI / 16.0);
  }
  {
    const json model = root.value("model", json::object());
    reject_unknown_keys(model, "model", {"hidden_dims", "embed_dim", "k_model"});
    if (model.contains("hidden_dims"))
      cfg.hidden_dims = model["hidden_dims"].get<std::vector<int>>();
    cfg.embed_dim = model.value("embed_dim", 16);
    cfg.k_model = model.value("k_model", 16);
  }
  {
    const json temps = root.value("temperatures", json::object());
    reject_unknown_keys(temps, "temperatures",
                        {"tau_teacher", "tau_student", "cos_threshold", "boundary_prob"});
    cfg.temperatures.tau_teacher = temps.value("tau_teacher", 0.05);
    cfg.temperatures.tau_student = temps.value("tau_student", 0.1);
    cfg.temperatures.cos_threshold = temps.value("cos_threshold", 0.4);
    cfg.temperatures.boundary_prob = temps.value("boundary_prob", 0.5);
  }
  {
    const json sched = root.value("schedule", json::object());
    reject_unknown_keys(sched, "schedule",
                        {"epochs_total", "n_e", "batch_size", "learning_rate",
                         "ema_momentum", "center_momentum"});
    cfg.schedule.epochs_total = sched.value("epochs_total", 200);
    cfg.schedule.n_e = sched.value("n_e", 5);
    cfg.schedule.batch_size = sched.value("batch_size", 256);
    cfg.schedule.learning_rate = sched.value("learning_rate", 1e-3);
    cfg.schedule.ema_momentum = sched.value("ema_momentum", 0.9);
    cfg.schedule.center_momentum = sched.value("center_momentum", 0.9);
  }
  {
    const json collapse = root.value("collapse", json::object());
    reject_unknown_keys(collapse, "collapse", {"fraction", "patience"});
    cfg.collapse_fraction = collapse.value("fraction", 0.05);
    cfg.collapse_patience = collapse.value("patience", 5);
  }

  if (cfg.mixture.means.size() == 0) {
    SplitMix64 means_rng = SplitMix64(cfg.seed).split(streams::means);
    cfg.mixture.means = random_separated_means(
        cfg.mixture.k_true, cfg.mixture.input_dim, min_angle_deg * M_PI / 180.0,
        means_rng);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_json(ss.str());
}

namespace {

json config_to_json(const RunConfig& config) {
  json j;
  j["seed"] = config.seed;
  j["strategy"] = strategy_name(config.strategy);
  j["data"] = {{"k_true", config.mixture.k_true},
               {"input_dim", config.mixture.input_dim},
               {"sigma", config.mixture.sigma},
               {"n_train", config.n_train},
               {"weights", vector_to_json(config.mixture.weights)},
               {"means", matrix_to_json(config.mixture.means)}};
  j["augmentation"] = {{"noise_sigma", config.augmentation.noise_sigma},
                       {"rotation_angle_max", config.augmentation.rotation_angle_max}};
  j["model"] = {{"hidden_dims", config.hidden_dims},
                {"embed_dim", config.embed_dim},
                {"k_model", config.k_model}};
  j["temperatures"] = {{"tau_teacher", config.temperatures.tau_teacher},
                       {"tau_student", config.temperatures.tau_student},
                       {"cos_threshold", config.temperatures.cos_threshold},
                       {"boundary_prob", config.temperatures.boundary_prob}};
  j["schedule"] = {{"epochs_total", config.schedule.epochs_total},
                   {"n_e", config.schedule.n_e},
                   {"batch_size", config.schedule.batch_size},
                   {"learning_rate", config.schedule.learning_rate},
                   {"ema_momentum", config.schedule.ema_momentum},
                   {"center_momentum", config.schedule.center_momentum}};
  j["collapse"] = {{"fraction", config.collapse_fraction},
                   {"patience", config.collapse_patience}};
  return j;
}

}  // namespace

std::string config_to_json_string(const RunConfig& config) {
  return config_to_json(config).dump(2);
}

std::string report_to_json_string(const RunConfig& config, const RunReport& report,
                                  const std::string& checkpoint_path) {
  json j;
  j["config"] = config_to_json(config);
  j["initial_nmi"] = report.initial_nmi;
  j["collapsed"] = report.collapsed;
  j["diverged"] = report.diverged;
  j["divergence_epoch"] = report.divergence_epoch;
  j["wall_clock_seconds"] = report.wall_clock_seconds;
  j["checkpoint"] = checkpoint_path;

  json cols;
  const auto& ms = report.metrics;
  auto column = [&ms](auto&& get) {
    json arr = json::array();
    for (const auto& m : ms) arr.push_back(get(m));
    return arr;
  };
  cols["epoch"] = column([](const EpochMetrics& m) { return m.epoch; });
  cols["prior_entropy"] = column([](const EpochMetrics& m) { return m.prior_entropy; });
  cols["effective_clusters"] =
      column([](const EpochMetrics& m) { return m.effective_clusters; });
  cols["nmi"] = column([](const EpochMetrics& m) { return m.nmi; });
  cols["kl_teacher_student"] =
      column([](const EpochMetrics& m) { return m.kl_teacher_student; });
  cols["jensen_gap_mean"] =
      column([](const EpochMetrics& m) { return m.jensen_gap_mean; });
  cols["obj_kl_term"] = column([](const EpochMetrics& m) { return m.objective.kl_term; });
  cols["obj_cross_entropy_term"] =
      column([](const EpochMetrics& m) { return m.objective.cross_entropy_term; });
  cols["obj_entropy_regularizer_term"] =
      column([](const EpochMetrics& m) { return m.objective.entropy_regularizer_term; });
  cols["obj_sum_to_one_penalty"] =
      column([](const EpochMetrics& m) { return m.objective.sum_to_one_penalty; });
  cols["obj_total"] = column([](const EpochMetrics& m) { return m.objective.total; });
  cols["strategy_agreement"] =
      column([](const EpochMetrics& m) { return m.strategy_agreement; });
  j["metrics"] = cols;

  json refreshes = json::array();
  for (const auto& r : report.refreshes)
    refreshes.push_back({{"epoch", r.epoch},
                         {"priors", vector_to_json(r.priors)},
                         {"center", vector_to_json(r.center)}});
  j["refreshes"] = refreshes;
  return j.dump(2);
}

void write_run_outputs(const std::string& out_dir, const RunConfig& config,
                       const RunOutcome& outcome) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);

  const std::string ckpt = (dir / "checkpoint.bin").string();
  save_checkpoint(ckpt, outcome.encoder, outcome.head);

  std::ofstream csv(dir / "metrics.csv");
  if (!csv) throw ConfigError("cannot write metrics.csv in " + out_dir);
  csv << metrics_csv_header() << "\n";
  for (const auto& m : outcome.report.metrics) append_metrics_csv(csv, m);

  std::ofstream rep(dir / "report.json");
  if (!rep) throw ConfigError("cannot write report.json in " + out_dir);
  rep << report_to_json_string(config, outcome.report, "checkpoint.bin") << "\n";
}

void write_compare_csv(const std::string& path, const CompareReport& report) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << compare_csv_header() << "\n";
  for (const auto& row : report.epochs) append_compare_csv(out, row);
}

}  // namespace klab
