#include "rcpn/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rcpn/error.hpp"

namespace rcpn {

TrainConfig CliConfig::train_config() const {
  TrainConfig tc;
  tc.r_train = r_train;
  tc.r_test = r_test;
  tc.epochs = epochs;
  tc.learning_rate = learning_rate;
  tc.momentum = momentum;
  tc.weight_decay = weight_decay;
  tc.clip_norm = clip_norm;
  tc.seed = seed;
  tc.mode = loss_mode_kind();
  tc.balanced = balanced;
  tc.policy = tree_policy_kind();
  tc.plain_nn = plain_nn;
  tc.d_sem = d_sem;
  tc.act = activation_kind();
  return tc;
}

Activation CliConfig::activation_kind() const {
  if (activation == "tanh") return Activation::Tanh;
  if (activation == "relu") return Activation::Relu;
  throw ConfigError("activation: expected tanh or relu, got '" + activation + "'");
}

LossMode CliConfig::loss_mode_kind() const {
  if (loss_mode == "rcpn") return LossMode::Rcpn;
  if (loss_mode == "pure_node") return LossMode::PureNode;
  throw ConfigError("loss_mode: expected rcpn or pure_node, got '" + loss_mode + "'");
}

TreePolicy CliConfig::tree_policy_kind() const {
  if (tree_policy == "balanced") return TreePolicy::Balanced;
  if (tree_policy == "uniform") return TreePolicy::Uniform;
  throw ConfigError("tree_policy: expected balanced or uniform, got '" + tree_policy + "'");
}

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw ConfigError("config key '" + key + "': cannot parse value '" + value + "'");
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    int v = std::stoi(value, &used);
    if (used != value.size()) bad_value(key, value);
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, value);
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    std::uint64_t v = std::stoull(value, &used);
    if (used != value.size()) bad_value(key, value);
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, value);
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) bad_value(key, value);
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  bad_value(key, value);
}

void set_key(CliConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "command") cfg.command = value;
  else if (key == "out") cfg.out = value;
  else if (key == "images_dir") cfg.images_dir = value;
  else if (key == "labels_dir") cfg.labels_dir = value;
  else if (key == "features_dir") cfg.features_dir = value;
  else if (key == "pred_dir") cfg.pred_dir = value;
  else if (key == "model") cfg.model = value;
  else if (key == "seed") cfg.seed = parse_u64(key, value);
  else if (key == "classes") cfg.classes = parse_int(key, value);
  else if (key == "void_value") cfg.void_value = parse_int(key, value);
  else if (key == "superpixel_method") cfg.superpixel_method = value;
  else if (key == "superpixel_count") cfg.superpixel_count = parse_int(key, value);
  else if (key == "slic_compactness") cfg.slic_compactness = parse_double(key, value);
  else if (key == "slic_iters") cfg.slic_iters = parse_int(key, value);
  else if (key == "d_sem") cfg.d_sem = parse_int(key, value);
  else if (key == "activation") cfg.activation = value;
  else if (key == "r_train") cfg.r_train = parse_int(key, value);
  else if (key == "r_test") cfg.r_test = parse_int(key, value);
  else if (key == "epochs") cfg.epochs = parse_int(key, value);
  else if (key == "learning_rate") cfg.learning_rate = parse_double(key, value);
  else if (key == "momentum") cfg.momentum = parse_double(key, value);
  else if (key == "weight_decay") cfg.weight_decay = parse_double(key, value);
  else if (key == "clip_norm") cfg.clip_norm = parse_double(key, value);
  else if (key == "loss_mode") cfg.loss_mode = value;
  else if (key == "balanced") cfg.balanced = parse_bool(key, value);
  else if (key == "tree_policy") cfg.tree_policy = value;
  else if (key == "plain_nn") cfg.plain_nn = parse_bool(key, value);
  else if (key == "mrf") cfg.mrf = parse_bool(key, value);
  else if (key == "mrf_k") cfg.mrf_k = parse_int(key, value);
  else if (key == "overlay") cfg.overlay = parse_bool(key, value);
  else if (key == "iou_subset") cfg.iou_subset = value;
  else if (key == "synth_count") cfg.synth_count = parse_int(key, value);
  else if (key == "synth_cells_x") cfg.synth_cells_x = parse_int(key, value);
  else if (key == "synth_cells_y") cfg.synth_cells_y = parse_int(key, value);
  else if (key == "synth_cell_size") cfg.synth_cell_size = parse_int(key, value);
  else if (key == "synth_classes") cfg.synth_classes = parse_int(key, value);
  else if (key == "synth_ambiguity") cfg.synth_ambiguity = parse_double(key, value);
  else if (key == "synth_noise") cfg.synth_noise = parse_double(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

void apply_file(CliConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    set_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::string kebab_to_snake(const std::string& s) {
  std::string out = s;
  std::replace(out.begin(), out.end(), '-', '_');
  return out;
}

void require(const CliConfig& cfg, const std::string& field, const std::string& value) {
  if (value.empty())
    throw ConfigError("command '" + cfg.command + "' requires --" + field);
}

void validate(const CliConfig& cfg) {
  static const std::vector<std::string> commands = {"synth", "train", "infer", "eval", "diag"};
  if (std::find(commands.begin(), commands.end(), cfg.command) == commands.end())
    throw ConfigError("unknown or missing command '" + cfg.command +
                      "' (expected synth|train|infer|eval|diag)");
  require(cfg, "out", cfg.out);
  if (cfg.command == "train" || cfg.command == "diag") {
    require(cfg, "images-dir", cfg.images_dir);
    require(cfg, "labels-dir", cfg.labels_dir);
  } else if (cfg.command == "infer") {
    require(cfg, "images-dir", cfg.images_dir);
    require(cfg, "model", cfg.model);
  } else if (cfg.command == "eval") {
    require(cfg, "pred-dir", cfg.pred_dir);
    require(cfg, "labels-dir", cfg.labels_dir);
  }
  if (cfg.r_train < 1 || cfg.r_test < 1)
    throw ConfigError("r_train and r_test must be >= 1");
  if (cfg.learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
    throw ConfigError("momentum must be in [0,1)");
  if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (cfg.d_sem < 1) throw ConfigError("d_sem must be >= 1");
  if (cfg.mrf_k < 1) throw ConfigError("mrf_k must be >= 1");
  if (cfg.superpixel_method != "grid" && cfg.superpixel_method != "slic")
    throw ConfigError("superpixel_method: expected grid or slic");
  cfg.activation_kind();
  cfg.loss_mode_kind();
  cfg.tree_policy_kind();
}

}  // namespace

CliConfig parse_config(const std::vector<std::string>& args) {
  CliConfig cfg;
  std::string command, config_path;
  std::vector<std::pair<std::string, std::string>> flags;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) == 0) {
      std::string key = kebab_to_snake(a.substr(2));
      if (i + 1 >= args.size()) throw ConfigError("flag --" + a.substr(2) + " needs a value");
      std::string value = args[++i];
      if (key == "config")
        config_path = value;
      else
        flags.emplace_back(key, value);
    } else if (command.empty()) {
      command = a;
    } else {
      throw ConfigError("unexpected positional argument '" + a + "'");
    }
  }
  if (!config_path.empty()) apply_file(cfg, config_path);
  if (!command.empty()) cfg.command = command;
  for (const auto& [key, value] : flags) set_key(cfg, key, value);
  validate(cfg);
  return cfg;
}

std::string resolved_config(const CliConfig& c) {
  std::ostringstream os;
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  os << "command = " << c.command << '\n'
     << "out = " << c.out << '\n';
  if (!c.images_dir.empty()) os << "images_dir = " << c.images_dir << '\n';
  if (!c.labels_dir.empty()) os << "labels_dir = " << c.labels_dir << '\n';
  if (!c.features_dir.empty()) os << "features_dir = " << c.features_dir << '\n';
  if (!c.pred_dir.empty()) os << "pred_dir = " << c.pred_dir << '\n';
  if (!c.model.empty()) os << "model = " << c.model << '\n';
  os << "seed = " << c.seed << '\n'
     << "classes = " << c.classes << '\n'
     << "void_value = " << c.void_value << '\n'
     << "superpixel_method = " << c.superpixel_method << '\n'
     << "superpixel_count = " << c.superpixel_count << '\n'
     << "slic_compactness = " << num(c.slic_compactness) << '\n'
     << "slic_iters = " << c.slic_iters << '\n'
     << "d_sem = " << c.d_sem << '\n'
     << "activation = " << c.activation << '\n'
     << "r_train = " << c.r_train << '\n'
     << "r_test = " << c.r_test << '\n'
     << "epochs = " << c.epochs << '\n'
     << "learning_rate = " << num(c.learning_rate) << '\n'
     << "momentum = " << num(c.momentum) << '\n'
     << "weight_decay = " << num(c.weight_decay) << '\n'
     << "clip_norm = " << num(c.clip_norm) << '\n'
     << "loss_mode = " << c.loss_mode << '\n'
     << "balanced = " << (c.balanced ? "true" : "false") << '\n'
     << "tree_policy = " << c.tree_policy << '\n'
     << "plain_nn = " << (c.plain_nn ? "true" : "false") << '\n'
     << "mrf = " << (c.mrf ? "true" : "false") << '\n'
     << "mrf_k = " << c.mrf_k << '\n'
     << "overlay = " << (c.overlay ? "true" : "false") << '\n';
  if (!c.iou_subset.empty()) os << "iou_subset = " << c.iou_subset << '\n';
  os << "synth_count = " << c.synth_count << '\n'
     << "synth_cells_x = " << c.synth_cells_x << '\n'
     << "synth_cells_y = " << c.synth_cells_y << '\n'
     << "synth_cell_size = " << c.synth_cell_size << '\n'
     << "synth_classes = " << c.synth_classes << '\n'
     << "synth_ambiguity = " << num(c.synth_ambiguity) << '\n'
     << "synth_noise = " << num(c.synth_noise) << '\n';
  return os.str();
}

}  // namespace rcpn
