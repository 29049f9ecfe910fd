#include "run_config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace glemb::cli {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw std::runtime_error("config: boolean expected for " + key + ", got '" + value + "'");
}

std::vector<std::size_t> parse_size_list(const std::string& value) {
  std::vector<std::size_t> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(std::stoul(item));
  }
  return out;
}

}  // namespace

void RunConfig::set_seed(std::uint64_t seed) {
  synth.seed = seed;
  train.seed = seed;
  check.seed = seed;
  synth_seed_set = true;
  train_seed_set = true;
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path.string());
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::runtime_error("config: malformed section at line " + std::to_string(lineno));
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config: expected key=value at line " + std::to_string(lineno));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string full = section + "." + key;

    if (full == "synth.identities") {
      config.synth.num_identities = std::stoul(value);
    } else if (full == "synth.samples_per_view") {
      config.synth.samples_per_view = std::stoul(value);
    } else if (full == "synth.dim") {
      config.synth.dim = std::stoul(value);
    } else if (full == "synth.center_scale") {
      config.synth.center_scale = std::stod(value);
    } else if (full == "synth.noise_scale") {
      config.synth.noise_scale = std::stod(value);
    } else if (full == "synth.view_offset_scale") {
      config.synth.view_offset_scale = std::stod(value);
    } else if (full == "synth.seed") {
      config.synth.seed = std::stoull(value);
      config.synth_seed_set = true;
    } else if (full == "train.epochs") {
      config.train.epochs = std::stoul(value);
    } else if (full == "train.batch_size") {
      config.train.batch_size = std::stoul(value);
    } else if (full == "train.learning_rate") {
      config.train.lr.base = std::stod(value);
    } else if (full == "train.lr_decay_factor") {
      config.train.lr.decay_factor = std::stod(value);
    } else if (full == "train.lr_decay_interval") {
      config.train.lr.decay_interval = std::stoul(value);
    } else if (full == "train.momentum") {
      config.train.momentum = std::stod(value);
    } else if (full == "train.mode") {
      config.train.mode = parse_mode(value);
    } else if (full == "train.scale_by_batch") {
      config.train.scale_by_batch = parse_bool(value, full);
    } else if (full == "train.hidden_dims") {
      config.train.hidden_dims = parse_size_list(value);
    } else if (full == "train.embed_dim") {
      config.train.embed_dim = std::stoul(value);
    } else if (full == "train.seed") {
      config.train.seed = std::stoull(value);
      config.train_seed_set = true;
    } else if (full == "loss.alpha") {
      config.train.loss.alpha = std::stod(value);
    } else if (full == "loss.tau") {
      config.train.loss.tau = std::stod(value);
    } else if (full == "loss.beta") {
      config.train.loss.beta = std::stod(value);
    } else if (full == "loss.lambda") {
      config.train.loss.lambda = std::stod(value);
    } else if (full == "loss.normalize_rows") {
      config.train.loss.normalize_rows = parse_bool(value, full);
    } else if (full == "eval.trials") {
      config.eval.trials = std::stoul(value);
    } else if (full == "check.instances") {
      config.check.equivalence_instances = std::stoul(value);
    } else if (full == "check.gradient_batches") {
      config.check.gradient_batches = std::stoul(value);
    } else if (full == "check.seed") {
      config.check.seed = std::stoull(value);
    } else {
      throw std::runtime_error("config: unknown key '" + full + "' at line " +
                               std::to_string(lineno));
    }
  }
}

std::string render_resolved_config(const RunConfig& config) {
  std::ostringstream os;
  os << "# glemb resolved configuration\n";
  os << "[synth]\n";
  os << "identities = " << config.synth.num_identities << "\n";
  os << "samples_per_view = " << config.synth.samples_per_view << "\n";
  os << "dim = " << config.synth.dim << "\n";
  os << "center_scale = " << config.synth.center_scale << "\n";
  os << "noise_scale = " << config.synth.noise_scale << "\n";
  os << "view_offset_scale = " << config.synth.view_offset_scale << "\n";
  os << "seed = " << config.synth.seed << "\n";
  os << "\n[train]\n";
  os << "epochs = " << config.train.epochs << "\n";
  os << "batch_size = " << config.train.batch_size << "\n";
  os << "learning_rate = " << config.train.lr.base << "\n";
  os << "lr_decay_factor = " << config.train.lr.decay_factor << "\n";
  os << "lr_decay_interval = " << config.train.lr.decay_interval << "\n";
  os << "momentum = " << config.train.momentum << "\n";
  os << "mode = " << mode_name(config.train.mode) << "\n";
  os << "scale_by_batch = " << (config.train.scale_by_batch ? "true" : "false") << "\n";
  os << "hidden_dims = ";
  for (std::size_t i = 0; i < config.train.hidden_dims.size(); ++i) {
    os << (i ? "," : "") << config.train.hidden_dims[i];
  }
  os << "\n";
  os << "embed_dim = " << config.train.embed_dim << "\n";
  os << "seed = " << config.train.seed << "\n";
  os << "\n[loss]\n";
  os << "alpha = " << config.train.loss.alpha << "\n";
  os << "tau = " << config.train.loss.tau << "\n";
  os << "beta = " << config.train.loss.beta << "\n";
  os << "lambda = " << config.train.loss.lambda << "\n";
  os << "normalize_rows = " << (config.train.loss.normalize_rows ? "true" : "false") << "\n";
  os << "\n[eval]\n";
  os << "trials = " << config.eval.trials << "\n";
  os << "\n[check]\n";
  os << "instances = " << config.check.equivalence_instances << "\n";
  os << "gradient_batches = " << config.check.gradient_batches << "\n";
  os << "seed = " << config.check.seed << "\n";
  return os.str();
}

}  // namespace glemb::cli
