#include "seesaw/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "seesaw/optim.hpp"

namespace seesaw {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("config: invalid boolean for " + key + ": " + v);
}

template <typename T>
T parse_number(const std::string& v, const std::string& key) {
  std::istringstream in(v);
  T value;
  in >> value;
  if (in.fail() || !in.eof()) throw std::runtime_error("config: invalid value for " + key + ": " + v);
  return value;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> map = {
      {"model.arch", [](RunConfig& c, const std::string& v, const std::string&) { c.arch = v; }},
      {"model.variant", [](RunConfig& c, const std::string& v, const std::string&) { c.variant = v; }},
      {"model.width", [](RunConfig& c, const std::string& v, const std::string& k) { c.width = parse_number<double>(v, k); }},
      {"model.classes", [](RunConfig& c, const std::string& v, const std::string& k) { c.classes = parse_number<int>(v, k); }},
      {"model.input", [](RunConfig& c, const std::string& v, const std::string&) { c.input = v; }},
      {"model.expansion", [](RunConfig& c, const std::string& v, const std::string& k) { c.expansion = parse_number<int>(v, k); }},
      {"model.ratio", [](RunConfig& c, const std::string& v, const std::string&) { c.ratio = v; }},
      {"model.share_width", [](RunConfig& c, const std::string& v, const std::string& k) { c.share_width = parse_number<int>(v, k); }},
      {"model.permutes", [](RunConfig& c, const std::string& v, const std::string& k) { c.permutes = parse_bool(v, k); }},
      {"train.schedule", [](RunConfig& c, const std::string& v, const std::string&) { c.schedule = v; }},
      {"train.lr", [](RunConfig& c, const std::string& v, const std::string& k) { c.lr = parse_number<double>(v, k); }},
      {"train.momentum", [](RunConfig& c, const std::string& v, const std::string& k) { c.momentum = parse_number<double>(v, k); }},
      {"train.weight_decay", [](RunConfig& c, const std::string& v, const std::string& k) { c.weight_decay = parse_number<double>(v, k); }},
      {"train.batch", [](RunConfig& c, const std::string& v, const std::string& k) { c.batch = parse_number<int>(v, k); }},
      {"train.epochs", [](RunConfig& c, const std::string& v, const std::string& k) { c.epochs = parse_number<int>(v, k); }},
      {"train.seed", [](RunConfig& c, const std::string& v, const std::string& k) { c.seed = parse_number<std::uint64_t>(v, k); }},
      {"train.augment", [](RunConfig& c, const std::string& v, const std::string& k) { c.augment = parse_bool(v, k); }},
      {"train.subset", [](RunConfig& c, const std::string& v, const std::string& k) { c.subset = parse_number<int>(v, k); }},
      {"train.eval_every", [](RunConfig& c, const std::string& v, const std::string& k) { c.eval_every = parse_number<int>(v, k); }},
      {"data.dir", [](RunConfig& c, const std::string& v, const std::string&) { c.data_dir = v; }},
      {"data.dataset", [](RunConfig& c, const std::string& v, const std::string&) { c.dataset = v; }},
      {"out.dir", [](RunConfig& c, const std::string& v, const std::string&) { c.out_dir = v; }},
  };
  return map;
}

void set_key(RunConfig& config, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw std::runtime_error("config: unknown key '" + key + "'");
  it->second(config, value, key);
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig config;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config: malformed section at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      if (section != "model" && section != "train" && section != "data" && section != "out")
        throw std::runtime_error("config: unknown section '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: expected key = value at line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw std::runtime_error("config: key '" + key + "' outside any section");
    set_key(config, section + "." + key, value);
  }
  return config;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::runtime_error("config: override must look like section.key=value: " + assignment);
  set_key(config, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string resolved_text(const RunConfig& c) {
  // Fill schedule-dependent defaults so the echo is fully explicit.
  RunConfig r = c;
  Schedule schedule;
  if (r.schedule == "cifar_step") schedule = Schedule::CifarStep;
  else if (r.schedule == "imagenet_exp") schedule = Schedule::ImagenetExp;
  else if (r.schedule == "constant") schedule = Schedule::Constant;
  else throw std::runtime_error("config: unknown schedule '" + r.schedule + "'");
  const TrainConfig defaults = defaults_for(schedule);
  if (r.lr < 0) r.lr = defaults.base_lr;
  if (r.momentum < 0) r.momentum = defaults.momentum;
  if (r.weight_decay < 0) r.weight_decay = defaults.weight_decay;
  if (r.batch < 0) r.batch = defaults.batch_size;

  std::ostringstream out;
  out.precision(17);
  out << "[model]\n"
      << "arch = " << r.arch << "\n"
      << "variant = " << r.variant << "\n"
      << "width = " << r.width << "\n"
      << "classes = " << r.classes << "\n"
      << "input = " << r.input << "\n"
      << "expansion = " << r.expansion << "\n"
      << "ratio = " << r.ratio << "\n"
      << "share_width = " << r.share_width << "\n"
      << "permutes = " << (r.permutes ? "true" : "false") << "\n\n"
      << "[train]\n"
      << "schedule = " << r.schedule << "\n"
      << "lr = " << r.lr << "\n"
      << "momentum = " << r.momentum << "\n"
      << "weight_decay = " << r.weight_decay << "\n"
      << "batch = " << r.batch << "\n"
      << "epochs = " << r.epochs << "\n"
      << "seed = " << r.seed << "\n"
      << "augment = " << (r.augment ? "true" : "false") << "\n"
      << "subset = " << r.subset << "\n"
      << "eval_every = " << r.eval_every << "\n\n"
      << "[data]\n"
      << "dir = " << r.data_dir << "\n"
      << "dataset = " << r.dataset << "\n\n"
      << "[out]\n"
      << "dir = " << r.out_dir << "\n";
  return out.str();
}

std::vector<int> parse_ratio(const std::string& ratio) {
  std::vector<int> parts;
  std::string token;
  std::istringstream in(ratio);
  while (std::getline(in, token, ':')) {
    if (token.empty()) throw std::runtime_error("config: malformed ratio '" + ratio + "'");
    parts.push_back(parse_number<int>(token, "ratio"));
  }
  if (parts.empty()) throw std::runtime_error("config: malformed ratio '" + ratio + "'");
  return parts;
}

}  // namespace seesaw
