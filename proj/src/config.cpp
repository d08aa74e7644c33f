#include "mbcnn/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace mbcnn {
namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!j.is_object()) throw std::runtime_error(where + " must be an object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key()))
      throw std::runtime_error("unknown key \"" + item.key() + "\" in " + where);
  }
}

int get_int(const json& j, const std::string& where) {
  if (!j.is_number_integer())
    throw std::runtime_error(where + " must be an integer");
  return j.get<int>();
}

double get_num(const json& j, const std::string& where) {
  if (!j.is_number()) throw std::runtime_error(where + " must be a number");
  return j.get<double>();
}

std::string get_str(const json& j, const std::string& where) {
  if (!j.is_string()) throw std::runtime_error(where + " must be a string");
  return j.get<std::string>();
}

const json& require(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end())
    throw std::runtime_error(where + " is missing \"" + std::string(key) + "\"");
  return *it;
}

}  // namespace

std::string arch_to_json(const ArchConfig& cfg) {
  json j;
  j["c"] = cfg.c;
  j["p"] = cfg.p;
  j["n_g"] = cfg.n_g;
  j["n_d"] = cfg.n_d;
  j["k"] = cfg.k;
  j["dilations"] = cfg.dilations;
  j["preset"] = cfg.preset;
  return j.dump();
}

ArchConfig arch_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw std::runtime_error("arch config is not valid JSON");
  check_keys(j, "arch", {"c", "p", "n_g", "n_d", "k", "dilations", "preset"});
  ArchConfig cfg;
  if (j.count("c")) cfg.c = get_int(j["c"], "arch.c");
  cfg.p = get_int(require(j, "p", "arch"), "arch.p");
  cfg.n_g = get_int(require(j, "n_g", "arch"), "arch.n_g");
  cfg.n_d = get_int(require(j, "n_d", "arch"), "arch.n_d");
  cfg.k = get_int(require(j, "k", "arch"), "arch.k");
  const json& dil = require(j, "dilations", "arch");
  if (!dil.is_array())
    throw std::runtime_error("arch.dilations must be an array");
  cfg.dilations.clear();
  for (const auto& d : dil)
    cfg.dilations.push_back(get_int(d, "arch.dilations[]"));
  if (j.count("preset")) cfg.preset = get_str(j["preset"], "arch.preset");
  validate_config(cfg);
  return cfg;
}

RunConfig parse_run_config(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw std::runtime_error("config is not valid JSON");
  check_keys(j, "config", {"preset", "arch", "loss", "train", "data", "out_dir"});

  RunConfig rc;
  const bool has_preset = j.count("preset") > 0;
  const bool has_arch = j.count("arch") > 0;
  if (has_preset == has_arch)
    throw std::runtime_error("config needs exactly one of \"preset\" or \"arch\"");
  if (has_preset) {
    rc.arch = arch_preset(get_str(j["preset"], "preset"));
  } else {
    rc.arch = arch_from_json(j["arch"].dump());
  }

  bool stage2 = false;
  if (j.count("train")) {
    const json& t = j["train"];
    check_keys(t, "train", {"lr", "batch", "patch", "epochs_max", "seed", "stage2"});
    if (t.count("stage2")) {
      if (!t["stage2"].is_boolean())
        throw std::runtime_error("train.stage2 must be a boolean");
      stage2 = t["stage2"].get<bool>();
    }
  }
  rc.train = make_train_config(stage2);
  if (j.count("train")) {
    const json& t = j["train"];
    if (t.count("lr")) rc.train.lr = get_num(t["lr"], "train.lr");
    if (t.count("batch")) rc.train.batch = get_int(t["batch"], "train.batch");
    if (t.count("patch")) rc.train.patch = get_int(t["patch"], "train.patch");
    if (t.count("epochs_max"))
      rc.train.epochs_max = get_int(t["epochs_max"], "train.epochs_max");
    if (t.count("seed"))
      rc.train.seed = static_cast<std::uint64_t>(get_int(t["seed"], "train.seed"));
  }

  if (j.count("loss")) {
    const json& l = j["loss"];
    check_keys(l, "loss", {"variant", "lambda"});
    if (l.count("variant"))
      rc.train.loss = default_loss_config(
          loss_variant_from_string(get_str(l["variant"], "loss.variant")));
    if (l.count("lambda")) rc.train.loss.lambda = get_num(l["lambda"], "loss.lambda");
  }

  if (j.count("data")) {
    const json& d = j["data"];
    check_keys(d, "data", {"train_dir", "val_dir", "procedural_n", "val_n", "size"});
    const bool dirs = d.count("train_dir") || d.count("val_dir");
    const bool proc = d.count("procedural_n") > 0;
    if (dirs && proc)
      throw std::runtime_error("data: use directories or procedural_n, not both");
    if (dirs) {
      rc.train_dir = get_str(require(d, "train_dir", "data"), "data.train_dir");
      rc.val_dir = get_str(require(d, "val_dir", "data"), "data.val_dir");
    } else if (proc) {
      rc.procedural_n = get_int(d["procedural_n"], "data.procedural_n");
      if (rc.procedural_n < 1)
        throw std::runtime_error("data.procedural_n must be positive");
      if (d.count("val_n")) rc.procedural_val_n = get_int(d["val_n"], "data.val_n");
      if (d.count("size")) rc.procedural_size = get_int(d["size"], "data.size");
    } else {
      throw std::runtime_error("data needs train_dir/val_dir or procedural_n");
    }
  }

  if (j.count("out_dir")) rc.out_dir = get_str(j["out_dir"], "out_dir");
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

}  // namespace mbcnn
