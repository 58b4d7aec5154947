#include "ego2front/runconfig.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ego2front::cfg {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
    ConfigMap map;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        size_t eq = t.find('=');
        require(eq != std::string::npos, ErrorCode::UsageError,
                "config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        require(!key.empty(), ErrorCode::UsageError,
                "config line " + std::to_string(lineno) + ": empty key");
        map[section.empty() ? key : section + "." + key] = val;
    }
    return map;
}

ConfigMap load_config_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::IoError, "cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string canonical_config_text(const ConfigMap& map) {
    std::ostringstream out;
    for (const auto& [k, v] : map) out << k << " = " << v << "\n";
    return out.str();
}

namespace {

template <typename T>
void read_num(const ConfigMap& m, const std::string& key, T& out) {
    auto it = m.find(key);
    if (it == m.end()) return;
    std::istringstream ss(it->second);
    T v{};
    ss >> v;
    require(!ss.fail(), ErrorCode::UsageError, "config: bad numeric value for " + key);
    out = v;
}

void read_bool(const ConfigMap& m, const std::string& key, bool& out) {
    auto it = m.find(key);
    if (it == m.end()) return;
    const std::string& v = it->second;
    if (v == "1" || v == "true" || v == "yes" || v == "on") {
        out = true;
    } else if (v == "0" || v == "false" || v == "no" || v == "off") {
        out = false;
    } else {
        raise(ErrorCode::UsageError, "config: bad boolean value for " + key);
    }
}

void read_str(const ConfigMap& m, const std::string& key, std::string& out) {
    auto it = m.find(key);
    if (it != m.end()) out = it->second;
}

}  // namespace

train::TrainConfig train_config_from(const ConfigMap& map, const train::TrainConfig& base) {
    train::TrainConfig c = base;
    read_num(map, "train.lr", c.lr);
    read_num(map, "train.beta1", c.beta1);
    read_num(map, "train.beta2", c.beta2);
    read_num(map, "train.batch_size", c.batch_size);
    read_num(map, "train.epochs", c.epochs);
    read_num(map, "train.n_frames", c.n_frames);
    read_num(map, "train.resolution", c.resolution);
    read_str(map, "train.cond_mode", c.cond_mode);
    read_bool(map, "train.remove_ego_bg", c.remove_ego_bg);
    read_bool(map, "train.use_perceptual", c.use_perceptual);
    read_str(map, "train.extractor_id", c.extractor_id);
    read_num(map, "train.seed", c.seed);
    read_num(map, "train.train_frames", c.train_frames);
    read_num(map, "train.lambda1", c.lambda1);
    read_num(map, "train.lambda2", c.lambda2);
    read_num(map, "train.d_depth", c.d_depth);
    read_num(map, "train.d_base_channels", c.d_base_channels);
    return c;
}

void dump_train_config(const train::TrainConfig& cfg, ConfigMap& map) {
    auto put = [&](const std::string& k, const std::string& v) { map["train." + k] = v; };
    std::ostringstream tmp;
    tmp.precision(17);
    auto num = [&](auto v) {
        tmp.str("");
        tmp << v;
        return tmp.str();
    };
    put("lr", num(cfg.lr));
    put("beta1", num(cfg.beta1));
    put("beta2", num(cfg.beta2));
    put("batch_size", num(cfg.batch_size));
    put("epochs", num(cfg.epochs));
    put("n_frames", num(cfg.n_frames));
    put("resolution", num(cfg.resolution));
    put("cond_mode", cfg.cond_mode);
    put("remove_ego_bg", cfg.remove_ego_bg ? "true" : "false");
    put("use_perceptual", cfg.use_perceptual ? "true" : "false");
    put("extractor_id", cfg.extractor_id);
    put("seed", num(cfg.seed));
    put("train_frames", num(cfg.train_frames));
    put("lambda1", num(cfg.lambda1));
    put("lambda2", num(cfg.lambda2));
    put("d_depth", num(cfg.d_depth));
    put("d_base_channels", num(cfg.d_base_channels));
}

void write_run_manifest(const std::string& out_dir, const RunManifest& m) {
    std::filesystem::create_directories(out_dir);
    nlohmann::json j;
    j["command"] = m.command;
    j["args"] = m.args;
    j["config_hash"] = m.config_hash_hex;
    j["seed"] = m.seed;
    j["input_hashes"] = m.input_hashes;
    j["outputs"] = m.outputs;
    j["timestamp"] = m.timestamp;
    std::ofstream out(out_dir + "/run_manifest.json");
    require(out.good(), ErrorCode::IoError, "cannot write run manifest in " + out_dir);
    out << j.dump(2) << "\n";
}

}  // namespace ego2front::cfg
