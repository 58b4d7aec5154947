#pragma once

// Flat key = value configuration files with [section] headers, plus the run
// manifest every CLI invocation writes.

#include <map>
#include <string>
#include <vector>

#include "ego2front/trainer.hpp"

namespace ego2front::cfg {

// keys are "section.key" ("train.lr"); entries before any section header use
// the bare key
using ConfigMap = std::map<std::string, std::string>;

ConfigMap load_config_file(const std::string& path);
ConfigMap parse_config_text(const std::string& text);
std::string canonical_config_text(const ConfigMap& map);

// applies [train] section overrides onto a TrainConfig
train::TrainConfig train_config_from(const ConfigMap& map,
                                     const train::TrainConfig& base = {});
void dump_train_config(const train::TrainConfig& cfg, ConfigMap& map);

struct RunManifest {
    std::string command;
    std::vector<std::string> args;
    std::string config_hash_hex;
    uint64_t seed = 0;
    std::map<std::string, std::string> input_hashes;   // path -> hex hash
    std::vector<std::string> outputs;
    std::string timestamp;  // informational only, excluded from identity
};

void write_run_manifest(const std::string& out_dir, const RunManifest& manifest);

}  // namespace ego2front::cfg
