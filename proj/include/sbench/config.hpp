#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sbench/bench.hpp"
#include "sbench/dataset.hpp"
#include "sbench/learn.hpp"

namespace sbench {

// Flat text config: [section] headers, key = value lines, # comments.
struct ConfigSection {
    std::string name;
    std::map<std::string, std::string> kv;
};

struct ConfigFile {
    std::vector<ConfigSection> sections;  // declaration order

    bool has(const std::string& name) const;
    const ConfigSection& at(const std::string& name) const;
};

ConfigFile config_parse_text(const std::string& text);
ConfigFile config_load(const std::string& path);

std::string cfg_str(const ConfigSection& s, const std::string& key);
std::string cfg_str_or(const ConfigSection& s, const std::string& key,
                       const std::string& dflt);
double cfg_num(const ConfigSection& s, const std::string& key);
double cfg_num_or(const ConfigSection& s, const std::string& key, double dflt);
uint64_t cfg_u64(const ConfigSection& s, const std::string& key);
uint64_t cfg_u64_or(const ConfigSection& s, const std::string& key,
                    uint64_t dflt);
bool cfg_bool_or(const ConfigSection& s, const std::string& key, bool dflt);

DatasetSpec dataset_spec_from(const ConfigSection& s);
WorkloadSpec workload_spec_from(const ConfigSection& s);

// Sections named "param <name>" in declaration order plus [tune] t_build.
TuneGrid tune_grid_from(const ConfigFile& f);

// [index] section; referenced policy/selector/curve files are loaded here.
// A [training_queries] range-workload section, if present, is materialized
// against the dataset by the caller.
// Knobs for training a missing learned artifact at build time.
struct TrainKnobs {
    uint64_t sample = 10000;
    uint32_t epochs = 2;
    uint32_t height = 3;
    uint32_t rollout_depth = 1;
    uint64_t seed = 0;
};

struct IndexConfigFile {
    IndexConfig cfg;
    bool has_training_workload = false;
    WorkloadSpec training_workload;
    bool has_train = false;
    TrainKnobs train;
};

IndexConfigFile index_config_from(const ConfigFile& f);

}  // namespace sbench
