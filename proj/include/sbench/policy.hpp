#pragma once

#include <cstdint>
#include <string>

namespace sbench {

// Linear scorer: score = w . features + bias.
struct PolicyWeights {
    double w[4] = {0, 0, 0, 0};
    double bias = 0;

    double score(const double f[4]) const {
        return w[0] * f[0] + w[1] * f[1] + w[2] * f[2] + w[3] * f[3] + bias;
    }
};

struct TrainMeta {
    uint64_t epochs = 0;
    uint64_t sample_size = 0;
    uint64_t seed = 0;
};

// RLR-tree policy: one weight set per action class.
struct PolicyModel {
    PolicyWeights choose;  // subtree choice
    PolicyWeights split;   // split-distribution choice
    TrainMeta meta;

    bool is_zero() const;
    void save(const std::string& path) const;
    static PolicyModel load(const std::string& path);
};

// Qd-tree cut selector: 3 features (cut provenance, blocks-skipped
// estimate, balance ratio); zero weights reduce to the greedy choice.
struct QdSelector {
    double w[3] = {0, 0, 0};
    double bias = 0;
    uint32_t rollout_depth = 0;
    TrainMeta meta;

    double score(const double f[3]) const {
        return w[0] * f[0] + w[1] * f[1] + w[2] * f[2] + bias;
    }
    bool is_zero() const;
    void save(const std::string& path) const;
    static QdSelector load(const std::string& path);
};

}  // namespace sbench
