#include "sbench/policy.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "sbench/errors.hpp"

namespace sbench {

namespace {

std::map<std::string, double> read_weight_file(const std::string& path,
                                               const std::string& want_kind) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open policy file: " + path);
    std::map<std::string, double> kv;
    std::string line;
    bool kind_ok = false;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.find(want_kind) != std::string::npos) kind_ok = true;
            continue;
        }
        std::istringstream ls(line);
        std::string name;
        double value;
        if (!(ls >> name >> value))
            throw structure_error("bad policy line: " + line);
        if (!std::isfinite(value))
            throw structure_error("non-finite policy weight: " + line);
        kv[name] = value;
    }
    if (!kind_ok)
        throw structure_error("policy file " + path + " is not a " + want_kind);
    return kv;
}

double need(const std::map<std::string, double>& kv, const std::string& k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw structure_error("policy file missing key: " + k);
    return it->second;
}

}  // namespace

bool PolicyModel::is_zero() const {
    for (double v : choose.w)
        if (v != 0) return false;
    for (double v : split.w)
        if (v != 0) return false;
    return choose.bias == 0 && split.bias == 0;
}

void PolicyModel::save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw io_error("cannot open policy file for write: " + path);
    f << "# rlr-policy\n";
    for (int i = 0; i < 4; ++i) f << "choose.w" << i << " " << choose.w[i] << "\n";
    f << "choose.bias " << choose.bias << "\n";
    for (int i = 0; i < 4; ++i) f << "split.w" << i << " " << split.w[i] << "\n";
    f << "split.bias " << split.bias << "\n";
    f << "meta.epochs " << meta.epochs << "\n";
    f << "meta.sample " << meta.sample_size << "\n";
    f << "meta.seed " << meta.seed << "\n";
    if (!f) throw io_error("short write on policy file: " + path);
}

PolicyModel PolicyModel::load(const std::string& path) {
    auto kv = read_weight_file(path, "rlr-policy");
    PolicyModel m;
    for (int i = 0; i < 4; ++i) {
        m.choose.w[i] = need(kv, "choose.w" + std::to_string(i));
        m.split.w[i] = need(kv, "split.w" + std::to_string(i));
    }
    m.choose.bias = need(kv, "choose.bias");
    m.split.bias = need(kv, "split.bias");
    m.meta.epochs = static_cast<uint64_t>(need(kv, "meta.epochs"));
    m.meta.sample_size = static_cast<uint64_t>(need(kv, "meta.sample"));
    m.meta.seed = static_cast<uint64_t>(need(kv, "meta.seed"));
    return m;
}

bool QdSelector::is_zero() const {
    return w[0] == 0 && w[1] == 0 && w[2] == 0 && bias == 0;
}

void QdSelector::save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw io_error("cannot open selector file for write: " + path);
    f << "# qd-selector\n";
    for (int i = 0; i < 3; ++i) f << "w" << i << " " << w[i] << "\n";
    f << "bias " << bias << "\n";
    f << "depth " << rollout_depth << "\n";
    f << "meta.epochs " << meta.epochs << "\n";
    f << "meta.sample " << meta.sample_size << "\n";
    f << "meta.seed " << meta.seed << "\n";
    if (!f) throw io_error("short write on selector file: " + path);
}

QdSelector QdSelector::load(const std::string& path) {
    auto kv = read_weight_file(path, "qd-selector");
    QdSelector s;
    for (int i = 0; i < 3; ++i) s.w[i] = need(kv, "w" + std::to_string(i));
    s.bias = need(kv, "bias");
    s.rollout_depth = static_cast<uint32_t>(need(kv, "depth"));
    s.meta.epochs = static_cast<uint64_t>(need(kv, "meta.epochs"));
    s.meta.sample_size = static_cast<uint64_t>(need(kv, "meta.sample"));
    s.meta.seed = static_cast<uint64_t>(need(kv, "meta.seed"));
    return s;
}

}  // namespace sbench
