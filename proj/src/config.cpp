#include "sbench/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "sbench/errors.hpp"
#include "sbench/text.hpp"

namespace sbench {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

}  // namespace

bool ConfigFile::has(const std::string& name) const {
    for (const ConfigSection& s : sections)
        if (s.name == name) return true;
    return false;
}

const ConfigSection& ConfigFile::at(const std::string& name) const {
    for (const ConfigSection& s : sections)
        if (s.name == name) return s;
    throw config_error("missing config section: [" + name + "]");
}

ConfigFile config_parse_text(const std::string& text) {
    ConfigFile f;
    std::istringstream in(text);
    std::string line;
    uint64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw config_error("config line " + std::to_string(lineno) +
                                   ": unterminated section header");
            f.sections.push_back({trim(t.substr(1, t.size() - 2)), {}});
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(lineno) +
                               ": expected key = value");
        if (f.sections.empty())
            throw config_error("config line " + std::to_string(lineno) +
                               ": key before any section");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw config_error("config line " + std::to_string(lineno) +
                               ": empty key");
        f.sections.back().kv[key] = value;
    }
    return f;
}

ConfigFile config_load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_parse_text(buf.str());
}

std::string cfg_str(const ConfigSection& s, const std::string& key) {
    auto it = s.kv.find(key);
    if (it == s.kv.end())
        throw config_error("[" + s.name + "] missing key: " + key);
    return it->second;
}

std::string cfg_str_or(const ConfigSection& s, const std::string& key,
                       const std::string& dflt) {
    auto it = s.kv.find(key);
    return it == s.kv.end() ? dflt : it->second;
}

double cfg_num(const ConfigSection& s, const std::string& key) {
    std::string v = cfg_str(s, key);
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        if (trim(v.substr(pos)).empty()) return d;
    } catch (const std::exception&) {
    }
    throw config_error("[" + s.name + "] bad number for " + key + ": " + v);
}

double cfg_num_or(const ConfigSection& s, const std::string& key, double dflt) {
    return s.kv.count(key) ? cfg_num(s, key) : dflt;
}

uint64_t cfg_u64(const ConfigSection& s, const std::string& key) {
    std::string v = cfg_str(s, key);
    try {
        size_t pos = 0;
        unsigned long long u = std::stoull(v, &pos);
        if (trim(v.substr(pos)).empty() && v.find('-') == std::string::npos)
            return u;
    } catch (const std::exception&) {
    }
    throw config_error("[" + s.name + "] bad integer for " + key + ": " + v);
}

uint64_t cfg_u64_or(const ConfigSection& s, const std::string& key,
                    uint64_t dflt) {
    return s.kv.count(key) ? cfg_u64(s, key) : dflt;
}

bool cfg_bool_or(const ConfigSection& s, const std::string& key, bool dflt) {
    auto it = s.kv.find(key);
    if (it == s.kv.end()) return dflt;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw config_error("[" + s.name + "] bad flag for " + key + ": " + v);
}

DatasetSpec dataset_spec_from(const ConfigSection& s) {
    DatasetSpec d;
    d.source = dataset_source_from_name(cfg_str(s, "source"));
    d.n = cfg_u64_or(s, "n", 0);
    d.seed = cfg_u64_or(s, "seed", 0);
    d.path = cfg_str_or(s, "path", "");
    if (d.source == DatasetSource::file && d.path.empty())
        throw config_error("file dataset needs a path");
    return d;
}

WorkloadSpec workload_spec_from(const ConfigSection& s) {
    WorkloadSpec w;
    w.kind = workload_kind_from_name(cfg_str(s, "kind"));
    w.count = cfg_u64(s, "count");
    w.edge_frac = cfg_num_or(s, "edge_frac", 0.001);
    w.aspect_ratio = cfg_num_or(s, "aspect_ratio", 1.0);
    w.k = static_cast<uint32_t>(cfg_u64_or(s, "k", 25));
    w.eps = cfg_num_or(s, "eps", 0.0);
    w.seed = cfg_u64_or(s, "seed", 0);
    return w;
}

TuneGrid tune_grid_from(const ConfigFile& f) {
    TuneGrid g;
    g.t_build = cfg_num(f.at("tune"), "t_build");
    for (const ConfigSection& s : f.sections) {
        if (s.name.rfind("param ", 0) != 0) continue;
        TuneParam p;
        p.name = trim(s.name.substr(6));
        if (p.name.empty()) throw config_error("param section needs a name");
        p.values = parse_doubles(cfg_str(s, "values"));
        if (p.values.empty())
            throw config_error("param " + p.name + " has no values");
        p.cost_increasing = cfg_bool_or(s, "cost_increasing", false);
        g.params.push_back(std::move(p));
    }
    return g;
}

IndexConfigFile index_config_from(const ConfigFile& f) {
    const ConfigSection& s = f.at("index");
    IndexConfigFile out;
    out.cfg.name = cfg_str(s, "name");
    out.cfg.fill_ratio = cfg_num_or(s, "fill_ratio", 0.4);
    out.cfg.bits = static_cast<uint32_t>(cfg_u64_or(s, "bits", 0));
    out.cfg.grid = static_cast<uint32_t>(cfg_u64_or(s, "grid", 0));
    out.cfg.models = static_cast<uint32_t>(cfg_u64_or(s, "models", 0));
    std::string p = cfg_str_or(s, "policy", "");
    if (!p.empty()) out.cfg.policy = PolicyModel::load(p);
    p = cfg_str_or(s, "selector", "");
    if (!p.empty()) out.cfg.selector = QdSelector::load(p);
    p = cfg_str_or(s, "curve", "");
    if (!p.empty()) out.cfg.curve = bmtree_load(p);
    if (f.has("training_queries")) {
        out.training_workload = workload_spec_from(f.at("training_queries"));
        if (out.training_workload.kind != WorkloadKind::range)
            throw config_error("training_queries must be a range workload");
        out.has_training_workload = true;
    }
    if (f.has("train")) {
        const ConfigSection& t = f.at("train");
        out.train.sample = cfg_u64_or(t, "sample", out.train.sample);
        out.train.epochs =
            static_cast<uint32_t>(cfg_u64_or(t, "epochs", out.train.epochs));
        out.train.height =
            static_cast<uint32_t>(cfg_u64_or(t, "height", out.train.height));
        out.train.rollout_depth = static_cast<uint32_t>(
            cfg_u64_or(t, "rollout_depth", out.train.rollout_depth));
        out.train.seed = cfg_u64_or(t, "seed", out.train.seed);
        out.has_train = true;
    }
    return out;
}

}  // namespace sbench
