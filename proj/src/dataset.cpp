#include "sbench/dataset.hpp"

#include <fstream>
#include <sstream>

#include "sbench/errors.hpp"
#include "sbench/rng.hpp"
#include "sbench/text.hpp"

namespace sbench {

std::string dataset_source_name(DatasetSource s) {
    switch (s) {
        case DatasetSource::uniform: return "uniform";
        case DatasetSource::normal: return "normal";
        case DatasetSource::skewed: return "skewed";
        case DatasetSource::file: return "file";
    }
    throw config_error("bad dataset source");
}

DatasetSource dataset_source_from_name(const std::string& name) {
    if (name == "uniform") return DatasetSource::uniform;
    if (name == "normal") return DatasetSource::normal;
    if (name == "skewed") return DatasetSource::skewed;
    if (name == "file") return DatasetSource::file;
    throw config_error("unknown dataset source: " + name);
}

namespace {

std::vector<Point> load_csv(const std::string& path, uint64_t cap) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open dataset file: " + path);
    std::vector<Point> pts;
    std::string line;
    uint64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        double x, y;
        char sep;
        std::istringstream is(line);
        if (!(is >> x >> sep >> y) || sep != ',')
            throw io_error(path + " line " + std::to_string(lineno) +
                           ": expected x,y");
        pts.push_back({x, y, pts.size()});
        if (cap && pts.size() == cap) break;
    }
    if (cap && pts.size() < cap)
        throw io_error(path + ": holds " + std::to_string(pts.size()) +
                       " points, requested " + std::to_string(cap));
    if (pts.empty()) throw io_error(path + ": empty dataset");
    return pts;
}

}  // namespace

std::vector<Point> gen_dataset(const DatasetSpec& spec) {
    if (spec.source == DatasetSource::file) return load_csv(spec.path, spec.n);
    if (spec.n < 1) throw config_error("dataset size must be at least 1");
    Rng rng(spec.seed);
    std::vector<Point> pts;
    pts.reserve(spec.n);
    for (uint64_t i = 0; i < spec.n; ++i) {
        double x = 0, y = 0;
        switch (spec.source) {
            case DatasetSource::uniform:
                x = rng.uniform01();
                y = rng.uniform01();
                break;
            case DatasetSource::normal:
                do {
                    x = 0.5 + 0.125 * rng.normal01();
                    y = 0.5 + 0.125 * rng.normal01();
                } while (x < 0 || x > 1 || y < 0 || y > 1);
                break;
            case DatasetSource::skewed: {
                double u = rng.uniform01(), v = rng.uniform01();
                x = u * u * u * u;
                y = v * v * v * v;
                break;
            }
            case DatasetSource::file: break;
        }
        pts.push_back({x, y, i});
    }
    return pts;
}

void dataset_save_csv(const std::string& path, const std::vector<Point>& pts) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write dataset file: " + path);
    for (const Point& p : pts)
        out << fmt_g17(p.x) << ',' << fmt_g17(p.y) << '\n';
    out.flush();
    if (!out) throw io_error("write failed: " + path);
}

}  // namespace sbench
