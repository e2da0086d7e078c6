#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sbench/geometry.hpp"

namespace sbench {

enum class DatasetSource { uniform, normal, skewed, file };

std::string dataset_source_name(DatasetSource s);
DatasetSource dataset_source_from_name(const std::string& name);

struct DatasetSpec {
    DatasetSource source = DatasetSource::uniform;
    uint64_t n = 0;    // file source: 0 means the whole file
    uint64_t seed = 0;
    std::string path;  // file source only
};

// Synthetic distributions over [0,1]^2, or CSV ingestion ("x,y" per line,
// ids assigned by line number). Deterministic in (spec, seed).
std::vector<Point> gen_dataset(const DatasetSpec& spec);

void dataset_save_csv(const std::string& path, const std::vector<Point>& pts);

}  // namespace sbench
