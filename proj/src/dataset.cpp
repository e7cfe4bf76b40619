#include "rascore/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace rascore {

std::string to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "?";
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "validation") return Split::validation;
    if (s == "test") return Split::test;
    throw ValidationError("unknown split token '" + s + "'");
}

std::vector<const ImageRecord*> Manifest::split_records(Split split) const {
    std::vector<const ImageRecord*> out;
    for (const ImageRecord& r : records) {
        if (r.split == split) out.push_back(&r);
    }
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

[[noreturn]] void row_error(const std::string& path, std::size_t row, const std::string& what) {
    std::ostringstream msg;
    msg << path << ": row " << row << ": " << what;
    throw IoError(msg.str());
}

}  // namespace

Manifest load_manifest(const std::string& path, Task task) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path);

    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty manifest");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "id,image_path,target,split") {
        throw IoError(path + ": header must be exactly 'id,image_path,target,split', got '" + line +
                      "'");
    }

    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    Manifest manifest;
    manifest.task = task;
    std::set<std::string> ids;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 4) row_error(path, row, "expected 4 columns, got " + std::to_string(fields.size()));

        ImageRecord record;
        record.id = fields[0];
        if (record.id.empty()) row_error(path, row, "empty id");
        if (!ids.insert(record.id).second) row_error(path, row, "duplicate id '" + record.id + "'");

        std::filesystem::path image = fields[1];
        if (image.is_relative()) image = base / image;
        record.image_path = image.string();
        if (!std::filesystem::is_regular_file(image)) {
            row_error(path, row, "image path not readable: " + record.image_path);
        }

        try {
            std::size_t consumed = 0;
            record.target = std::stod(fields[2], &consumed);
            if (consumed != fields[2].size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            row_error(path, row, "target '" + fields[2] + "' is not a number");
        }
        if (!std::isfinite(record.target)) row_error(path, row, "target must be finite");

        try {
            record.split = split_from_string(fields[3]);
        } catch (const ValidationError& e) {
            row_error(path, row, e.what());
        }
        manifest.records.push_back(std::move(record));
    }

    double sum = 0.0, sq = 0.0;
    std::size_t train_count = 0;
    for (const ImageRecord& r : manifest.records) {
        if (r.split != Split::train) continue;
        sum += r.target;
        sq += r.target * r.target;
        ++train_count;
    }
    if (train_count == 0) throw IoError(path + ": no training rows");
    const double mean = sum / static_cast<double>(train_count);
    double var = sq / static_cast<double>(train_count) - mean * mean;
    if (var < 0.0) var = 0.0;
    manifest.target_stats = {mean, std::sqrt(var)};
    return manifest;
}

double standardize_target(double y, const Stats& stats) {
    if (stats.sd <= 0.0) throw ConfigError("standardization requires sd > 0");
    return (y - stats.mean) / stats.sd;
}

double destandardize_target(double z, const Stats& stats) {
    if (stats.sd <= 0.0) throw ConfigError("standardization requires sd > 0");
    return z * stats.sd + stats.mean;
}

}  // namespace rascore
