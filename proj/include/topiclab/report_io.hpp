#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "topiclab/estimator.hpp"
#include "topiclab/evaluation.hpp"
#include "topiclab/scatter.hpp"
#include "topiclab/types.hpp"

namespace topiclab::io {

using json = nlohmann::ordered_json;

// Matrix CSV: one header row naming the columns, then numeric rows with
// full round-trip precision. Topic matrices are written V rows x k columns.
void write_matrix_csv(const Matrix& m, const std::string& path,
                      const std::string& column_prefix);
Matrix read_matrix_csv(const std::string& path);

// Writes to <path>.tmp then renames, so readers never see partial files.
void atomic_write_text(const std::string& path, const std::string& content);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

json to_json(const FitReport& report);
json to_json(const scatter::ScatterVerdict& verdict);
json to_json(const evaluation::MetricReport& report);
json to_json(const evaluation::SpectrumReport& report);

struct RunManifest {
  std::string command;
  json resolved_args;  // every option materialized, including defaults
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;   // (path, sha256)
  std::vector<std::pair<std::string, std::string>> outputs;  // (path, sha256)
  double duration_seconds = 0.0;
};

void write_manifest(const RunManifest& manifest, const std::string& path);
RunManifest read_manifest(const std::string& path);

}  // namespace topiclab::io
