#include "topiclab/report_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace topiclab::io {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_matrix_csv(const Matrix& m, const std::string& path,
                      const std::string& column_prefix) {
  std::ostringstream out;
  for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << column_prefix << j;
  out << "\n";
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << "\n";
  }
  atomic_write_text(path, out.str());
}

Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open matrix csv: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("matrix csv is empty: " + path);
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r,") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        row.push_back(v);
      } catch (const std::exception&) {
        throw IoError("matrix csv " + path + " line " + std::to_string(line_no) +
                      ": cannot parse cell '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError("matrix csv " + path + " line " + std::to_string(line_no) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("matrix csv has no data rows: " + path);
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return m;
}

void atomic_write_text(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + tmp);
    out << content;
    if (!out) throw IoError("short write to: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// SHA-256 (FIPS 180-4), used for manifest checksums.

namespace {

struct Sha256 {
  std::array<std::uint32_t, 8> h{0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
                                 0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
  std::array<std::uint8_t, 64> block{};
  std::size_t block_len = 0;
  std::uint64_t total_bits = 0;

  static std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

  void compress(const std::uint8_t* p) {
    static constexpr std::array<std::uint32_t, 64> k = {
        0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
        0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
        0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
        0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
        0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
        0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
        0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
        0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
        0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
        0xc67178f2};
    std::array<std::uint32_t, 64> w;
    for (int i = 0; i < 16; ++i)
      w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
             (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
    for (int i = 16; i < 64; ++i) {
      const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
      const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
      w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    auto a = h;
    for (int i = 0; i < 64; ++i) {
      const std::uint32_t s1 = rotr(a[4], 6) ^ rotr(a[4], 11) ^ rotr(a[4], 25);
      const std::uint32_t ch = (a[4] & a[5]) ^ (~a[4] & a[6]);
      const std::uint32_t t1 = a[7] + s1 + ch + k[i] + w[i];
      const std::uint32_t s0 = rotr(a[0], 2) ^ rotr(a[0], 13) ^ rotr(a[0], 22);
      const std::uint32_t maj = (a[0] & a[1]) ^ (a[0] & a[2]) ^ (a[1] & a[2]);
      const std::uint32_t t2 = s0 + maj;
      a[7] = a[6];
      a[6] = a[5];
      a[5] = a[4];
      a[4] = a[3] + t1;
      a[3] = a[2];
      a[2] = a[1];
      a[1] = a[0];
      a[0] = t1 + t2;
    }
    for (int i = 0; i < 8; ++i) h[i] += a[i];
  }

  void update(const void* data, std::size_t len) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    total_bits += std::uint64_t(len) * 8;
    while (len > 0) {
      const std::size_t take = std::min(len, block.size() - block_len);
      std::memcpy(block.data() + block_len, p, take);
      block_len += take;
      p += take;
      len -= take;
      if (block_len == block.size()) {
        compress(block.data());
        block_len = 0;
      }
    }
  }

  std::string hex_digest() {
    block[block_len++] = 0x80;
    if (block_len > 56) {
      std::fill(block.begin() + static_cast<long>(block_len), block.end(), 0);
      compress(block.data());
      block_len = 0;
    }
    std::fill(block.begin() + static_cast<long>(block_len), block.end(), 0);
    for (int i = 0; i < 8; ++i)
      block[56 + i] = static_cast<std::uint8_t>(total_bits >> (56 - 8 * i));
    compress(block.data());
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (std::uint32_t word : h)
      for (int i = 28; i >= 0; i -= 4) out.push_back(digits[(word >> i) & 0xf]);
    return out;
  }
};

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  Sha256 s;
  s.update(bytes.data(), bytes.size());
  return s.hex_digest();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file for hashing: " + path);
  Sha256 s;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    s.update(buf, static_cast<std::size_t>(in.gcount()));
  return s.hex_digest();
}

// ---------------------------------------------------------------------------

json to_json(const FitReport& report) {
  json j;
  j["converged"] = report.converged;
  j["iters_used"] = report.iters_used;
  j["restart_index_selected"] = report.restart_index_selected;
  j["seed"] = report.seed;
  j["smoothing_events"] = report.smoothing_events;
  j["final_loglik"] = report.loglik_trace.empty() ? 0.0 : report.loglik_trace.back();
  j["loglik_trace"] = report.loglik_trace;
  return j;
}

json to_json(const scatter::ScatterVerdict& verdict) {
  json j;
  j["condition"] =
      verdict.condition == scatter::ScatterVerdict::Condition::SS ? "SS" : "AlphaBetaSS";
  if (verdict.condition == scatter::ScatterVerdict::Condition::AlphaBetaSS) {
    j["alpha"] = verdict.alpha;
    j["beta"] = verdict.beta;
  }
  j["samples_used"] = verdict.samples_used;
  j["failures"] = verdict.failures;
  j["failure_fraction"] = verdict.failure_fraction;
  j["tolerance"] = verdict.tolerance;
  j["falsified"] = verdict.falsified();
  json witnesses = json::array();
  for (const auto& w : verdict.witnesses) {
    json point = json::array();
    for (Index i = 0; i < w.size(); ++i) point.push_back(w[i]);
    witnesses.push_back(point);
  }
  j["witnesses"] = witnesses;
  return j;
}

json to_json(const evaluation::MetricReport& report) {
  json j;
  j["name"] = report.name;
  j["value"] = report.value;
  j["params"] = json::object();
  for (const auto& [key, val] : report.params) j["params"][key] = val;
  if (!report.details.empty()) j["details"] = report.details;
  return j;
}

json to_json(const evaluation::SpectrumReport& report) {
  json j;
  j["singular_values"] = report.singular_values;
  j["gap_ratios"] = json::array();
  for (double r : report.gap_ratios) {
    if (std::isinf(r))
      j["gap_ratios"].push_back("inf");
    else
      j["gap_ratios"].push_back(r);
  }
  if (report.suggested_k)
    j["suggested_k"] = *report.suggested_k;
  else
    j["suggested_k"] = nullptr;
  return j;
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
  json j;
  j["tool"] = "topiclab";
  j["version"] = "0.1.0";
  j["command"] = manifest.command;
  j["args"] = manifest.resolved_args;
  j["seed"] = manifest.seed;
  j["inputs"] = json::array();
  for (const auto& [p, h] : manifest.inputs) j["inputs"].push_back({{"path", p}, {"sha256", h}});
  j["outputs"] = json::array();
  for (const auto& [p, h] : manifest.outputs) j["outputs"].push_back({{"path", p}, {"sha256", h}});
  j["duration_seconds"] = manifest.duration_seconds;
  atomic_write_text(path, j.dump(2) + "\n");
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw IoError("manifest parse error in " + path + ": " + e.what());
  }
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.resolved_args = j.at("args");
  m.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& item : j.at("inputs"))
    m.inputs.emplace_back(item.at("path").get<std::string>(), item.at("sha256").get<std::string>());
  for (const auto& item : j.at("outputs"))
    m.outputs.emplace_back(item.at("path").get<std::string>(), item.at("sha256").get<std::string>());
  m.duration_seconds = j.value("duration_seconds", 0.0);
  return m;
}

}  // namespace topiclab::io
