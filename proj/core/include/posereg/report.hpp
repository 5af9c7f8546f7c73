// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace posereg {

struct EvalRow {
  std::string id;
  double pos_err = 0.0;  // meters
  double ori_err = 0.0;  // degrees

  friend bool operator==(const EvalRow&, const EvalRow&) = default;
};

/// Per-sample localization errors plus their medians.
struct EvalReport {
  std::string scene;
  std::string split;
  std::string head;
  std::string config_hash;
  std::vector<EvalRow> rows;
  double med_pos = 0.0;
  double med_ori = 0.0;

  std::size_t count() const noexcept { return rows.size(); }

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Fills the medians from the rows. Throws UsageError for an empty row list.
EvalReport make_report(std::string scene, std::string split, std::string head,
                       std::string config_hash, std::vector<EvalRow> rows);

/// Throws DataError unless the stored medians equal a recomputation.
void check_consistency(const EvalReport& report);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(std::string_view text);
/// Writes after a consistency check.
void save_report(const std::filesystem::path& path, const EvalReport& report);
EvalReport load_report(const std::filesystem::path& path);

/// Summary table, columns: scene,n,med_pos_m,med_ori_deg,config_hash.
std::string summary_csv(std::span<const EvalReport> reports);
std::string summary_json(std::span<const EvalReport> reports);

struct Histogram {
  std::vector<double> edges;       // bins + 1 edges
  std::vector<std::size_t> counts;  // bins
};

/// Equal-width bins over [0, max(values)]; the last bin is closed.
Histogram histogram(std::span<const double> values, std::size_t bins);

/// Standalone SVG bar chart of the position-error histogram.
std::string error_histogram_svg(const EvalReport& report, std::size_t bins = 20);

}  // namespace posereg
