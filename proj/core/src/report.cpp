// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#include "posereg/report.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <json.hpp>

#include "posereg/errors.hpp"
#include "posereg/pose_math.hpp"

namespace posereg {

using nlohmann::json;

namespace {

MedianErrors row_medians(const std::vector<EvalRow>& rows) {
  std::vector<ErrorPair> pairs;
  pairs.reserve(rows.size());
  for (const auto& r : rows) pairs.push_back({r.pos_err, r.ori_err});
  return median_errors(pairs);
}

}  // namespace

EvalReport make_report(std::string scene, std::string split, std::string head,
                       std::string config_hash, std::vector<EvalRow> rows) {
  EvalReport r{std::move(scene), std::move(split), std::move(head), std::move(config_hash),
               std::move(rows)};
  const MedianErrors m = row_medians(r.rows);
  r.med_pos = m.pos;
  r.med_ori = m.ori;
  return r;
}

void check_consistency(const EvalReport& report) {
  const MedianErrors m = row_medians(report.rows);
  if (m.pos != report.med_pos || m.ori != report.med_ori) {
    throw DataError(fmt::format("report medians ({}, {}) differ from rows ({}, {})",
                                report.med_pos, report.med_ori, m.pos, m.ori));
  }
}

std::string report_to_json(const EvalReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"id", r.id}, {"pos_err_m", r.pos_err}, {"ori_err_deg", r.ori_err}});
  }
  json j = {{"scene", report.scene},
            {"split", report.split},
            {"head", report.head},
            {"config_hash", report.config_hash},
            {"n", report.count()},
            {"med_pos_m", report.med_pos},
            {"med_ori_deg", report.med_ori},
            {"rows", rows}};
  return j.dump(2) + "\n";
}

EvalReport report_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    EvalReport r;
    r.scene = j.at("scene").get<std::string>();
    r.split = j.at("split").get<std::string>();
    r.head = j.value("head", std::string());
    r.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& row : j.at("rows")) {
      r.rows.push_back({row.at("id").get<std::string>(), row.at("pos_err_m").get<double>(),
                        row.at("ori_err_deg").get<double>()});
    }
    r.med_pos = j.at("med_pos_m").get<double>();
    r.med_ori = j.at("med_ori_deg").get<double>();
    if (j.at("n").get<std::size_t>() != r.rows.size()) {
      throw DataError("report: sample count does not match rows");
    }
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("report is not valid: ") + e.what());
  }
}

void save_report(const std::filesystem::path& path, const EvalReport& report) {
  check_consistency(report);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write report " + path.string());
  out << report_to_json(report);
}

EvalReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open report " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return report_from_json(text);
}

std::string summary_csv(std::span<const EvalReport> reports) {
  // fmt's "{}" and the JSON writer both emit the shortest round-trip form.
  std::string out = "scene,n,med_pos_m,med_ori_deg,config_hash\n";
  for (const auto& r : reports) {
    out += fmt::format("{},{},{},{},{}\n", r.scene, r.count(), r.med_pos, r.med_ori,
                       r.config_hash);
  }
  return out;
}

std::string summary_json(std::span<const EvalReport> reports) {
  json arr = json::array();
  for (const auto& r : reports) {
    arr.push_back({{"scene", r.scene},
                   {"n", r.count()},
                   {"med_pos_m", r.med_pos},
                   {"med_ori_deg", r.med_ori},
                   {"config_hash", r.config_hash}});
  }
  return arr.dump(2) + "\n";
}

Histogram histogram(std::span<const double> values, std::size_t bins) {
  if (bins == 0) throw UsageError("histogram: need at least one bin");
  Histogram h;
  const double top = values.empty() ? 1.0 : std::max(*std::max_element(values.begin(), values.end()), 1e-12);
  const double width = top / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) h.edges.push_back(width * static_cast<double>(i));
  h.counts.assign(bins, 0);
  for (double v : values) {
    auto bin = static_cast<std::size_t>(std::max(0.0, v) / width);
    h.counts[std::min(bin, bins - 1)]++;
  }
  return h;
}

std::string error_histogram_svg(const EvalReport& report, std::size_t bins) {
  std::vector<double> pos;
  for (const auto& r : report.rows) pos.push_back(r.pos_err);
  const Histogram h = histogram(pos, bins);
  const std::size_t peak = std::max<std::size_t>(1, *std::max_element(h.counts.begin(), h.counts.end()));
  constexpr double kW = 640, kH = 320, kMargin = 40;
  const double bar_w = (kW - 2 * kMargin) / static_cast<double>(bins);
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\">\n"
      "<title>{} {}: position error histogram (n={}, median {:.3f} m)</title>\n"
      "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
      kW, kH, kW, kH, report.scene, report.split, report.count(), report.med_pos, kMargin,
      kH - kMargin, kW - kMargin, kH - kMargin);
  for (std::size_t i = 0; i < bins; ++i) {
    const double bh = (kH - 2 * kMargin) * static_cast<double>(h.counts[i]) / static_cast<double>(peak);
    svg += fmt::format(
        "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"steelblue\" "
        "data-count=\"{}\"/>\n",
        kMargin + bar_w * static_cast<double>(i), kH - kMargin - bh, bar_w * 0.9, bh, h.counts[i]);
  }
  svg += fmt::format(
      "<text x=\"{}\" y=\"{}\" font-size=\"12\">0 m</text>\n"
      "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{:.3f} m</text>\n</svg>\n",
      kMargin, kH - kMargin / 3, kW - kMargin, kH - kMargin / 3, h.edges.back());
  return svg;
}

}  // namespace posereg
