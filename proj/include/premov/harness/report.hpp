// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "premov/harness/experiment.hpp"

namespace premov::harness {

struct PccEntry {
  std::string participant;
  ModelKind model = ModelKind::Mlr;
  int lag_ms = 0;
  int axis = 0;
  double r = 0.0;
};

/// Mean and sample standard deviation (n-1; 0 for a single participant) of the
/// finite r values of one (model, lag, axis).
struct AggregateEntry {
  ModelKind model = ModelKind::Mlr;
  int lag_ms = 0;
  int axis = 0;
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
};

struct PccReport {
  std::vector<CellResult> cells;
  std::vector<AggregateEntry> aggregates;

  std::vector<PccEntry> entries() const;
};

PccReport make_report(std::vector<CellResult> cells);

std::vector<AggregateEntry> aggregate(const std::vector<CellResult>& cells);

/// "participant,model,lag_ms,axis,r", one line per entry, cells in run order.
std::string report_csv(const PccReport& report);

nlohmann::ordered_json report_json(const PccReport& report, const nlohmann::ordered_json& config);
PccReport report_from_json(const nlohmann::json& j);

/// Published cross-participant averages, and the participant-1 row, per (model, lag, axis).
struct ReferenceCell {
  ModelKind model;
  int lag_ms;
  int axis;
  double r;
};
const std::vector<ReferenceCell>& published_average();
const std::vector<ReferenceCell>& published_participant1();
std::optional<double> published_lookup(const std::vector<ReferenceCell>& table, ModelKind model, int lag_ms,
                                       int axis);

/// Plain-text table of mean ± std per (model, lag, axis) next to the published averages.
std::string comparison_table(const PccReport& report);

char axis_name(int axis);

}  // namespace premov::harness
