// SPDX-License-Identifier: Apache-2.0
#include "premov/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include "premov/dataio.hpp"
#include "premov/error.hpp"

namespace premov::harness {

using nlohmann::ordered_json;

namespace {

constexpr int kLags[5] = {150, 200, 250, 300, 350};

// Rows x, y, z; per lag the mLR, MLP and CNN-LSTM columns.
std::vector<ReferenceCell> expand(const double (&rows)[3][15]) {
  std::vector<ReferenceCell> out;
  const ModelKind models[3] = {ModelKind::Mlr, ModelKind::Mlp, ModelKind::CnnLstm};
  for (int axis = 0; axis < 3; ++axis)
    for (int li = 0; li < 5; ++li)
      for (int mi = 0; mi < 3; ++mi) out.push_back({models[mi], kLags[li], axis, rows[axis][li * 3 + mi]});
  return out;
}

std::string format_r(double r) { return std::isfinite(r) ? dataio::format_double(r) : "nan"; }

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

char axis_name(int axis) { return "xyz"[axis]; }

std::vector<PccEntry> PccReport::entries() const {
  std::vector<PccEntry> out;
  for (const auto& c : cells)
    for (int a = 0; a < 3; ++a) out.push_back({c.participant, c.model, c.lag_ms, a, c.r[a]});
  return out;
}

std::vector<AggregateEntry> aggregate(const std::vector<CellResult>& cells) {
  std::map<std::tuple<int, int, int>, std::vector<double>> groups;
  for (const auto& c : cells)
    for (int a = 0; a < 3; ++a) {
      auto& g = groups[{static_cast<int>(c.model), c.lag_ms, a}];
      if (std::isfinite(c.r[a])) g.push_back(c.r[a]);
    }
  std::vector<AggregateEntry> out;
  for (const auto& [key, values] : groups) {
    AggregateEntry e;
    e.model = static_cast<ModelKind>(std::get<0>(key));
    e.lag_ms = std::get<1>(key);
    e.axis = std::get<2>(key);
    e.count = values.size();
    if (values.empty()) {
      e.mean = e.std = std::numeric_limits<double>::quiet_NaN();
    } else {
      double sum = 0.0;
      for (double v : values) sum += v;
      e.mean = sum / static_cast<double>(values.size());
      double ss = 0.0;
      for (double v : values) ss += (v - e.mean) * (v - e.mean);
      e.std = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
    }
    out.push_back(e);
  }
  return out;
}

PccReport make_report(std::vector<CellResult> cells) {
  PccReport r;
  r.aggregates = aggregate(cells);
  r.cells = std::move(cells);
  return r;
}

std::string report_csv(const PccReport& report) {
  std::ostringstream out;
  out << "participant,model,lag_ms,axis,r\n";
  for (const auto& e : report.entries())
    out << e.participant << ',' << to_string(e.model) << ',' << e.lag_ms << ',' << axis_name(e.axis) << ','
        << format_r(e.r) << '\n';
  return out.str();
}

ordered_json report_json(const PccReport& report, const ordered_json& config) {
  ordered_json j;
  j["config"] = config;
  auto& cells = j["cells"] = ordered_json::array();
  for (const auto& c : report.cells) {
    ordered_json cj;
    cj["participant"] = c.participant;
    cj["model"] = to_string(c.model);
    cj["lag_ms"] = c.lag_ms;
    cj["seed"] = c.seed;
    cj["r"] = {{"x", number_or_null(c.r[0])}, {"y", number_or_null(c.r[1])}, {"z", number_or_null(c.r[2])}};
    cj["epochs_run"] = c.epochs_run;
    cj["mlr_lambda"] = c.mlr_lambda;
    cj["parameter_count"] = c.parameter_count;
    cj["test_trials"] = c.test_trials;
    cj["error"] = c.error.empty() ? nlohmann::json(nullptr) : nlohmann::json(c.error);
    cells.push_back(std::move(cj));
  }
  auto& agg = j["aggregates"] = ordered_json::array();
  for (const auto& a : report.aggregates)
    agg.push_back({{"model", to_string(a.model)},
                   {"lag_ms", a.lag_ms},
                   {"axis", std::string(1, axis_name(a.axis))},
                   {"mean", number_or_null(a.mean)},
                   {"std", number_or_null(a.std)},
                   {"participants", a.count}});
  return j;
}

PccReport report_from_json(const nlohmann::json& j) {
  try {
    std::vector<CellResult> cells;
    for (const auto& cj : j.at("cells")) {
      CellResult c;
      c.participant = cj.at("participant").get<std::string>();
      c.model = model_kind_from_string(cj.at("model").get<std::string>());
      c.lag_ms = cj.at("lag_ms").get<int>();
      c.seed = cj.at("seed").get<std::uint64_t>();
      for (int a = 0; a < 3; ++a) {
        const auto& v = cj.at("r").at(std::string(1, axis_name(a)));
        c.r[a] = v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
      }
      c.epochs_run = cj.value("epochs_run", 0);
      c.mlr_lambda = cj.value("mlr_lambda", 0.0);
      c.parameter_count = cj.value("parameter_count", std::size_t{0});
      c.test_trials = cj.value("test_trials", std::size_t{0});
      if (cj.contains("error") && !cj.at("error").is_null()) c.error = cj.at("error").get<std::string>();
      cells.push_back(std::move(c));
    }
    return make_report(std::move(cells));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptBundle, std::string("bad report: ") + e.what());
  }
}

const std::vector<ReferenceCell>& published_average() {
  static const double rows[3][15] = {
      {0.5072, 0.7336, 0.7644, 0.4974, 0.7310, 0.7618, 0.5010, 0.7534, 0.7908, 0.5006, 0.7500, 0.7711, 0.5051, 0.7610,
       0.7706},
      {0.5184, 0.7426, 0.7733, 0.5088, 0.7409, 0.7724, 0.5122, 0.7605, 0.7990, 0.5113, 0.7614, 0.7762, 0.5162, 0.7692,
       0.7784},
      {0.3805, 0.5778, 0.5575, 0.3745, 0.5907, 0.5822, 0.3834, 0.6056, 0.6005, 0.3724, 0.6163, 0.5983, 0.3668, 0.6206,
       0.6193},
  };
  static const std::vector<ReferenceCell> table = expand(rows);
  return table;
}

const std::vector<ReferenceCell>& published_participant1() {
  static const double rows[3][15] = {
      {0.6692, 0.7249, 0.7350, 0.6537, 0.7335, 0.7397, 0.6542, 0.8035, 0.8131, 0.6410, 0.7729, 0.7926, 0.6396, 0.7955,
       0.7777},
      {0.6621, 0.7122, 0.7284, 0.6470, 0.7198, 0.7336, 0.6462, 0.7930, 0.8008, 0.6350, 0.7639, 0.7893, 0.6335, 0.7767,
       0.7596},
      {0.4453, 0.6134, 0.5948, 0.4438, 0.6506, 0.6671, 0.4349, 0.7116, 0.7164, 0.4360, 0.6921, 0.7186, 0.3984, 0.6949,
       0.7045},
  };
  static const std::vector<ReferenceCell> table = expand(rows);
  return table;
}

std::optional<double> published_lookup(const std::vector<ReferenceCell>& table, ModelKind model, int lag_ms,
                                       int axis) {
  for (const auto& c : table)
    if (c.model == model && c.lag_ms == lag_ms && c.axis == axis) return c.r;
  return std::nullopt;
}

std::string comparison_table(const PccReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %6s %4s %9s %9s %4s %10s %8s\n", "model", "lag_ms", "axis", "mean", "std",
                "n", "published", "delta");
  out << line;
  for (const auto& a : report.aggregates) {
    const auto ref = published_lookup(published_average(), a.model, a.lag_ms, a.axis);
    char ref_text[16] = "-", delta_text[16] = "-";
    if (ref) {
      std::snprintf(ref_text, sizeof ref_text, "%.4f", *ref);
      std::snprintf(delta_text, sizeof delta_text, "%+.4f", a.mean - *ref);
    }
    std::snprintf(line, sizeof line, "%-8s %6d %4c %9.4f %9.4f %4zu %10s %8s\n", to_string(a.model).c_str(), a.lag_ms,
                  axis_name(a.axis), a.mean, a.std, a.count, ref_text, delta_text);
    out << line;
  }
  return out.str();
}

}  // namespace premov::harness
