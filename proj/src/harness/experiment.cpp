// SPDX-License-Identifier: Apache-2.0
#include "premov/harness/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <omp.h>

#include "premov/error.hpp"
#include "premov/random.hpp"

namespace premov::harness {

using epoching::TrialTensorPair;
using nlohmann::ordered_json;

namespace {

std::vector<int> ids_of(const std::vector<TrialTensorPair>& pairs) {
  std::vector<int> ids;
  for (const auto& p : pairs) ids.push_back(p.trial_id);
  return ids;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void round_to_float32(gradkit::Sequential& model) {
  auto state = model.state();
  for (auto& t : state)
    for (auto& v : t.values) v = static_cast<double>(static_cast<float>(v));
  model.load_state(state);
}

std::string cell_dir_name(const CellResult& r) { return to_string(r.model) + "_" + std::to_string(r.lag_ms) + "ms"; }

void write_json(const std::filesystem::path& file, const ordered_json& j) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + file.string());
  out << j.dump(2) << "\n";
}

nlohmann::json read_json(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(Errc::MissingComponent, file.string() + " not found");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::CorruptModel, file.string() + ": " + e.what());
  }
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Mlr: return "mlr";
    case ModelKind::Mlp: return "mlp";
    case ModelKind::CnnLstm: return "cnnlstm";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "mlr") return ModelKind::Mlr;
  if (name == "mlp" || name == "premovnet1") return ModelKind::Mlp;
  if (name == "cnnlstm" || name == "premovnet2") return ModelKind::CnnLstm;
  throw Error(Errc::ConfigError, "unknown model '" + name + "' (expected mlr, mlp or cnnlstm)");
}

decoders::NetKind net_kind(ModelKind kind) {
  if (kind == ModelKind::Mlr) throw Error(Errc::ConfigError, "mlr is not a network");
  return kind == ModelKind::Mlp ? decoders::NetKind::PreMovNetI : decoders::NetKind::PreMovNetII;
}

ordered_json to_json(const NormalizationStats& s) {
  ordered_json j;
  j["fit_on_all"] = s.fit_on_all;
  auto& eeg = j["eeg"] = ordered_json::array();
  for (const auto& c : s.eeg) eeg.push_back({{"mean", c.mean}, {"std", c.std}});
  auto& kin = j["kinematics"] = ordered_json::array();
  for (const auto& r : s.kinematics) kin.push_back({{"min", r.min}, {"max", r.max}});
  return j;
}

NormalizationStats normalization_from_json(const nlohmann::json& j) {
  NormalizationStats s;
  s.fit_on_all = j.at("fit_on_all").get<bool>();
  for (const auto& c : j.at("eeg")) s.eeg.push_back({c.at("mean").get<double>(), c.at("std").get<double>()});
  const auto& kin = j.at("kinematics");
  if (kin.size() != 3) throw Error(Errc::CorruptModel, "kinematics statistics need three axes");
  for (std::size_t a = 0; a < 3; ++a) s.kinematics[a] = {kin[a].at("min").get<double>(), kin[a].at("max").get<double>()};
  return s;
}

void normalize_pairs(std::vector<TrialTensorPair>& pairs, const NormalizationStats& stats) {
  for (auto& p : pairs) {
    const std::size_t lags = p.design.lag_count;
    if (p.design.channel_count != stats.eeg.size())
      throw Error(Errc::ShapeError, "statistics cover " + std::to_string(stats.eeg.size()) + " channels, design has " +
                                        std::to_string(p.design.channel_count));
    for (std::size_t r = 0; r < p.design.rows(); ++r) {
      auto row = p.design.values.row(r);
      for (std::size_t n = 0; n < stats.eeg.size(); ++n)
        for (std::size_t l = 0; l < lags; ++l)
          row[n * lags + l] = (row[n * lags + l] - stats.eeg[n].mean) / stats.eeg[n].std;
    }
    p.target = sigproc::minmax_apply(p.target, stats.kinematics);
  }
}

PreparedData prepare_participant(const dataio::ParticipantBundle& bundle, std::size_t lag,
                                 std::optional<epoching::SplitSizes> sizes, std::uint64_t seed, bool fit_on_all) {
  auto epochs = epoching::epoch_trials(bundle, lag);
  PreparedData out;
  out.lag = lag;
  out.dropped = epochs.dropped;
  out.sample_rate_hz = bundle.recording.sample_rate_hz;
  const auto split_sizes = sizes.value_or(epoching::default_split(epochs.pairs.size()));
  out.split = epoching::split_trials(std::move(epochs.pairs), split_sizes, seed);
  out.stats.fit_on_all = fit_on_all;

  const auto& eeg = bundle.recording.data;
  if (fit_on_all) {
    out.stats.eeg = sigproc::zscore_fit(eeg);
    out.stats.kinematics = sigproc::minmax_fit(bundle.kinematics.data);
  } else {
    std::vector<char> used(eeg.cols(), 0);
    std::size_t target_rows = 0;
    for (const auto& p : out.split.train) {
      const std::size_t first = p.onset_index + 1 - lag;
      const std::size_t last = p.onset_index + p.design.rows() - 1;
      for (std::size_t t = first; t <= last; ++t) used[t] = 1;
      target_rows += p.target.rows();
    }
    std::vector<std::size_t> cols;
    for (std::size_t t = 0; t < used.size(); ++t)
      if (used[t]) cols.push_back(t);
    Matrix sub(eeg.rows(), cols.size());
    for (std::size_t n = 0; n < eeg.rows(); ++n)
      for (std::size_t i = 0; i < cols.size(); ++i) sub(n, i) = eeg(n, cols[i]);
    out.stats.eeg = sigproc::zscore_fit(sub);

    Matrix targets(target_rows, 3);
    std::size_t r0 = 0;
    for (const auto& p : out.split.train) {
      std::copy(p.target.storage().begin(), p.target.storage().end(), targets.row(r0).begin());
      r0 += p.target.rows();
    }
    out.stats.kinematics = sigproc::minmax_fit(targets);
  }
  normalize_pairs(out.split.train, out.stats);
  normalize_pairs(out.split.val, out.stats);
  normalize_pairs(out.split.test, out.stats);
  return out;
}

ordered_json to_json(const ExperimentConfig& cfg) {
  ordered_json j;
  auto& models = j["models"] = ordered_json::array();
  for (auto m : cfg.models) models.push_back(to_string(m));
  j["lags_ms"] = cfg.lags_ms;
  j["train"] = to_json(cfg.train);
  j["base_seed"] = cfg.base_seed;
  j["fit_on_all"] = cfg.fit_on_all;
  j["per_trial_average"] = cfg.per_trial_average;
  if (cfg.split)
    j["split"] = {{"train", cfg.split->train}, {"val", cfg.split->val}, {"test", cfg.split->test}};
  else
    j["split"] = "default";
  j["mlr_lambda"] = cfg.mlr_lambda;
  return j;
}

std::uint64_t cell_seed(const std::string& participant, ModelKind model, int lag_ms, std::uint64_t base_seed) {
  const std::string key = participant + "|" + to_string(model) + "|" + std::to_string(lag_ms);
  return splitmix64(fnv1a(key) ^ splitmix64(base_seed));
}

std::uint64_t split_seed(const std::string& participant, std::uint64_t base_seed) {
  return splitmix64(fnv1a(participant + "|split") ^ splitmix64(base_seed));
}

TrainedCell run_cell(const dataio::ParticipantBundle& bundle, ModelKind model, int lag_ms,
                     const ExperimentConfig& cfg) {
  TrainedCell cell;
  auto& res = cell.result;
  res.participant = bundle.participant_id;
  res.model = model;
  res.lag_ms = lag_ms;
  res.seed = cell_seed(bundle.participant_id, model, lag_ms, cfg.base_seed);
  cell.per_trial_average = cfg.per_trial_average;

  const std::size_t lag = epoching::lag_ms_to_samples(lag_ms, bundle.recording.sample_rate_hz);
  if (model == ModelKind::CnnLstm) decoders::premovnet_topology(decoders::NetKind::PreMovNetII, lag, 1);
  auto prep = prepare_participant(bundle, lag, cfg.split, split_seed(bundle.participant_id, cfg.base_seed),
                                  cfg.fit_on_all);
  cell.lag = lag;
  cell.stats = prep.stats;
  cell.split_ids = {ids_of(prep.split.train), ids_of(prep.split.val), ids_of(prep.split.test)};
  res.test_trials = prep.split.test.size();
  const std::size_t channels = prep.stats.eeg.size();

  Predictor predict;
  if (model == ModelKind::Mlr) {
    cell.mlr = decoders::mlr_fit_with_fallback(prep.split.train, cfg.mlr_lambda);
    res.mlr_lambda = cell.mlr->lambda;
    res.parameter_count = 3 + 3 * cell.mlr->width();
    predict = [&cell](const epoching::DesignMatrix& d) { return decoders::mlr_predict(*cell.mlr, d); };
  } else {
    const auto kind = net_kind(model);
    cell.net = decoders::build_premovnet(kind, lag, channels, res.seed);
    TrainConfig tc = cfg.train;
    tc.seed = res.seed;
    cell.train_config = to_json(tc);
    cell.history = train(*cell.net, kind, prep.split.train, prep.split.val, tc);
    round_to_float32(*cell.net);
    res.epochs_run = static_cast<int>(cell.history.epochs.size());
    res.parameter_count = cell.net->parameter_count();
    predict = [&cell, kind](const epoching::DesignMatrix& d) { return decoders::net_predict(*cell.net, kind, d); };
  }
  cell.eval = evaluate(predict, prep.split.test, prep.sample_rate_hz, cfg.per_trial_average);
  res.r = cell.eval.r;
  return cell;
}

void write_cell_artifacts(const TrainedCell& cell, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
  const auto& r = cell.result;
  ordered_json j;
  j["participant"] = r.participant;
  j["model"] = to_string(r.model);
  j["lag_ms"] = r.lag_ms;
  j["lag_samples"] = cell.lag;
  j["seed"] = r.seed;
  j["split"] = {{"train", cell.split_ids[0]}, {"val", cell.split_ids[1]}, {"test", cell.split_ids[2]}};
  j["normalization"] = to_json(cell.stats);
  j["per_trial_average"] = cell.per_trial_average;
  j["parameter_count"] = r.parameter_count;
  j["r"] = {{"x", r.r[0]}, {"y", r.r[1]}, {"z", r.r[2]}};
  if (cell.mlr) {
    j["mlr_lambda"] = cell.mlr->lambda;
    decoders::save_mlr(*cell.mlr, dir / "mlr.json");
  }
  if (cell.net) {
    j["train_config"] = cell.train_config;
    j["history"] = to_json(cell.history);
    gradkit::save_checkpoint(*cell.net, dir / "model", hex64(fnv1a(cell.train_config.dump())),
                             {{"model", to_string(r.model)}, {"lag_samples", cell.lag}});
  }
  write_json(dir / "cell.json", j);
  export_trajectories(cell.eval, dir / "trajectories");
}

EvalResult evaluate_saved_cell(const std::filesystem::path& dir, const dataio::ParticipantBundle& bundle) {
  const auto j = read_json(dir / "cell.json");
  try {
    const auto model = model_kind_from_string(j.at("model").get<std::string>());
    const auto lag = j.at("lag_samples").get<std::size_t>();
    const auto stats = normalization_from_json(j.at("normalization"));
    const auto test_ids = j.at("split").at("test").get<std::vector<int>>();
    auto epochs = epoching::epoch_trials(bundle, lag);
    std::vector<TrialTensorPair> test;
    for (int id : test_ids) {
      const auto it = std::find_if(epochs.pairs.begin(), epochs.pairs.end(),
                                   [id](const TrialTensorPair& p) { return p.trial_id == id; });
      if (it == epochs.pairs.end())
        throw Error(Errc::InvalidEvents, "test trial " + std::to_string(id) + " is not in the bundle");
      test.push_back(std::move(*it));
    }
    normalize_pairs(test, stats);
    const bool per_trial = j.at("per_trial_average").get<bool>();
    const double rate = bundle.recording.sample_rate_hz;
    if (model == ModelKind::Mlr) {
      const auto mlr = decoders::load_mlr(dir / "mlr.json");
      return evaluate([&](const epoching::DesignMatrix& d) { return decoders::mlr_predict(mlr, d); }, test, rate,
                      per_trial);
    }
    auto loaded = gradkit::load_checkpoint(dir / "model");
    const auto kind = net_kind(model);
    return evaluate([&](const epoching::DesignMatrix& d) { return decoders::net_predict(loaded.model, kind, d); },
                    test, rate, per_trial);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptModel, (dir / "cell.json").string() + ": " + e.what());
  }
}

std::vector<CellResult> run_experiment(const std::vector<dataio::ParticipantBundle>& bundles,
                                       const ExperimentConfig& cfg) {
  if (cfg.models.empty() || cfg.lags_ms.empty()) throw Error(Errc::ConfigError, "need at least one model and lag");
  cfg.train.validate();
  struct Job {
    std::size_t bundle;
    ModelKind model;
    int lag_ms;
  };
  std::vector<Job> jobs;
  for (std::size_t b = 0; b < bundles.size(); ++b)
    for (auto m : cfg.models)
      for (int lag : cfg.lags_ms) jobs.push_back({b, m, lag});

  std::vector<CellResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.jobs, jobs.size()));
  const int omp_threads = std::max(1, omp_get_max_threads() / static_cast<int>(workers));

  auto work = [&]() {
    if (workers > 1) omp_set_num_threads(omp_threads);
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto& job = jobs[i];
      const auto& bundle = bundles[job.bundle];
      CellResult& out = results[i];
      try {
        auto cell = run_cell(bundle, job.model, job.lag_ms, cfg);
        if (cfg.artifacts_dir)
          write_cell_artifacts(cell, *cfg.artifacts_dir / bundle.participant_id / cell_dir_name(cell.result));
        out = std::move(cell.result);
      } catch (const std::exception& e) {
        out.participant = bundle.participant_id;
        out.model = job.model;
        out.lag_ms = job.lag_ms;
        out.seed = cell_seed(bundle.participant_id, job.model, job.lag_ms, cfg.base_seed);
        out.r.fill(std::numeric_limits<double>::quiet_NaN());
        out.error = e.what();
        const auto* pe = dynamic_cast<const Error*>(&e);
        out.exit_code = pe ? exit_code_for(pe->code()) : 3;
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return results;
}

}  // namespace premov::harness
