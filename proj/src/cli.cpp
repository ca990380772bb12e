// SPDX-License-Identifier: Apache-2.0
#include "premov/cli.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "premov/dataio.hpp"
#include "premov/error.hpp"
#include "premov/harness/experiment.hpp"
#include "premov/harness/report.hpp"
#include "premov/harness/synth.hpp"
#include "premov/random.hpp"

namespace premov::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw Error(Errc::ConfigError, where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw Error(Errc::ConfigError, "unknown key '" + key + "' in " + where);
  }
}

BandSpec band_from_json(const json& j, BandSpec b, const std::string& where) {
  reject_unknown(j, {"low_hz", "high_hz", "transition_hz"}, where);
  b.low_hz = j.value("low_hz", b.low_hz);
  b.high_hz = j.value("high_hz", b.high_hz);
  b.transition_hz = j.value("transition_hz", b.transition_hz);
  return b;
}

json read_json_file(const fs::path& file, Errc missing) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(missing, file.string() + " not found");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw Error(missing == Errc::ConfigError ? Errc::ConfigError : Errc::CorruptBundle,
                file.string() + ": " + e.what());
  }
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + file.string());
  out << text;
  if (!out) throw Error(Errc::IoError, "write failed for " + file.string());
}

std::string hex32(std::uint64_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08llx", static_cast<unsigned long long>(v >> 32));
  return buf;
}

fs::path make_run_dir(const std::string& out, const std::string& command, const ordered_json& effective) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &utc);
  const std::string base = std::string(stamp) + "-" + hex32(fnv1a(command + effective.dump()));
  fs::path dir = fs::path(out) / base;
  for (int k = 2; fs::exists(dir); ++k) dir = fs::path(out) / (base + "-" + std::to_string(k));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
  write_text(dir / "config.json", ordered_json{{"command", command}, {"config", effective}}.dump(2) + "\n");
  return dir;
}

harness::ExperimentConfig experiment_config(const RunConfig& cfg) {
  harness::ExperimentConfig ec;
  ec.models.clear();
  for (const auto& m : cfg.models) ec.models.push_back(harness::model_kind_from_string(m));
  ec.lags_ms = cfg.lags_ms;
  ec.train = cfg.train;
  ec.base_seed = cfg.seed;
  ec.jobs = cfg.jobs;
  ec.fit_on_all = cfg.fit_on_all;
  ec.per_trial_average = cfg.per_trial_average;
  ec.split = cfg.split;
  ec.mlr_lambda = cfg.mlr_lambda;
  return ec;
}

void validate(const RunConfig& cfg) {
  harness::model_kind_from_string(cfg.model);
  for (const auto& m : cfg.models) harness::model_kind_from_string(m);
  epoching::lag_ms_to_samples(cfg.lag_ms, cfg.preprocess.target_rate_hz);
  for (int lag : cfg.lags_ms) epoching::lag_ms_to_samples(lag, cfg.preprocess.target_rate_hz);
  cfg.train.validate();
  if (cfg.jobs == 0) throw Error(Errc::ConfigError, "jobs must be >= 1");
  if (cfg.mlr_lambda < 0.0) throw Error(Errc::ConfigError, "mlr_lambda must be >= 0");
}

std::string r_line(const std::array<double, 3>& r) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "r_x=%.4f r_y=%.4f r_z=%.4f", r[0], r[1], r[2]);
  return buf;
}

// Flags shared by train and sweep.
struct TrainFlags {
  int max_epochs = 0, patience = 0;
  std::size_t batch_size = 0;
  double lr = 0.0, mlr_lambda = 0.0;
  CLI::Option *max_epochs_opt, *patience_opt, *batch_opt, *lr_opt, *lambda_opt, *fit_all_opt, *per_trial_opt;

  void add(CLI::App* sub) {
    max_epochs_opt = sub->add_option("--max-epochs", max_epochs, "Upper bound on training epochs (default 200)");
    patience_opt = sub->add_option("--patience", patience, "Early-stopping patience in epochs (default 10)");
    batch_opt = sub->add_option("--batch-size", batch_size, "Mini-batch size (default 64)");
    lr_opt = sub->add_option("--lr", lr, "Adam learning rate (default 1e-3)");
    lambda_opt = sub->add_option("--mlr-lambda", mlr_lambda, "Ridge penalty for mLR (default 0)");
    fit_all_opt = sub->add_flag("--fit-on-all", "Fit normalization on the whole recording instead of the training split");
    per_trial_opt = sub->add_flag("--per-trial-average", "Average per-trial PCC instead of pooling test trials");
  }

  void apply(RunConfig& cfg) const {
    if (max_epochs_opt->count()) cfg.train.max_epochs = max_epochs;
    if (patience_opt->count()) cfg.train.patience = patience;
    if (batch_opt->count()) cfg.train.batch_size = batch_size;
    if (lr_opt->count()) cfg.train.lr = lr;
    if (lambda_opt->count()) cfg.mlr_lambda = mlr_lambda;
    if (fit_all_opt->count()) cfg.fit_on_all = true;
    if (per_trial_opt->count()) cfg.per_trial_average = true;
  }
};

int cmd_preprocess(const RunConfig& cfg, const std::string& in, const std::string& out) {
  const auto raw = dataio::load_bundle(in);
  const auto pre = preprocess_bundle(raw, cfg.preprocess);
  dataio::write_bundle(pre, out);
  std::cout << "preprocessed " << in << " -> " << out << " (" << pre.recording.channels() << " channels, "
            << pre.recording.samples() << " samples at " << pre.recording.sample_rate_hz << " Hz)\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, const ordered_json& effective) {
  if (cfg.bundles.size() != 1) throw Error(Errc::ConfigError, "train needs exactly one --bundle");
  const auto bundle = dataio::load_bundle(cfg.bundles.front());
  auto ec = experiment_config(cfg);
  const auto model = harness::model_kind_from_string(cfg.model);
  const auto cell = harness::run_cell(bundle, model, cfg.lag_ms, ec);
  const auto run = make_run_dir(cfg.out, "train", effective);
  harness::write_cell_artifacts(cell, run / bundle.participant_id /
                                          (harness::to_string(model) + "_" + std::to_string(cfg.lag_ms) + "ms"));
  const auto report = harness::make_report({cell.result});
  write_text(run / "report.csv", harness::report_csv(report));
  write_text(run / "report.json", harness::report_json(report, effective).dump(2) + "\n");
  std::cout << run.string() << "\n" << harness::to_string(model) << " " << cfg.lag_ms << " ms " << r_line(cell.result.r)
            << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, const ordered_json& effective, const std::string& cell_dir) {
  if (cfg.bundles.size() != 1) throw Error(Errc::ConfigError, "evaluate needs exactly one --bundle");
  if (!fs::exists(fs::path(cell_dir) / "cell.json"))
    throw Error(Errc::MissingComponent, (fs::path(cell_dir) / "cell.json").string() + " not found");
  const auto bundle = dataio::load_bundle(cfg.bundles.front());
  const auto result = harness::evaluate_saved_cell(cell_dir, bundle);
  const auto run = make_run_dir(cfg.out, "evaluate", effective);
  ordered_json j;
  j["cell"] = cell_dir;
  j["participant"] = bundle.participant_id;
  j["r"] = {{"x", result.r[0]}, {"y", result.r[1]}, {"z", result.r[2]}};
  j["test_trials"] = result.trials.size();
  write_text(run / "evaluation.json", j.dump(2) + "\n");
  harness::export_trajectories(result, run / "trajectories");
  std::cout << run.string() << "\n" << r_line(result.r) << "\n";
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const ordered_json& effective) {
  if (cfg.bundles.empty()) throw Error(Errc::ConfigError, "sweep needs at least one --bundle");
  std::vector<dataio::ParticipantBundle> bundles;
  for (const auto& b : cfg.bundles) bundles.push_back(dataio::load_bundle(b));
  auto ec = experiment_config(cfg);
  const auto run = make_run_dir(cfg.out, "sweep", effective);
  if (cfg.save_models) ec.artifacts_dir = run;
  const auto report = harness::make_report(harness::run_experiment(bundles, ec));
  write_text(run / "report.csv", harness::report_csv(report));
  write_text(run / "report.json", harness::report_json(report, effective).dump(2) + "\n");
  const auto table = harness::comparison_table(report);
  write_text(run / "table.txt", table);
  std::cout << run.string() << "\n" << table;

  int first_failure = 0;
  std::size_t failed = 0;
  for (const auto& c : report.cells)
    if (!c.error.empty()) {
      std::cerr << "cell " << c.participant << "/" << harness::to_string(c.model) << "/" << c.lag_ms
                << " ms failed: " << c.error << "\n";
      if (!first_failure) first_failure = c.exit_code;
      ++failed;
    }
  return failed == report.cells.size() ? first_failure : 0;
}

struct SynthFlags {
  std::string preset = "nonlinear";
  std::string spec_file;
  std::size_t trials = 0, channels = 0, lag = 0, trial_samples = 0;
  double noise = 0.0;
  std::string participant;
  CLI::Option *spec_opt, *trials_opt, *channels_opt, *lag_opt, *samples_opt, *noise_opt, *participant_opt;
};

int cmd_synth(const RunConfig& cfg, const ordered_json& effective, const SynthFlags& f, const std::string& out) {
  harness::SynthSpec spec;
  if (f.spec_opt->count()) {
    spec = harness::synth_spec_from_json(read_json_file(f.spec_file, Errc::ConfigError));
  } else if (f.preset == "nonlinear") {
    spec = harness::nonlinear_preset(cfg.seed);
  } else {
    spec.coupling = harness::LinearCoupling{};
    spec.seed = cfg.seed;
  }
  if (f.trials_opt->count()) spec.trials = f.trials;
  if (f.channels_opt->count()) spec.channels = f.channels;
  if (f.lag_opt->count()) spec.lag = f.lag;
  if (f.samples_opt->count()) spec.trial_samples = f.trial_samples;
  if (f.noise_opt->count()) spec.noise_sigma = f.noise;
  if (f.participant_opt->count()) spec.participant_id = f.participant;
  const auto generated = harness::synth_generate(spec);
  const fs::path dir = out.empty() ? make_run_dir(cfg.out, "synth", effective) / spec.participant_id : fs::path(out);
  dataio::write_bundle(generated.bundle, dir);
  write_text(dir / "truth.json", generated.truth.dump(2) + "\n");
  std::cout << dir.string() << "\n";
  return 0;
}

int cmd_report(const std::string& target) {
  const fs::path p(target);
  const bool is_dir = fs::is_directory(p);
  const auto report = harness::report_from_json(read_json_file(is_dir ? p / "report.json" : p, Errc::MissingComponent));
  const auto table = harness::comparison_table(report);
  if (is_dir) write_text(p / "table.txt", table);
  std::cout << table;
  return 0;
}

int cmd_convert_check(const std::string& dir) {
  const auto b = dataio::load_bundle(dir);
  ordered_json j;
  j["participant_id"] = b.participant_id;
  j["channels"] = b.recording.channels();
  j["eeg_samples"] = b.recording.samples();
  j["eeg_sample_rate_hz"] = b.recording.sample_rate_hz;
  j["kin_samples"] = b.kinematics.samples();
  j["kin_sample_rate_hz"] = b.kinematics.sample_rate_hz;
  j["trials"] = b.events.size();
  j["ica_cleaned"] = b.provenance.ica_cleaned;
  j["source"] = b.provenance.source;
  auto& steps = j["preprocessing_steps"] = ordered_json::array();
  for (const auto& e : b.recording.preprocessing_log) steps.push_back(e.step);
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

ordered_json to_json(const RunConfig& cfg) {
  ordered_json j;
  j["bundles"] = cfg.bundles;
  j["model"] = cfg.model;
  j["lag_ms"] = cfg.lag_ms;
  j["models"] = cfg.models;
  j["lags_ms"] = cfg.lags_ms;
  auto train = harness::to_json(cfg.train);
  train.erase("seed");
  j["train"] = train;
  j["seed"] = cfg.seed;
  j["jobs"] = cfg.jobs;
  j["out"] = cfg.out;
  j["fit_on_all"] = cfg.fit_on_all;
  j["per_trial_average"] = cfg.per_trial_average;
  j["mlr_lambda"] = cfg.mlr_lambda;
  if (cfg.split)
    j["split"] = {{"train", cfg.split->train}, {"val", cfg.split->val}, {"test", cfg.split->test}};
  else
    j["split"] = "default";
  j["save_models"] = cfg.save_models;
  j["preprocess"] = premov::to_json(cfg.preprocess);
  return j;
}

RunConfig run_config_from_json(const json& j) {
  reject_unknown(j,
                 {"bundles", "model", "lag_ms", "models", "lags_ms", "train", "seed", "jobs", "out", "fit_on_all",
                  "per_trial_average", "mlr_lambda", "split", "save_models", "preprocess"},
                 "config");
  try {
    RunConfig c;
    c.bundles = j.value("bundles", c.bundles);
    c.model = j.value("model", c.model);
    c.lag_ms = j.value("lag_ms", c.lag_ms);
    c.models = j.value("models", c.models);
    c.lags_ms = j.value("lags_ms", c.lags_ms);
    c.seed = j.value("seed", c.seed);
    c.jobs = j.value("jobs", c.jobs);
    c.out = j.value("out", c.out);
    c.fit_on_all = j.value("fit_on_all", c.fit_on_all);
    c.per_trial_average = j.value("per_trial_average", c.per_trial_average);
    c.mlr_lambda = j.value("mlr_lambda", c.mlr_lambda);
    c.save_models = j.value("save_models", c.save_models);
    if (j.contains("train")) {
      const auto& t = j.at("train");
      reject_unknown(t, {"lr", "beta1", "beta2", "epsilon", "batch_size", "max_epochs", "patience", "shuffle_each_epoch"},
                     "config.train");
      auto& tc = c.train;
      tc.lr = t.value("lr", tc.lr);
      tc.beta1 = t.value("beta1", tc.beta1);
      tc.beta2 = t.value("beta2", tc.beta2);
      tc.epsilon = t.value("epsilon", tc.epsilon);
      tc.batch_size = t.value("batch_size", tc.batch_size);
      tc.max_epochs = t.value("max_epochs", tc.max_epochs);
      tc.patience = t.value("patience", tc.patience);
      tc.shuffle_each_epoch = t.value("shuffle_each_epoch", tc.shuffle_each_epoch);
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      if (s.is_string()) {
        if (s.get<std::string>() != "default") throw Error(Errc::ConfigError, "split must be \"default\" or an object");
      } else {
        reject_unknown(s, {"train", "val", "test"}, "config.split");
        c.split = epoching::SplitSizes{s.at("train").get<std::size_t>(), s.at("val").get<std::size_t>(),
                                       s.at("test").get<std::size_t>()};
      }
    }
    if (j.contains("preprocess")) {
      const auto& p = j.at("preprocess");
      reject_unknown(p, {"bandpass", "delta", "kinematics_lowpass", "target_rate_hz", "channels"}, "config.preprocess");
      auto& pc = c.preprocess;
      if (p.contains("bandpass")) pc.bandpass = band_from_json(p.at("bandpass"), pc.bandpass, "config.preprocess.bandpass");
      if (p.contains("delta")) pc.delta = band_from_json(p.at("delta"), pc.delta, "config.preprocess.delta");
      if (p.contains("kinematics_lowpass")) {
        const auto& k = p.at("kinematics_lowpass");
        reject_unknown(k, {"cutoff_hz", "transition_hz"}, "config.preprocess.kinematics_lowpass");
        pc.kinematics_cutoff_hz = k.value("cutoff_hz", pc.kinematics_cutoff_hz);
        pc.kinematics_transition_hz = k.value("transition_hz", pc.kinematics_transition_hz);
      }
      pc.target_rate_hz = p.value("target_rate_hz", pc.target_rate_hz);
      if (p.contains("channels")) pc.layout.names = p.at("channels").get<std::vector<std::string>>();
    }
    return c;
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, std::string("bad config: ") + e.what());
  }
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Decode 3-D hand kinematics from pre-movement EEG.", "premov"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  auto* config_opt = app.add_option("--config", config_path, "JSON run configuration (unknown keys are rejected)");
  auto* seed_opt = app.add_option("--seed", seed, "Base seed (default 0)");
  auto* out_opt = app.add_option("--out", out, "Directory receiving run directories (default runs)");
  auto* jobs_opt = app.add_option("--jobs", jobs, "Worker threads for sweep cells (default 1)");

  std::vector<std::string> bundles;
  std::string model, models_csv, lags_csv, cell_dir, in_path, out_path, report_target;
  int lag_ms = 0;

  auto* pre = app.add_subcommand("preprocess", "Run the filtering, re-referencing, decimation and channel selection chain");
  pre->add_option("input", in_path, "Raw bundle directory")->required();
  pre->add_option("output", out_path, "Directory for the preprocessed bundle")->required();
  double bp_low = 0, bp_high = 0, bp_tr = 0, d_low = 0, d_high = 0, d_tr = 0, k_cut = 0, k_tr = 0, rate = 0;
  auto* bp_low_opt = pre->add_option("--bandpass-low", bp_low, "Broad band-pass lower edge in Hz (default 0.1)");
  auto* bp_high_opt = pre->add_option("--bandpass-high", bp_high, "Broad band-pass upper edge in Hz (default 40)");
  auto* bp_tr_opt = pre->add_option("--bandpass-transition", bp_tr, "Broad band-pass transition width in Hz (default 0.5)");
  auto* d_low_opt = pre->add_option("--delta-low", d_low, "Delta band lower edge in Hz (default 0.5)");
  auto* d_high_opt = pre->add_option("--delta-high", d_high, "Delta band upper edge in Hz (default 3)");
  auto* d_tr_opt = pre->add_option("--delta-transition", d_tr, "Delta band transition width in Hz (default 0.25)");
  auto* k_cut_opt = pre->add_option("--kin-cutoff", k_cut, "Kinematics low-pass cutoff in Hz (default 2)");
  auto* k_tr_opt = pre->add_option("--kin-transition", k_tr, "Kinematics low-pass transition width in Hz (default 0.5)");
  auto* rate_opt = pre->add_option("--target-rate", rate, "Sample rate after decimation in Hz (default 100)");

  auto* train = app.add_subcommand("train", "Train and evaluate one decoder at one lag");
  auto* train_bundle_opt = train->add_option("--bundle", bundles, "Preprocessed bundle directory");
  auto* model_opt = train->add_option("--model", model, "mlr, mlp or cnnlstm (default cnnlstm)");
  auto* lag_opt = train->add_option("--lag-ms", lag_ms, "Lag window in ms (default 250)");
  TrainFlags train_flags;
  train_flags.add(train);

  auto* evaluate = app.add_subcommand("evaluate", "Re-score a trained cell on a bundle with its stored split");
  auto* eval_bundle_opt = evaluate->add_option("--bundle", bundles, "Preprocessed bundle directory");
  evaluate->add_option("--cell", cell_dir, "Cell directory written by train or sweep")->required();

  auto* sweep = app.add_subcommand("sweep", "Run every participant x model x lag cell and write report.csv");
  auto* sweep_bundle_opt = sweep->add_option("--bundle", bundles, "Preprocessed bundle directory (repeatable)");
  auto* models_opt = sweep->add_option("--models", models_csv, "Comma-separated models (default mlr,mlp,cnnlstm)");
  auto* lags_opt = sweep->add_option("--lags", lags_csv, "Comma-separated lags in ms (default 150,200,250,300,350)");
  auto* save_opt = sweep->add_flag("--save-models", "Keep every cell's model, split and trajectories");
  TrainFlags sweep_flags;
  sweep_flags.add(sweep);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic participant bundle with a known coupling");
  std::string synth_out;
  synth->add_option("output", synth_out, "Bundle directory (default <out>/<run>/<participant>)");
  SynthFlags sf;
  synth->add_option("--preset", sf.preset, "nonlinear or linear (default nonlinear)")
      ->check(CLI::IsMember({"nonlinear", "linear"}));
  sf.spec_opt = synth->add_option("--spec", sf.spec_file, "JSON synthetic spec (overrides --preset)");
  sf.trials_opt = synth->add_option("--trials", sf.trials, "Number of trials");
  sf.channels_opt = synth->add_option("--channels", sf.channels, "Number of EEG channels");
  sf.lag_opt = synth->add_option("--lag", sf.lag, "Coupling lag in samples");
  sf.samples_opt = synth->add_option("--trial-samples", sf.trial_samples, "Samples from onset to rest");
  sf.noise_opt = synth->add_option("--noise", sf.noise, "Kinematics noise standard deviation");
  sf.participant_opt = synth->add_option("--participant", sf.participant, "Participant id (default SYN)");

  auto* report = app.add_subcommand("report", "Print mean +/- std per model, lag and axis next to published averages");
  report->add_option("run", report_target, "Run directory or report.json")->required();

  auto* check = app.add_subcommand("convert-check", "Load and validate a bundle and print its summary");
  std::string check_dir;
  check->add_option("bundle", check_dir, "Bundle directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg;
    if (config_opt->count()) cfg = run_config_from_json(read_json_file(config_path, Errc::ConfigError));
    if (seed_opt->count()) cfg.seed = seed;
    if (out_opt->count()) cfg.out = out;
    if (jobs_opt->count()) cfg.jobs = jobs;
    if (train_bundle_opt->count() || eval_bundle_opt->count() || sweep_bundle_opt->count()) cfg.bundles = bundles;
    if (model_opt->count()) cfg.model = model;
    if (lag_opt->count()) cfg.lag_ms = lag_ms;
    if (models_opt->count()) cfg.models = CLI::detail::split(models_csv, ',');
    if (lags_opt->count()) {
      cfg.lags_ms.clear();
      for (const auto& s : CLI::detail::split(lags_csv, ',')) {
        try {
          cfg.lags_ms.push_back(std::stoi(s));
        } catch (const std::exception&) {
          throw Error(Errc::ConfigError, "bad lag '" + s + "'");
        }
      }
    }
    if (save_opt->count()) cfg.save_models = true;
    if (*train) train_flags.apply(cfg);
    if (*sweep) sweep_flags.apply(cfg);
    auto& pc = cfg.preprocess;
    if (bp_low_opt->count()) pc.bandpass.low_hz = bp_low;
    if (bp_high_opt->count()) pc.bandpass.high_hz = bp_high;
    if (bp_tr_opt->count()) pc.bandpass.transition_hz = bp_tr;
    if (d_low_opt->count()) pc.delta.low_hz = d_low;
    if (d_high_opt->count()) pc.delta.high_hz = d_high;
    if (d_tr_opt->count()) pc.delta.transition_hz = d_tr;
    if (k_cut_opt->count()) pc.kinematics_cutoff_hz = k_cut;
    if (k_tr_opt->count()) pc.kinematics_transition_hz = k_tr;
    if (rate_opt->count()) pc.target_rate_hz = rate;
    validate(cfg);
    const auto effective = to_json(cfg);

    if (*pre) return cmd_preprocess(cfg, in_path, out_path);
    if (*train) return cmd_train(cfg, effective);
    if (*evaluate) return cmd_evaluate(cfg, effective, cell_dir);
    if (*sweep) return cmd_sweep(cfg, effective);
    if (*synth) return cmd_synth(cfg, effective, sf, synth_out);
    if (*report) return cmd_report(report_target);
    if (*check) return cmd_convert_check(check_dir);
    return 2;
  } catch (const Error& e) {
    std::cerr << "premov: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "premov: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace premov::cli
