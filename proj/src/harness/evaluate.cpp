// SPDX-License-Identifier: Apache-2.0
#include "premov/harness/evaluate.hpp"

#include <fstream>

#include "premov/dataio.hpp"
#include "premov/error.hpp"
#include "premov/harness/pcc.hpp"

namespace premov::harness {

namespace {

std::vector<double> column(const Matrix& m, std::size_t c) {
  std::vector<double> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = m(r, c);
  return out;
}

}  // namespace

EvalResult evaluate(const Predictor& predict, const std::vector<epoching::TrialTensorPair>& test,
                    double sample_rate_hz, bool per_trial_average) {
  if (test.empty()) throw Error(Errc::EmptyEpochSet, "test set is empty");
  EvalResult result;
  result.sample_rate_hz = sample_rate_hz;
  for (const auto& p : test) {
    Matrix pred = predict(p.design);
    if (pred.rows() != p.target.rows() || pred.cols() != 3)
      throw Error(Errc::ShapeError, "prediction shape does not match trial " + std::to_string(p.trial_id));
    result.trials.push_back({p.trial_id, p.target, std::move(pred)});
  }

  for (std::size_t a = 0; a < 3; ++a) {
    if (per_trial_average) {
      double acc = 0.0;
      for (const auto& t : result.trials) acc += pcc(column(t.measured, a), column(t.predicted, a));
      result.r[a] = acc / static_cast<double>(result.trials.size());
    } else {
      std::vector<double> meas, pred;
      for (const auto& t : result.trials) {
        const auto m = column(t.measured, a), p = column(t.predicted, a);
        meas.insert(meas.end(), m.begin(), m.end());
        pred.insert(pred.end(), p.begin(), p.end());
      }
      result.r[a] = pcc(meas, pred);
    }
  }
  return result;
}

std::vector<std::filesystem::path> export_trajectories(const EvalResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const auto& t : result.trials) {
    const auto file = dir / ("trial_" + std::to_string(t.trial_id) + ".csv");
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot write " + file.string());
    out << "t_s,x_meas,y_meas,z_meas,x_pred,y_pred,z_pred\n";
    for (std::size_t r = 0; r < t.measured.rows(); ++r) {
      out << dataio::format_double(static_cast<double>(r) / result.sample_rate_hz);
      for (std::size_t a = 0; a < 3; ++a) out << ',' << dataio::format_double(t.measured(r, a));
      for (std::size_t a = 0; a < 3; ++a) out << ',' << dataio::format_double(t.predicted(r, a));
      out << '\n';
    }
    if (!out) throw Error(Errc::IoError, "write failed for " + file.string());
    written.push_back(file);
  }
  return written;
}

}  // namespace premov::harness
