// SPDX-License-Identifier: Apache-2.0
#include "premov/dataio.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "premov/error.hpp"

namespace premov::dataio {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kEeg = "eeg.f32";
constexpr const char* kKinematics = "kinematics.csv";
constexpr const char* kEvents = "events.csv";
constexpr const char* kLog = "preprocessing_log.json";
constexpr const char* kKinHeader = "t_s,x_mm,y_mm,z_mm";
constexpr const char* kEventHeader = "trial_id,onset_s,rest_s";

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big)
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  return v;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::MissingComponent, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + p.string());
  out << text;
  if (!out) throw Error(Errc::IoError, "write failed for " + p.string());
}

double parse_double(std::string_view field, const fs::path& file, std::size_t line) {
  double v = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw Error(Errc::CorruptBundle, file.filename().string() + " line " + std::to_string(line) +
                                         ": bad number '" + std::string(field) + "'");
  return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Rows of a CSV file after checking the header; trailing CR and blank lines are ignored.
std::vector<std::vector<double>> read_csv(const fs::path& p, std::string_view header, std::size_t width) {
  const std::string text = read_text(p);
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != header)
        throw Error(Errc::CorruptBundle, p.filename().string() + ": expected header '" +
                                             std::string(header) + "'");
      saw_header = true;
      continue;
    }
    auto fields = split_fields(line);
    if (fields.size() != width)
      throw Error(Errc::CorruptBundle, p.filename().string() + " line " + std::to_string(lineno) +
                                           ": expected " + std::to_string(width) + " fields");
    std::vector<double> row;
    row.reserve(width);
    for (auto f : fields) row.push_back(parse_double(f, p, lineno));
    rows.push_back(std::move(row));
  }
  if (!saw_header) throw Error(Errc::CorruptBundle, p.filename().string() + " is empty");
  return rows;
}

template <typename T>
T manifest_field(const nlohmann::json& m, const char* key) {
  if (!m.contains(key)) throw Error(Errc::CorruptBundle, std::string("manifest missing '") + key + "'");
  try {
    return m.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::CorruptBundle, std::string("manifest field '") + key + "' has the wrong type");
  }
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return {buf, ptr};
}

void validate_events(const std::vector<TrialEvent>& events) {
  std::set<int> ids;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (!std::isfinite(e.onset_s) || !std::isfinite(e.rest_s))
      throw Error(Errc::InvalidEvents, "trial " + std::to_string(e.trial_id) + " has non-finite times");
    if (!(e.onset_s < e.rest_s))
      throw Error(Errc::InvalidEvents, "trial " + std::to_string(e.trial_id) + ": onset " +
                                           format_double(e.onset_s) + " not before rest " +
                                           format_double(e.rest_s));
    if (!ids.insert(e.trial_id).second)
      throw Error(Errc::InvalidEvents, "duplicate trial id " + std::to_string(e.trial_id));
    if (i > 0) {
      const auto& prev = events[i - 1];
      if (!(prev.onset_s < e.onset_s))
        throw Error(Errc::InvalidEvents, "events not sorted by onset at trial " + std::to_string(e.trial_id));
      if (prev.rest_s > e.onset_s)
        throw Error(Errc::InvalidEvents, "trial " + std::to_string(prev.trial_id) + " overlaps trial " +
                                             std::to_string(e.trial_id));
    }
  }
}

void ParticipantBundle::validate() const {
  recording.validate();
  kinematics.validate();
  for (double v : recording.data.flat())
    if (!std::isfinite(v)) throw Error(Errc::RejectedNonFinite, "EEG contains a non-finite value");
  for (double v : kinematics.data.flat())
    if (!std::isfinite(v)) throw Error(Errc::RejectedNonFinite, "kinematics contain a non-finite value");

  const double eeg_span = static_cast<double>(recording.samples()) / recording.sample_rate_hz;
  const double kin_span = static_cast<double>(kinematics.samples()) / kinematics.sample_rate_hz;
  const double coarse = 1.0 / std::min(recording.sample_rate_hz, kinematics.sample_rate_hz);
  if (std::abs(eeg_span - kin_span) > coarse + 1e-9)
    throw Error(Errc::CorruptBundle, "EEG covers " + format_double(eeg_span) + " s but kinematics " +
                                         format_double(kin_span) + " s");

  validate_events(events);
  const double eeg_last = (static_cast<double>(recording.samples()) - 1.0) / recording.sample_rate_hz;
  const double kin_last = (static_cast<double>(kinematics.samples()) - 1.0) / kinematics.sample_rate_hz;
  const double last = std::min(eeg_last, kin_last);
  for (const auto& e : events) {
    if (e.onset_s < 0.0 || e.rest_s > last + 1e-9)
      throw Error(Errc::InvalidEvents, "trial " + std::to_string(e.trial_id) + " lies outside [0, " +
                                           format_double(last) + "] s");
  }
}

ParticipantBundle load_bundle(const fs::path& dir) {
  for (const char* name : {kManifest, kEeg, kKinematics, kEvents}) {
    if (!fs::is_regular_file(dir / name))
      throw Error(Errc::MissingComponent, (dir / name).string() + " not found");
  }

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_text(dir / kManifest));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::CorruptBundle, std::string("manifest.json: ") + e.what());
  }

  ParticipantBundle b;
  b.participant_id = manifest_field<std::string>(manifest, "participant_id");
  b.provenance.source = manifest_field<std::string>(manifest, "source");
  b.provenance.ica_cleaned = manifest_field<bool>(manifest, "ica_cleaned");

  auto& rec = b.recording;
  rec.sample_rate_hz = manifest_field<double>(manifest, "eeg_sample_rate_hz");
  rec.channel_names = manifest_field<std::vector<std::string>>(manifest, "channel_names");
  const auto eeg_samples = manifest_field<std::int64_t>(manifest, "eeg_samples");
  if (eeg_samples < 0) throw Error(Errc::CorruptBundle, "negative eeg_samples");
  const std::size_t channels = rec.channel_names.size();
  const auto samples = static_cast<std::size_t>(eeg_samples);

  const auto eeg_bytes = fs::file_size(dir / kEeg);
  if (eeg_bytes != channels * samples * sizeof(float))
    throw Error(Errc::CorruptBundle, "eeg.f32 holds " + std::to_string(eeg_bytes) + " bytes, manifest implies " +
                                         std::to_string(channels * samples * sizeof(float)));
  {
    std::ifstream in(dir / kEeg, std::ios::binary);
    std::vector<std::uint32_t> raw(channels * samples);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(float)));
    if (!in) throw Error(Errc::CorruptBundle, "short read on eeg.f32");
    rec.data = Matrix(channels, samples);
    auto flat = rec.data.flat();
    for (std::size_t i = 0; i < raw.size(); ++i)
      flat[i] = static_cast<double>(std::bit_cast<float>(to_little_endian(raw[i])));
  }

  if (fs::is_regular_file(dir / kLog)) {
    try {
      auto log = ordered_json::parse(read_text(dir / kLog));
      for (const auto& entry : log)
        rec.preprocessing_log.push_back({entry.at("step").get<std::string>(), entry.at("params")});
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::CorruptBundle, std::string("preprocessing_log.json: ") + e.what());
    }
  }

  auto& kin = b.kinematics;
  kin.sample_rate_hz = manifest_field<double>(manifest, "kin_sample_rate_hz");
  const auto kin_samples = manifest_field<std::int64_t>(manifest, "kin_samples");
  const auto kin_rows = read_csv(dir / kKinematics, kKinHeader, 4);
  if (kin_samples < 0 || kin_rows.size() != static_cast<std::size_t>(kin_samples))
    throw Error(Errc::CorruptBundle, "kinematics.csv has " + std::to_string(kin_rows.size()) +
                                         " rows, manifest says " + std::to_string(kin_samples));
  kin.data = Matrix(kin_rows.size(), 3);
  for (std::size_t i = 0; i < kin_rows.size(); ++i)
    for (std::size_t a = 0; a < 3; ++a) kin.data(i, a) = kin_rows[i][a + 1];

  for (const auto& row : read_csv(dir / kEvents, kEventHeader, 3)) {
    const double id = row[0];
    if (id != std::floor(id)) throw Error(Errc::InvalidEvents, "trial_id must be an integer");
    b.events.push_back({static_cast<int>(id), row[1], row[2]});
  }

  b.validate();
  return b;
}

void write_bundle(const ParticipantBundle& b, const fs::path& dir) {
  b.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(Errc::IoError, "cannot create directory " + dir.string());

  ordered_json manifest;
  manifest["participant_id"] = b.participant_id;
  manifest["eeg_sample_rate_hz"] = b.recording.sample_rate_hz;
  manifest["channel_names"] = b.recording.channel_names;
  manifest["eeg_samples"] = b.recording.samples();
  manifest["kin_sample_rate_hz"] = b.kinematics.sample_rate_hz;
  manifest["kin_samples"] = b.kinematics.samples();
  manifest["ica_cleaned"] = b.provenance.ica_cleaned;
  manifest["source"] = b.provenance.source;
  write_text(dir / kManifest, manifest.dump(2) + "\n");

  {
    const auto flat = b.recording.data.flat();
    std::vector<std::uint32_t> raw(flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) {
      const auto f = static_cast<float>(flat[i]);
      if (!std::isfinite(f)) throw Error(Errc::RejectedNonFinite, "EEG value overflows float32");
      raw[i] = to_little_endian(std::bit_cast<std::uint32_t>(f));
    }
    std::ofstream out(dir / kEeg, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot write " + (dir / kEeg).string());
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(float)));
    if (!out) throw Error(Errc::IoError, "write failed for " + (dir / kEeg).string());
  }

  std::string kin = std::string(kKinHeader) + "\n";
  const auto& track = b.kinematics;
  for (std::size_t i = 0; i < track.samples(); ++i) {
    kin += format_double(static_cast<double>(i) / track.sample_rate_hz);
    for (std::size_t a = 0; a < 3; ++a) kin += "," + format_double(track.data(i, a));
    kin += "\n";
  }
  write_text(dir / kKinematics, kin);

  std::string events = std::string(kEventHeader) + "\n";
  for (const auto& e : b.events)
    events += std::to_string(e.trial_id) + "," + format_double(e.onset_s) + "," + format_double(e.rest_s) + "\n";
  write_text(dir / kEvents, events);

  if (b.recording.preprocessing_log.empty()) {
    fs::remove(dir / kLog, ec);
  } else {
    ordered_json log = ordered_json::array();
    for (const auto& entry : b.recording.preprocessing_log)
      log.push_back({{"step", entry.step}, {"params", entry.params}});
    write_text(dir / kLog, log.dump(2) + "\n");
  }
}

}  // namespace premov::dataio
