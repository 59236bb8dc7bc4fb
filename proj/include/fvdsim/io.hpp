#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "fvdsim/decay_analysis.hpp"
#include "fvdsim/errors.hpp"
#include "fvdsim/evolution.hpp"

namespace fvd::io {

// 15 significant digits, '.' decimal point regardless of locale.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 15);
  return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Writes to a sibling temporary file and renames it over the target.
inline void atomic_write(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string());
  }
}

// Creates the output directory. An existing run (meta.json present) is only
// overwritten with force.
inline void prepare_output_dir(const std::filesystem::path& dir, bool force) {
  std::error_code ec;
  if (std::filesystem::exists(dir / "meta.json", ec) && !force)
    throw IoError("output directory " + dir.string() + " already holds results; use --force to overwrite");
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) { row_strings(header); }

  void row(const std::vector<double>& values) {
    std::vector<std::string> s;
    s.reserve(values.size());
    for (double v : values) s.push_back(format_double(v));
    row_strings(s);
  }

  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ += ',';
      out_ += cells[i];
    }
    out_ += '\n';
  }

  const std::string& str() const { return out_; }

 private:
  std::string out_;
};

// t_us, omega_t_over_2pi, then the trajectory columns.
inline std::string trajectory_csv(const Trajectory& traj, double omega) {
  std::vector<std::string> header{"t_us", "omega_t_over_2pi"};
  header.insert(header.end(), traj.columns.begin(), traj.columns.end());
  CsvWriter w(header);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    std::vector<double> r{traj.times[i], omega * traj.times[i] / kTwoPi};
    r.insert(r.end(), traj.rows[i].begin(), traj.rows[i].end());
    w.row(r);
  }
  return w.str();
}

// Matrix layout shared by the phase and rate diagrams: one row per R_b/a,
// one column per alpha; the corner cell names both axes.
inline std::string matrix_csv(const std::vector<double>& rows, const std::vector<double>& cols,
                              const std::vector<double>& values, std::string_view corner = "rb_over_a\\alpha") {
  std::vector<std::string> header{std::string(corner)};
  for (double c : cols) header.push_back(format_double(c));
  CsvWriter w(header);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::vector<double> line{rows[r]};
    for (std::size_t c = 0; c < cols.size(); ++c) line.push_back(values[r * cols.size() + c]);
    w.row(line);
  }
  return w.str();
}

inline nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

// {kind, params, window, r2, inputs_hash}
inline nlohmann::json fit_record(std::string_view kind, nlohmann::json params, std::optional<FitWindow> window,
                                 double r2, std::string_view inputs_hash) {
  nlohmann::json j;
  j["kind"] = kind;
  j["params"] = std::move(params);
  j["window"] = window ? nlohmann::json::array({window->t_a, window->t_b}) : nlohmann::json(nullptr);
  j["r2"] = number_or_null(r2);
  j["inputs_hash"] = inputs_hash;
  return j;
}

inline nlohmann::json exp_fit_record(const ExpFit& f, double omega, std::string_view inputs_hash) {
  return fit_record("exponential",
                    {{"A", f.A}, {"gamma", f.gamma}, {"gamma_over_omega", f.gamma / omega}, {"n_points", f.n_points},
                     {"residual_rms", f.residual_rms}},
                    f.window, f.r_squared, inputs_hash);
}

inline nlohmann::json scaling_fit_record(const RateScalingFit& f, std::string_view inputs_hash,
                                         nlohmann::json extra = nlohmann::json::object()) {
  nlohmann::json p = std::move(extra);
  switch (f.kind) {
    case ScalingKind::confinement: p["b"] = f.first; p["p"] = f.second; break;
    case ScalingKind::gap: p["k"] = f.first; p["q"] = f.second; break;
    case ScalingKind::q_vs_alpha: p["u"] = f.first; p["alpha0"] = f.second; break;
  }
  p["n_points"] = f.n_points;
  return fit_record(to_string(f.kind), p, FitWindow{f.x_min, f.x_max}, f.r_squared, inputs_hash);
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace fvd::io
