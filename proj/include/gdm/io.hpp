#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "gdm/observables.hpp"
#include "gdm/pde.hpp"
#include "gdm/simulator.hpp"

namespace gdm::io {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// Shortest round-trip decimal form; independent of the global locale.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc{}) throw std::runtime_error("format_double failed");
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
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return s;
}

/// Writes to `path.tmp` and renames over `path`, so readers never see a partial file.
inline void atomic_write(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline void write_json(const fs::path& path, const Json& j) { atomic_write(path, j.dump(2) + "\n"); }

/// Small CSV builder: numeric cells go through format_double.
class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) body_ += ',';
      body_ += header[i];
    }
    body_ += '\n';
  }

  Csv& cell(double v) { return raw(format_double(v)); }
  Csv& cell(std::uint64_t v) { return raw(std::to_string(v)); }
  Csv& cell(const std::string& s) { return raw(s); }
  void end_row() {
    body_ += '\n';
    first_ = true;
  }

  const std::string& str() const { return body_; }
  void save(const fs::path& path) const { atomic_write(path, body_); }

 private:
  Csv& raw(const std::string& s) {
    if (!first_) body_ += ',';
    body_ += s;
    first_ = false;
    return *this;
  }
  std::string body_;
  bool first_ = true;
};

/// Row-major matrix without header.
inline std::string matrix_csv(const std::vector<double>& values, std::size_t rows, std::size_t cols) {
  std::string s;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (j) s += ',';
      s += format_double(values[i * cols + j]);
    }
    s += '\n';
  }
  return s;
}

inline Json point_json(const Point& p, int dim) {
  Json a = Json::array();
  for (int i = 0; i < dim; ++i) a.push_back(p[i]);
  return a;
}

// ---------------------------------------------------------------------------
// Simulator outputs.

inline std::string events_csv(const std::vector<Event>& events, int dim) {
  std::vector<std::string> header{"t", "kind", "plant_or_seed_index", "kappa"};
  const char* ax[] = {"1", "2"};
  for (int i = 0; i < dim; ++i) header.push_back(std::string("x") + ax[i]);
  for (int i = 0; i < dim; ++i) header.push_back(std::string("y") + ax[i]);
  Csv csv(header);
  for (const auto& e : events) {
    csv.cell(e.time).cell(to_string(e.kind)).cell(static_cast<std::uint64_t>(e.index)).cell(e.kappa);
    for (int i = 0; i < dim; ++i) csv.cell(e.x[i]);
    for (int i = 0; i < dim; ++i) csv.cell(e.y[i]);
    csv.end_row();
  }
  return csv.str();
}

inline std::string moments_csv(const MomentSeries& m) {
  Csv csv({"t", "N_p", "N_s"});
  for (std::size_t i = 0; i < m.size(); ++i) {
    csv.cell(m.times[i]).cell(static_cast<std::uint64_t>(m.plants[i])).cell(static_cast<std::uint64_t>(m.seeds[i]));
    csv.end_row();
  }
  return csv.str();
}

inline Json snapshot_json(const Snapshot& s, int dim) {
  Json plants = Json::array();
  for (const auto& p : s.plants.positions) plants.push_back(point_json(p, dim));
  Json seeds = Json::array();
  for (const auto& sd : s.seeds.seeds) seeds.push_back(Json::array({point_json(sd.origin, dim), point_json(sd.position, dim)}));
  return Json{{"t", s.t}, {"plants", plants}, {"seeds", seeds}};
}

inline Json kde_sidecar(const KdeGrid& k, std::size_t points) {
  return Json{{"origin", {k.grid.lower[0], k.grid.lower[1]}},
              {"spacing", {k.grid.spacing[0], k.grid.spacing[1]}},
              {"shape", {k.grid.count[0], k.grid.count[1]}},
              {"layout", "row i is x-node i, column j is y-node j"},
              {"bandwidth", {k.bandwidth[0], k.bandwidth[1]}},
              {"bandwidth_rule", "scott"},
              {"points", points}};
}

// ---------------------------------------------------------------------------
// PDE outputs.

inline std::string norms_csv(const std::vector<NormRecord>& records) {
  Csv csv({"t", "l2_f", "l2_g", "h1_f", "h1_g", "bound_f", "bound_g"});
  for (const auto& r : records) {
    csv.cell(r.t).cell(r.l2_f).cell(r.l2_g).cell(r.h1_f).cell(r.h1_g).cell(r.bound_f).cell(r.bound_g);
    csv.end_row();
  }
  return csv.str();
}

// ---------------------------------------------------------------------------

/// Provenance record written last, after every other output of a run.
struct RunManifest {
  std::string command;
  std::string tool_version;
  std::string config_hash;
  std::uint64_t master_seed = 0;
  std::string start_time;
  std::string end_time;
  std::vector<std::string> outputs;
  Json extra = Json::object();

  Json to_json() const {
    Json j{{"command", command},   {"tool_version", tool_version}, {"config_hash", config_hash},
           {"master_seed", master_seed}, {"start_time", start_time}, {"end_time", end_time},
           {"outputs", outputs}};
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    return j;
  }
};

}  // namespace gdm::io
