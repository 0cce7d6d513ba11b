#include "poolsim/io.hpp"

#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "poolsim/engulf.hpp"

namespace poolsim {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

namespace {

std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("not an unsigned integer: '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

constexpr std::string_view kCsvHeader = "time,kind,mass,radius,rounds,flag";

}  // namespace

std::string trajectory_to_csv(const Trajectory& traj) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& e : traj.events) {
    out += format_double(e.time);
    out += ',';
    out += to_string(e.kind);
    out += ',';
    out += std::to_string(e.mass_after);
    out += ',';
    out += format_double(e.radius_after);
    out += ',';
    for (std::size_t i = 0; i < e.rounds.size(); ++i) {
      if (i > 0) out += ';';
      out += std::to_string(e.rounds[i]);
    }
    out += ',';
    out += e.flag ? '1' : '0';
    out += '\n';
  }
  return out;
}

Trajectory trajectory_from_csv(std::string_view text) {
  Trajectory traj;
  std::size_t line_no = 0;
  std::uint64_t prev_mass = 1;
  bool header_seen = false;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kCsvHeader) {
        throw std::runtime_error("trajectory csv: unexpected header on line 1");
      }
      header_seen = true;
      continue;
    }
    try {
      const auto f = split(line, ',');
      if (f.size() != 6) throw std::invalid_argument("expected 6 fields");
      TrajectoryEvent e;
      e.time = parse_double(f[0]);
      e.kind = parse_event_kind(f[1]);
      e.mass_after = parse_u64(f[2]);
      e.radius_after = parse_double(f[3]);
      if (!f[4].empty()) {
        for (auto r : split(f[4], ';')) e.rounds.push_back(parse_u64(r));
      }
      if (f[5] != "0" && f[5] != "1") throw std::invalid_argument("flag must be 0 or 1");
      e.flag = f[5] == "1";
      const std::uint64_t sum = std::accumulate(e.rounds.begin(), e.rounds.end(), std::uint64_t{0});
      const std::uint64_t base = traj.events.empty() ? 1 : prev_mass;
      if (e.mass_after < base + sum) throw std::invalid_argument("mass below cascade total");
      e.arrivals = e.mass_after - base - sum;
      prev_mass = e.mass_after;
      traj.events.push_back(std::move(e));
    } catch (const std::exception& ex) {
      throw std::runtime_error("trajectory csv line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  if (!header_seen) throw std::runtime_error("trajectory csv: missing header");
  for (const auto& e : traj.events) {
    if (e.flag && e.kind == EventKind::cap_hit) traj.exploded_at = e.time;
  }
  traj.horizon = traj.events.empty() ? 0.0 : traj.events.back().time;
  return traj;
}

nlohmann::json event_to_json(const TrajectoryEvent& e) {
  return {{"time", e.time},
          {"kind", std::string(to_string(e.kind))},
          {"mass_after", e.mass_after},
          {"radius_after", e.radius_after},
          {"arrivals", e.arrivals},
          {"rounds", e.rounds},
          {"flag", e.flag}};
}

TrajectoryEvent event_from_json(const nlohmann::json& j) {
  TrajectoryEvent e;
  e.time = j.at("time").get<double>();
  e.kind = parse_event_kind(j.at("kind").get<std::string>());
  e.mass_after = j.at("mass_after").get<std::uint64_t>();
  e.radius_after = j.at("radius_after").get<double>();
  e.arrivals = j.at("arrivals").get<std::uint64_t>();
  e.rounds = j.at("rounds").get<std::vector<std::uint64_t>>();
  e.flag = j.at("flag").get<bool>();
  return e;
}

std::string trajectory_to_jsonl(const Trajectory& traj) {
  std::string out;
  for (const auto& e : traj.events) {
    out += event_to_json(e).dump();
    out += '\n';
  }
  return out;
}

Trajectory trajectory_from_jsonl(std::string_view text) {
  Trajectory traj;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    try {
      traj.events.push_back(event_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& ex) {
      throw std::runtime_error("trajectory jsonl line " + std::to_string(line_no) + ": " +
                               ex.what());
    }
  }
  for (const auto& e : traj.events) {
    if (e.flag && e.kind == EventKind::cap_hit) traj.exploded_at = e.time;
  }
  traj.horizon = traj.events.empty() ? 0.0 : traj.events.back().time;
  return traj;
}

std::string quantiles_to_csv(const std::vector<QuantileRow>& rows) {
  std::string out = "time,q10,q50,q90,min,max\n";
  for (const auto& r : rows) {
    out += format_double(r.time) + ',' + format_double(r.q10) + ',' + format_double(r.q50) + ',' +
           format_double(r.q90) + ',' + format_double(r.min) + ',' + format_double(r.max) + '\n';
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  write_text_file(path, trajectory_to_csv(traj));
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  try {
    return trajectory_from_csv(read_text_file(path));
  } catch (const std::exception& ex) {
    throw std::runtime_error(path.string() + ": " + ex.what());
  }
}

}  // namespace poolsim
