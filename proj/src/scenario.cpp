#include "seal/scenario.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "seal/errors.hpp"

namespace seal {

void ScenarioConfig::apply_default_starts() {
  if (!starts.empty()) return;
  // Fan out from the lower-left entry area; free in both builtin worlds.
  const std::vector<Pose2D> bank = {
      {1.5, 1.5, 0.0}, {1.5, 3.2, 0.0}, {3.2, 1.5, 1.5708},
      {3.2, 3.2, 0.0}, {5.0, 1.5, 0.0}, {1.5, 5.0, 0.0},
      {5.0, 3.2, 0.0}, {6.6, 1.5, 1.5708},
  };
  for (int i = 0; i < robots; ++i) starts.push_back(bank[i % bank.size()]);
}

void ScenarioConfig::validate() const {
  if (robots < 1) throw ConfigError("robots must be >= 1");
  if (resolution <= 0.0) throw ConfigError("resolution must be > 0");
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (dt <= 0.0) throw ConfigError("dt must be > 0");
  if (sensor.beam_count < 1) throw ConfigError("sensor_beams must be >= 1");
  if (sensor.fov <= 0.0 || sensor.fov > 2.0 * M_PI + 1e-9)
    throw ConfigError("sensor_fov must lie in (0, 2*pi]");
  if (sensor.range_max <= 0.0) throw ConfigError("sensor_range must be > 0");
  if (channel.d0 <= 0.0) throw ConfigError("rssi_d0 must be > 0");
  if (channel.path_loss_exponent <= 0.0)
    throw ConfigError("rssi_exponent must be > 0");
  if (channel.shadowing_sigma_db < 0.0)
    throw ConfigError("rssi_sigma must be >= 0");
  if (theta_explore <= 0.0 || theta_explore >= 1.0)
    throw ConfigError("theta_explore must lie in (0, 1)");
  if (hypotheses < 1) throw ConfigError("hypotheses must be >= 1");
  if (k_candidates < 1) throw ConfigError("k_candidates must be >= 1");
  if (localization_mode != "full" && localization_mode != "rloc_only")
    throw ConfigError("localization_mode must be full or rloc_only");
  if (baseline != "none" && baseline != "frontier")
    throw ConfigError("baseline must be none or frontier");
  if (static_cast<int>(starts.size()) < robots && !starts.empty())
    throw ConfigError("fewer start poses than robots");
}

namespace {

struct Parser {
  std::map<std::string, std::function<void(ScenarioConfig&, const std::string&)>> keys;

  template <typename T>
  static T parse_num(const std::string& v) {
    std::istringstream in(v);
    T out;
    in >> out;
    if (in.fail()) throw SealError("not a number: " + v);
    std::string rest;
    in >> rest;
    if (!rest.empty()) throw SealError("trailing characters: " + v);
    return out;
  }
};

Parser build_parser() {
  Parser p;
  auto num = [](double ScenarioConfig::*field) {
    return [field](ScenarioConfig& c, const std::string& v) {
      c.*field = Parser::parse_num<double>(v);
    };
  };
  auto integer = [](int ScenarioConfig::*field) {
    return [field](ScenarioConfig& c, const std::string& v) {
      c.*field = Parser::parse_num<int>(v);
    };
  };
  p.keys["world"] = [](ScenarioConfig& c, const std::string& v) { c.world = v; };
  p.keys["resolution"] = num(&ScenarioConfig::resolution);
  p.keys["robots"] = integer(&ScenarioConfig::robots);
  p.keys["seed"] = [](ScenarioConfig& c, const std::string& v) {
    c.seed = Parser::parse_num<std::uint64_t>(v);
  };
  p.keys["steps"] = [](ScenarioConfig& c, const std::string& v) {
    c.steps = Parser::parse_num<long>(v);
  };
  p.keys["dt"] = num(&ScenarioConfig::dt);
  p.keys["v_max"] = [](ScenarioConfig& c, const std::string& v) {
    c.limits.v_max = Parser::parse_num<double>(v);
  };
  p.keys["w_max"] = [](ScenarioConfig& c, const std::string& v) {
    c.limits.w_max = Parser::parse_num<double>(v);
  };
  p.keys["sensor_fov"] = [](ScenarioConfig& c, const std::string& v) {
    c.sensor.fov = Parser::parse_num<double>(v);
  };
  p.keys["sensor_range"] = [](ScenarioConfig& c, const std::string& v) {
    c.sensor.range_max = Parser::parse_num<double>(v);
  };
  p.keys["sensor_beams"] = [](ScenarioConfig& c, const std::string& v) {
    c.sensor.beam_count = Parser::parse_num<int>(v);
  };
  p.keys["sensor_noise_sigma"] = [](ScenarioConfig& c, const std::string& v) {
    c.sensor.range_noise_sigma = Parser::parse_num<double>(v);
  };
  p.keys["rssi_p0"] = [](ScenarioConfig& c, const std::string& v) {
    c.channel.p0_dbm = Parser::parse_num<double>(v);
  };
  p.keys["rssi_d0"] = [](ScenarioConfig& c, const std::string& v) {
    c.channel.d0 = Parser::parse_num<double>(v);
  };
  p.keys["rssi_exponent"] = [](ScenarioConfig& c, const std::string& v) {
    c.channel.path_loss_exponent = Parser::parse_num<double>(v);
  };
  p.keys["rssi_sigma"] = [](ScenarioConfig& c, const std::string& v) {
    c.channel.shadowing_sigma_db = Parser::parse_num<double>(v);
  };
  p.keys["connectivity_dbm"] = num(&ScenarioConfig::connectivity_dbm);
  p.keys["gp_lengthscale"] = [](ScenarioConfig& c, const std::string& v) {
    c.gp_kernel.lengthscale = Parser::parse_num<double>(v);
  };
  p.keys["gp_signal_var"] = [](ScenarioConfig& c, const std::string& v) {
    c.gp_kernel.signal_var = Parser::parse_num<double>(v);
  };
  p.keys["gp_noise_var"] = [](ScenarioConfig& c, const std::string& v) {
    c.gp_kernel.noise_var = Parser::parse_num<double>(v);
  };
  p.keys["gp_max_points"] = integer(&ScenarioConfig::gp_max_points);
  p.keys["gp_bin_m"] = num(&ScenarioConfig::gp_bin_m);
  p.keys["gp_support_radius"] = num(&ScenarioConfig::gp_support_radius);
  p.keys["gp_em_iters"] = integer(&ScenarioConfig::gp_em_iters);
  p.keys["theta_explore"] = num(&ScenarioConfig::theta_explore);
  p.keys["hypotheses"] = integer(&ScenarioConfig::hypotheses);
  p.keys["likelihood_sigma"] = num(&ScenarioConfig::likelihood_sigma);
  p.keys["likelihood_max_cells"] = integer(&ScenarioConfig::likelihood_max_cells);
  p.keys["map_rate"] = num(&ScenarioConfig::map_rate);
  p.keys["process_sigma"] = num(&ScenarioConfig::process_sigma);
  p.keys["rloc_sigma"] = num(&ScenarioConfig::rloc_sigma);
  p.keys["beacon_ema_alpha"] = num(&ScenarioConfig::beacon_ema_alpha);
  p.keys["k_candidates"] = integer(&ScenarioConfig::k_candidates);
  p.keys["graph_cap"] = integer(&ScenarioConfig::graph_cap);
  p.keys["motion_margin"] = num(&ScenarioConfig::motion_margin);
  p.keys["inflation_depth"] = integer(&ScenarioConfig::inflation_depth);
  p.keys["hough_votes"] = integer(&ScenarioConfig::hough_votes);
  p.keys["corner_max_distance"] = num(&ScenarioConfig::corner_max_distance);
  p.keys["heading_alignment"] = integer(&ScenarioConfig::heading_alignment);
  p.keys["k_share"] = integer(&ScenarioConfig::k_share);
  p.keys["plan_every"] = integer(&ScenarioConfig::plan_every);
  p.keys["lambda_peer"] = num(&ScenarioConfig::lambda_peer);
  p.keys["evidence_beam_stride"] = integer(&ScenarioConfig::evidence_beam_stride);
  p.keys["odom_sigma_v"] = num(&ScenarioConfig::odom_sigma_v);
  p.keys["odom_sigma_w"] = num(&ScenarioConfig::odom_sigma_w);
  p.keys["localization_mode"] = [](ScenarioConfig& c, const std::string& v) {
    c.localization_mode = v;
  };
  p.keys["baseline"] = [](ScenarioConfig& c, const std::string& v) {
    c.baseline = v;
  };
  return p;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text) {
  static const Parser parser = build_parser();
  ScenarioConfig config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value'", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) throw ConfigError("missing value for '" + key + "'", line_no);

    if (key.rfind("start_", 0) == 0) {
      const int idx = [&] {
        try {
          return std::stoi(key.substr(6));
        } catch (...) {
          throw ConfigError("bad start pose key '" + key + "'", line_no);
        }
      }();
      std::istringstream vs(value);
      Pose2D pose;
      if (!(vs >> pose.x >> pose.y >> pose.theta))
        throw ConfigError("start pose needs 'x y theta'", line_no);
      if (idx < 0 || idx > 63) throw ConfigError("start index out of range", line_no);
      if (static_cast<int>(config.starts.size()) <= idx)
        config.starts.resize(idx + 1);
      config.starts[idx] = pose;
      continue;
    }

    auto it = parser.keys.find(key);
    if (it == parser.keys.end())
      throw ConfigError("unknown key '" + key + "'", line_no);
    try {
      it->second(config, value);
    } catch (const std::exception& e) {
      throw ConfigError(std::string(e.what()) + " (key '" + key + "')", line_no);
    }
  }
  config.apply_default_starts();
  config.validate();
  return config;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string scenario_to_text(const ScenarioConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "world = " << c.world << "\n";
  out << "resolution = " << c.resolution << "\n";
  out << "robots = " << c.robots << "\n";
  for (std::size_t i = 0; i < c.starts.size(); ++i)
    out << "start_" << i << " = " << c.starts[i].x << " " << c.starts[i].y << " "
        << c.starts[i].theta << "\n";
  out << "seed = " << c.seed << "\n";
  out << "steps = " << c.steps << "\n";
  out << "dt = " << c.dt << "\n";
  out << "v_max = " << c.limits.v_max << "\n";
  out << "w_max = " << c.limits.w_max << "\n";
  out << "sensor_fov = " << c.sensor.fov << "\n";
  out << "sensor_range = " << c.sensor.range_max << "\n";
  out << "sensor_beams = " << c.sensor.beam_count << "\n";
  out << "sensor_noise_sigma = " << c.sensor.range_noise_sigma << "\n";
  out << "rssi_p0 = " << c.channel.p0_dbm << "\n";
  out << "rssi_d0 = " << c.channel.d0 << "\n";
  out << "rssi_exponent = " << c.channel.path_loss_exponent << "\n";
  out << "rssi_sigma = " << c.channel.shadowing_sigma_db << "\n";
  out << "connectivity_dbm = " << c.connectivity_dbm << "\n";
  out << "gp_lengthscale = " << c.gp_kernel.lengthscale << "\n";
  out << "gp_signal_var = " << c.gp_kernel.signal_var << "\n";
  out << "gp_noise_var = " << c.gp_kernel.noise_var << "\n";
  out << "gp_max_points = " << c.gp_max_points << "\n";
  out << "gp_bin_m = " << c.gp_bin_m << "\n";
  out << "gp_support_radius = " << c.gp_support_radius << "\n";
  out << "gp_em_iters = " << c.gp_em_iters << "\n";
  out << "theta_explore = " << c.theta_explore << "\n";
  out << "hypotheses = " << c.hypotheses << "\n";
  out << "likelihood_sigma = " << c.likelihood_sigma << "\n";
  out << "likelihood_max_cells = " << c.likelihood_max_cells << "\n";
  out << "map_rate = " << c.map_rate << "\n";
  out << "process_sigma = " << c.process_sigma << "\n";
  out << "rloc_sigma = " << c.rloc_sigma << "\n";
  out << "beacon_ema_alpha = " << c.beacon_ema_alpha << "\n";
  out << "k_candidates = " << c.k_candidates << "\n";
  out << "graph_cap = " << c.graph_cap << "\n";
  out << "motion_margin = " << c.motion_margin << "\n";
  out << "inflation_depth = " << c.inflation_depth << "\n";
  out << "hough_votes = " << c.hough_votes << "\n";
  out << "corner_max_distance = " << c.corner_max_distance << "\n";
  out << "heading_alignment = " << c.heading_alignment << "\n";
  out << "k_share = " << c.k_share << "\n";
  out << "plan_every = " << c.plan_every << "\n";
  out << "lambda_peer = " << c.lambda_peer << "\n";
  out << "evidence_beam_stride = " << c.evidence_beam_stride << "\n";
  out << "odom_sigma_v = " << c.odom_sigma_v << "\n";
  out << "odom_sigma_w = " << c.odom_sigma_w << "\n";
  out << "localization_mode = " << c.localization_mode << "\n";
  out << "baseline = " << c.baseline << "\n";
  return out.str();
}

}  // namespace seal
