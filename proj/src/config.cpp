#include "kernspec/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include "kernspec/errors.hpp"

namespace kernspec {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* name : allowed)
      if (it.key() == name) known = true;
    if (!known) throw ConfigError("unknown field '" + it.key() + "' in " + where);
  }
}

double get_real(const json& obj, const char* key, const std::string& where) {
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(where + "." + key + " must be finite");
  return x;
}

std::uint64_t get_unsigned(const json& v, const std::string& what) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ConfigError(what + " must be a nonnegative integer");
}

int get_int(const json& v, const std::string& what) {
  if (!v.is_number_integer()) throw ConfigError(what + " must be an integer");
  const auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    throw ConfigError(what + " is out of range");
  return static_cast<int>(x);
}

std::vector<std::size_t> get_size_list(const json& v, const std::string& what) {
  if (!v.is_array() || v.empty()) throw ConfigError(what + " must be a nonempty array of integers");
  std::vector<std::size_t> out;
  for (const auto& x : v) out.push_back(static_cast<std::size_t>(get_unsigned(x, what + " entry")));
  return out;
}

std::vector<double> get_real_list(const json& v, const std::string& what) {
  if (!v.is_array() || v.empty()) throw ConfigError(what + " must be a nonempty array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(what + " entries must be numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

RegularityClass parse_regularity(const json& j, const std::string& where) {
  reject_unknown(j, where, {"tag", "delta", "s"});
  RegularityClass reg;
  if (j.contains("tag")) {
    if (!j["tag"].is_string()) throw ConfigError(where + ".tag must be a string");
    reg.tag = regularity_tag_from_string(j["tag"].get<std::string>());
  }
  if (!j.contains("delta")) throw ConfigError(where + ".delta is required");
  reg.delta = get_real(j, "delta", where);
  if (j.contains("s")) reg.s = get_int(j["s"], where + ".s");
  if (reg.s < 0) throw ConfigError(where + ".s must be >= 0");
  return reg;
}

json regularity_json(const RegularityClass& reg) {
  return json{{"tag", to_string(reg.tag)}, {"delta", reg.delta}, {"s", reg.s}};
}

KernelSpec parse_kernel(const json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j, "kernel",
                 {"family", "p0", "p1", "r", "d", "compose", "table", "table_csv", "synthetic", "k_max", "l_max"});
  KernelSpec spec;
  if (!j.contains("family") || !j["family"].is_string()) throw ConfigError("kernel.family (string) is required");
  spec.family = family_from_string(j["family"].get<std::string>());
  if (j.contains("p0")) spec.p0 = get_real(j, "p0", "kernel");
  if (j.contains("p1")) spec.p1 = get_real(j, "p1", "kernel");
  if (j.contains("r")) spec.r = get_real(j, "r", "kernel");
  if (j.contains("d")) spec.d = get_int(j["d"], "kernel.d");
  if (j.contains("compose")) spec.compose = get_int(j["compose"], "kernel.compose");
  if (spec.compose < 1) throw ConfigError("kernel.compose must be >= 1");
  if (j.contains("k_max")) spec.limits.k_max = static_cast<std::size_t>(get_unsigned(j["k_max"], "kernel.k_max"));
  if (j.contains("l_max")) spec.limits.l_max = get_int(j["l_max"], "kernel.l_max");
  if (spec.limits.k_max < 1) throw ConfigError("kernel.k_max must be >= 1");
  if (j.contains("table") && j.contains("table_csv")) throw ConfigError("kernel.table and kernel.table_csv are exclusive");
  if (j.contains("table")) {
    const json& t = j["table"];
    if (!t.is_array()) throw ConfigError("kernel.table must be an array of [t, f] pairs");
    for (const auto& row : t) {
      if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number())
        throw ConfigError("kernel.table rows must be [t, f] number pairs");
      spec.table.emplace_back(row[0].get<double>(), row[1].get<double>());
    }
  }
  if (j.contains("table_csv")) {
    if (!j["table_csv"].is_string()) throw ConfigError("kernel.table_csv must be a path string");
    std::filesystem::path p = j["table_csv"].get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    spec.table = read_profile_csv(p);
  }
  if (spec.family == KernelSpec::Family::custom && spec.table.empty())
    throw ConfigError("custom kernels need kernel.table or kernel.table_csv");
  if (spec.family != KernelSpec::Family::custom && !spec.table.empty())
    throw ConfigError("kernel.table is only valid for the custom family");
  if (j.contains("synthetic")) {
    const json& s = j["synthetic"];
    reject_unknown(s, "kernel.synthetic", {"tag", "delta", "s", "scale"});
    json reg = s;
    reg.erase("scale");
    spec.synthetic = parse_regularity(reg, "kernel.synthetic");
    if (s.contains("scale")) spec.synthetic_scale = get_real(s, "scale", "kernel.synthetic");
  }
  return spec;
}

}  // namespace

std::vector<std::pair<double, double>> read_profile_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open profile table " + path.string());
  std::vector<std::pair<double, double>> table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string a, b, extra;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || std::getline(row, extra, ','))
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected two comma-separated columns");
    try {
      std::size_t pa = 0, pb = 0;
      const double t = std::stod(a, &pa);
      const double f = std::stod(b, &pb);
      table.emplace_back(t, f);
    } catch (const std::invalid_argument&) {
      if (table.empty() && line_no == 1) continue;  // header row
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": not a number");
    } catch (const std::out_of_range&) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": number out of range");
    }
  }
  if (table.empty()) throw ConfigError("profile table " + path.string() + " is empty");
  return table;
}

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j, "config",
                 {"kernel", "study", "n_grid", "n", "indices", "trials", "alpha", "seed", "R", "i", "output_dir",
                  "threads", "residual_norms", "regularity", "rate_grid", "envelope"});
  RunConfig c;
  if (!j.contains("kernel")) throw ConfigError("config.kernel is required");
  c.kernel = parse_kernel(j["kernel"], base_dir);
  if (j.contains("study")) {
    if (!j["study"].is_string()) throw ConfigError("config.study must be a string");
    c.study = j["study"].get<std::string>();
  }
  if (j.contains("n_grid")) c.n_grid = get_size_list(j["n_grid"], "config.n_grid");
  if (j.contains("n")) c.n = static_cast<std::size_t>(get_unsigned(j["n"], "config.n"));
  if (j.contains("indices")) c.indices = get_size_list(j["indices"], "config.indices");
  if (j.contains("trials")) c.trials = static_cast<std::size_t>(get_unsigned(j["trials"], "config.trials"));
  if (j.contains("alpha")) c.alpha = get_real(j, "alpha", "config");
  if (j.contains("seed")) c.seed = get_unsigned(j["seed"], "config.seed");
  if (j.contains("R")) c.R = static_cast<std::size_t>(get_unsigned(j["R"], "config.R"));
  if (j.contains("i")) c.i = static_cast<std::size_t>(get_unsigned(j["i"], "config.i"));
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) throw ConfigError("config.output_dir must be a string");
    c.output_dir = j["output_dir"].get<std::string>();
  }
  if (j.contains("threads")) c.threads = static_cast<std::size_t>(get_unsigned(j["threads"], "config.threads"));
  if (j.contains("residual_norms")) {
    if (!j["residual_norms"].is_boolean()) throw ConfigError("config.residual_norms must be a boolean");
    c.residual_norms = j["residual_norms"].get<bool>();
  }
  if (j.contains("regularity")) c.regularity = parse_regularity(j["regularity"], "config.regularity");
  if (j.contains("rate_grid")) {
    const json& g = j["rate_grid"];
    reject_unknown(g, "config.rate_grid", {"deltas", "s", "betas"});
    if (g.contains("deltas")) c.rate_deltas = get_real_list(g["deltas"], "config.rate_grid.deltas");
    if (g.contains("s")) c.rate_s = get_int(g["s"], "config.rate_grid.s");
    if (g.contains("betas")) c.rate_betas = get_real_list(g["betas"], "config.rate_grid.betas");
  }
  if (j.contains("envelope")) {
    const json& e = j["envelope"];
    reject_unknown(e, "config.envelope", {"exponential_rate"});
    if (e.contains("exponential_rate")) c.envelope_exponential_rate = get_real(e, "exponential_rate", "config.envelope");
  }

  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("config.alpha must lie in (0, 1)");
  if (c.n < 1) throw ConfigError("config.n must be >= 1");
  if (c.threads < 1) throw ConfigError("config.threads must be >= 1");
  for (std::size_t n : c.n_grid)
    if (n < 1) throw ConfigError("config.n_grid entries must be >= 1");
  for (std::size_t i : c.indices)
    if (i < 1) throw ConfigError("config.indices are 1-based");
  if (c.i < 1) throw ConfigError("config.i is 1-based");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j, path.parent_path());
}

json to_json(const KernelSpec& spec) {
  json k{{"family", to_string(spec.family)},
         {"p0", spec.p0},
         {"p1", spec.p1},
         {"r", spec.r},
         {"d", spec.d},
         {"compose", spec.compose},
         {"k_max", spec.limits.k_max},
         {"l_max", spec.limits.l_max}};
  if (!spec.table.empty()) {
    json t = json::array();
    for (const auto& [x, f] : spec.table) t.push_back({x, f});
    k["table"] = t;
  }
  if (spec.family == KernelSpec::Family::synthetic) {
    json s = regularity_json(spec.synthetic);
    s["scale"] = spec.synthetic_scale;
    k["synthetic"] = s;
  }
  return k;
}

json to_json(const RunConfig& c) {
  json j{{"kernel", to_json(c.kernel)},
         {"study", c.study},
         {"n_grid", c.n_grid},
         {"n", c.n},
         {"indices", c.indices},
         {"trials", c.trials},
         {"alpha", c.alpha},
         {"seed", c.seed},
         {"R", c.R},
         {"i", c.i},
         {"output_dir", c.output_dir},
         {"threads", c.threads},
         {"residual_norms", c.residual_norms},
         {"rate_grid", {{"deltas", c.rate_deltas}, {"s", c.rate_s}, {"betas", c.rate_betas}}}};
  if (c.regularity) j["regularity"] = regularity_json(*c.regularity);
  if (c.envelope_exponential_rate) j["envelope"] = {{"exponential_rate", *c.envelope_exponential_rate}};
  return j;
}

}  // namespace kernspec
