#include "opnc/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace opnc {

using nlohmann::json;

namespace {

std::string summarize(const std::vector<ConfigIssue>& list) {
  std::ostringstream os;
  os << "invalid config";
  for (const auto& i : list) {
    os << "\n  ";
    if (i.line > 0) os << "line " << i.line << ": ";
    os << (i.field.empty() ? "/" : i.field) << ": " << i.message;
  }
  return os.str();
}

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

// Maps JSON pointers to the line where the value (or its key) starts.
std::map<std::string, int> locate_lines(const std::string& text) {
  struct Frame {
    bool object;
    std::string path;
    int index = 0;
    std::string key;
    bool expect_key = true;
  };
  std::map<std::string, int> lines;
  std::vector<Frame> stack;
  int line = 1;
  auto value_path = [&]() -> std::string {
    if (stack.empty()) return "";
    const Frame& f = stack.back();
    return f.path + "/" + (f.object ? escape_token(f.key) : std::to_string(f.index));
  };
  auto mark = [&](const std::string& p) { lines.emplace(p, line); };
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
    } else if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
    } else if (c == '"') {
      std::string s;
      ++i;
      while (i < text.size() && text[i] != '"') {
        if (text[i] == '\\' && i + 1 < text.size()) {
          s += text[i + 1];
          i += 2;
        } else {
          if (text[i] == '\n') ++line;
          s += text[i++];
        }
      }
      ++i;
      if (!stack.empty() && stack.back().object && stack.back().expect_key) {
        stack.back().key = s;
        stack.back().expect_key = false;
        mark(value_path());
      } else {
        mark(value_path());
      }
    } else if (c == '{' || c == '[') {
      std::string p = value_path();
      mark(p);
      stack.push_back({c == '{', p, 0, {}, true});
      ++i;
    } else if (c == '}' || c == ']') {
      if (!stack.empty()) stack.pop_back();
      ++i;
    } else if (c == ',') {
      if (!stack.empty()) {
        if (stack.back().object) stack.back().expect_key = true;
        else ++stack.back().index;
      }
      ++i;
    } else if (c == ':') {
      ++i;
    } else {
      mark(value_path());
      while (i < text.size() && std::string(",]}\n \t\r").find(text[i]) == std::string::npos) ++i;
    }
  }
  return lines;
}

struct Checker {
  std::map<std::string, int> lines;
  std::vector<ConfigIssue> issues;

  int line_of(std::string path) const {
    while (true) {
      auto it = lines.find(path);
      if (it != lines.end()) return it->second;
      auto pos = path.rfind('/');
      if (pos == std::string::npos) return 0;
      path = path.substr(0, pos);
    }
  }
  void error(const std::string& path, const std::string& msg) { issues.push_back({path, line_of(path), msg}); }

  void allow_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (!ok.count(it.key())) error(path + "/" + escape_token(it.key()), "unknown field");
    }
  }

  bool number(const json& j, const std::string& path, double& out) {
    if (!j.is_number()) {
      error(path, "expected a number");
      return false;
    }
    out = j.get<double>();
    return true;
  }
  bool integer(const json& j, const std::string& path, long long& out) {
    if (!j.is_number_integer()) {
      error(path, "expected an integer");
      return false;
    }
    out = j.get<long long>();
    return true;
  }
  bool string(const json& j, const std::string& path, std::string& out) {
    if (!j.is_string()) {
      error(path, "expected a string");
      return false;
    }
    out = j.get<std::string>();
    return true;
  }

  bool reception(const json& j, const std::string& path, ReceptionVector& out) {
    if (!j.is_array() || j.size() != 4) {
      error(path, "expected [p00, p10, p01, p11]");
      return false;
    }
    std::array<double, 4> v{};
    for (int k = 0; k < 4; ++k) {
      if (!number(j[k], path + "/" + std::to_string(k), v[k])) return false;
    }
    out = ReceptionVector::from_array(v);
    try {
      out.validate();
    } catch (const std::exception& e) {
      error(path, e.what());
      return false;
    }
    return true;
  }
};

json reception_json(const ReceptionVector& p) { return json::array({p.none, p.d1only, p.d2only, p.both}); }

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> list) : std::runtime_error(summarize(list)), issues(std::move(list)) {}

const char* arrival_kind_name(ArrivalKind k) {
  switch (k) {
    case ArrivalKind::Bernoulli: return "bernoulli";
    case ArrivalKind::BatchUniform: return "batch_uniform";
    case ArrivalKind::Poisson: return "poisson";
  }
  return "?";
}

std::vector<double> make_grid(double start, double stop, double step) {
  if (!(step > 0)) throw std::invalid_argument("theta step must be positive");
  if (!(stop >= start)) throw std::invalid_argument("theta stop must be >= start");
  std::vector<double> g;
  const auto n = static_cast<long long>(std::floor((stop - start) / step + 1e-9));
  if (n > 100000) throw std::invalid_argument("theta grid too large");
  for (long long i = 0; i <= n; ++i) g.push_back(start + static_cast<double>(i) * step);
  return g;
}

std::vector<double> parse_theta_grid(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ':')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad theta grid '" + spec + "', expected a:b:step");
    }
    if (used != tok.size()) throw std::invalid_argument("bad theta grid '" + spec + "', expected a:b:step");
    parts.push_back(v);
  }
  if (parts.size() != 3) throw std::invalid_argument("bad theta grid '" + spec + "', expected a:b:step");
  return make_grid(parts[0], parts[1], parts[2]);
}

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    int line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') ++line;
    }
    throw ConfigError({{"", line, std::string("JSON syntax error: ") + e.what()}});
  }
  Checker ck;
  ck.lines = locate_lines(text);
  ExperimentConfig cfg;
  if (!doc.is_object()) throw ConfigError({{"", 1, "top level must be an object"}});
  ck.allow_keys(doc, "",
                {"name", "mode", "channel", "combos", "schemes", "directions", "theta_grid", "theta_relative", "trials",
                 "horizon", "seed", "output", "arrivals", "batch_max", "pruning_period", "sampling_stride",
                 "fallback", "drain"});

  if (doc.contains("name")) ck.string(doc["name"], "/name", cfg.name);
  if (doc.contains("mode")) {
    std::string m;
    if (ck.string(doc["mode"], "/mode", m)) {
      if (m == "slotted") cfg.mode = ConfigMode::Slotted;
      else if (m == "rate_adaptation") cfg.mode = ConfigMode::RateAdaptation;
      else ck.error("/mode", "expected \"slotted\" or \"rate_adaptation\"");
    }
  }
  const bool ra = cfg.mode == ConfigMode::RateAdaptation;

  if (doc.contains("channel")) {
    const json& ch = doc["channel"];
    if (!ch.is_object()) {
      ck.error("/channel", "expected an object");
    } else {
      ck.allow_keys(ch, "/channel", {"mode", "states", "sequence"});
      bool ok = true;
      if (ch.contains("mode")) {
        std::string m;
        if (ck.string(ch["mode"], "/channel/mode", m)) {
          if (m == "iid") cfg.channel.mode = ChannelMode::Iid;
          else if (m == "periodic") cfg.channel.mode = ChannelMode::Periodic;
          else {
            ck.error("/channel/mode", "expected \"iid\" or \"periodic\"");
            ok = false;
          }
        }
      }
      if (!ch.contains("states") || !ch["states"].is_array() || ch["states"].empty()) {
        ck.error("/channel/states", "need a nonempty list of channel states");
        ok = false;
      } else {
        for (std::size_t i = 0; i < ch["states"].size(); ++i) {
          const json& s = ch["states"][i];
          std::string p = "/channel/states/" + std::to_string(i);
          if (!s.is_object()) {
            ck.error(p, "expected an object");
            ok = false;
            continue;
          }
          ck.allow_keys(s, p, {"id", "freq", "p"});
          ChannelState st;
          long long id = static_cast<long long>(i) + 1;
          if (s.contains("id") && !ck.integer(s["id"], p + "/id", id)) ok = false;
          st.id = static_cast<int>(id);
          if (!s.contains("freq")) st.freq = 1.0 / static_cast<double>(ch["states"].size());
          else if (!ck.number(s["freq"], p + "/freq", st.freq)) ok = false;
          if (!s.contains("p")) {
            ck.error(p + "/p", "missing reception vector");
            ok = false;
          } else if (!ck.reception(s["p"], p + "/p", st.p)) {
            ok = false;
          }
          cfg.channel.states.push_back(st);
        }
      }
      if (ch.contains("sequence")) {
        if (!ch["sequence"].is_array()) {
          ck.error("/channel/sequence", "expected a list of state ids");
          ok = false;
        } else {
          for (std::size_t i = 0; i < ch["sequence"].size(); ++i) {
            long long id = 0;
            if (ck.integer(ch["sequence"][i], "/channel/sequence/" + std::to_string(i), id))
              cfg.channel.sequence.push_back(static_cast<int>(id));
            else ok = false;
          }
        }
      }
      if (ok) {
        try {
          cfg.channel.validate();
        } catch (const std::exception& e) {
          ck.error("/channel", e.what());
        }
      }
    }
  } else if (!ra) {
    ck.error("/channel", "slotted mode needs a channel");
  }

  if (doc.contains("combos")) {
    const json& cb = doc["combos"];
    if (!cb.is_array() || cb.empty()) {
      ck.error("/combos", "need a nonempty list of combos");
    } else {
      for (std::size_t i = 0; i < cb.size(); ++i) {
        std::string p = "/combos/" + std::to_string(i);
        if (!cb[i].is_object()) {
          ck.error(p, "expected an object");
          continue;
        }
        ck.allow_keys(cb[i], p, {"T", "p"});
        Combo c;
        if (!cb[i].contains("T")) ck.error(p + "/T", "missing duration");
        else if (ck.number(cb[i]["T"], p + "/T", c.T) && !(c.T > 0)) ck.error(p + "/T", "duration must be positive");
        if (!cb[i].contains("p")) ck.error(p + "/p", "missing reception vector");
        else ck.reception(cb[i]["p"], p + "/p", c.p);
        cfg.combos.push_back(c);
      }
    }
  } else if (ra) {
    ck.error("/combos", "rate-adaptation mode needs combos");
  }

  if (!doc.contains("schemes")) {
    ck.error("/schemes", "missing scheme list");
  } else if (!doc["schemes"].is_array() || doc["schemes"].empty()) {
    ck.error("/schemes", "need a nonempty list of scheme names");
  } else {
    for (std::size_t i = 0; i < doc["schemes"].size(); ++i) {
      std::string p = "/schemes/" + std::to_string(i);
      std::string s;
      if (!ck.string(doc["schemes"][i], p, s)) continue;
      if (s == "blockcode") {
        if (ra) ck.error(p, "blockcode is only defined for slotted channels");
      } else {
        try {
          SchemeRef r = SchemeRef::parse(s);
          if (ra && (r.id == SchemeId::SevenOpDMW_q || r.id == SchemeId::SevenOpDMW_qinter))
            ck.error(p, "rate-adaptation mode uses 7op_ra");
          if (!ra && (r.id == SchemeId::SevenOpRA || r.fixed_combo >= 0))
            ck.error(p, "scheme '" + s + "' needs rate-adaptation mode");
          if (ra && r.fixed_combo >= static_cast<int>(cfg.combos.size()) && !cfg.combos.empty())
            ck.error(p, "fixed combo index out of range");
        } catch (const std::exception& e) {
          ck.error(p, e.what());
        }
      }
      cfg.schemes.push_back(s);
    }
  }

  if (doc.contains("directions")) {
    const json& d = doc["directions"];
    if (!d.is_array()) {
      ck.error("/directions", "expected a list of [d1, d2] pairs");
    } else {
      for (std::size_t i = 0; i < d.size(); ++i) {
        std::string p = "/directions/" + std::to_string(i);
        RatePoint r;
        if (!d[i].is_array() || d[i].size() != 2 || !ck.number(d[i][0], p + "/0", r.R1) ||
            !ck.number(d[i][1], p + "/1", r.R2)) {
          if (d[i].is_array() && d[i].size() == 2) continue;
          ck.error(p, "expected [d1, d2]");
          continue;
        }
        if (r.R1 < 0 || r.R2 < 0 || r.R1 + r.R2 <= 0) ck.error(p, "direction must be nonnegative and nonzero");
        cfg.directions.push_back(r);
      }
    }
  }

  if (doc.contains("theta_grid")) {
    const json& g = doc["theta_grid"];
    try {
      if (g.is_array()) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          double v = 0;
          if (ck.number(g[i], "/theta_grid/" + std::to_string(i), v)) cfg.theta_grid.push_back(v);
        }
      } else if (g.is_object()) {
        ck.allow_keys(g, "/theta_grid", {"start", "stop", "step"});
        double a = 0, b = 0, s = 0;
        if (!g.contains("start") || !g.contains("stop") || !g.contains("step")) {
          ck.error("/theta_grid", "need start, stop and step");
        } else if (ck.number(g["start"], "/theta_grid/start", a) && ck.number(g["stop"], "/theta_grid/stop", b) &&
                   ck.number(g["step"], "/theta_grid/step", s)) {
          cfg.theta_grid = make_grid(a, b, s);
        }
      } else if (g.is_string()) {
        cfg.theta_grid = parse_theta_grid(g.get<std::string>());
      } else {
        ck.error("/theta_grid", "expected a list, {start, stop, step} or \"a:b:step\"");
      }
    } catch (const std::exception& e) {
      ck.error("/theta_grid", e.what());
    }
    for (std::size_t i = 0; i < cfg.theta_grid.size(); ++i) {
      if (cfg.theta_grid[i] < 0) ck.error("/theta_grid", "theta must be nonnegative");
      if (i > 0 && !(cfg.theta_grid[i] > cfg.theta_grid[i - 1])) {
        ck.error("/theta_grid", "theta grid must be strictly increasing");
        break;
      }
    }
  }
  if (doc.contains("theta_relative") && !doc["theta_relative"].is_boolean()) ck.error("/theta_relative", "expected a boolean");
  else if (doc.contains("theta_relative")) cfg.theta_relative = doc["theta_relative"].get<bool>();

  long long n = 0;
  if (doc.contains("trials") && ck.integer(doc["trials"], "/trials", n)) {
    if (n < 1) ck.error("/trials", "trials must be >= 1");
    else cfg.trials = static_cast<int>(n);
  }
  if (doc.contains("horizon") && ck.number(doc["horizon"], "/horizon", cfg.horizon) && !(cfg.horizon > 0))
    ck.error("/horizon", "horizon must be positive");
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) ck.error("/seed", "expected a nonnegative integer");
    else cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("output")) ck.string(doc["output"], "/output", cfg.output);
  if (doc.contains("arrivals")) {
    std::string a;
    if (ck.string(doc["arrivals"], "/arrivals", a)) {
      if (a == "bernoulli") cfg.arrivals = ArrivalKind::Bernoulli;
      else if (a == "batch_uniform") cfg.arrivals = ArrivalKind::BatchUniform;
      else if (a == "poisson") cfg.arrivals = ArrivalKind::Poisson;
      else ck.error("/arrivals", "expected bernoulli, batch_uniform or poisson");
    }
  }
  if (doc.contains("batch_max") && ck.integer(doc["batch_max"], "/batch_max", n)) {
    if (n < 1) ck.error("/batch_max", "batch_max must be >= 1");
    else cfg.batch_max = static_cast<int>(n);
  }
  if (doc.contains("pruning_period") && ck.integer(doc["pruning_period"], "/pruning_period", n)) {
    if (n < 1) ck.error("/pruning_period", "pruning_period must be >= 1");
    else cfg.pruning_period = static_cast<int>(n);
  }
  if (doc.contains("sampling_stride") && ck.number(doc["sampling_stride"], "/sampling_stride", cfg.sampling_stride) &&
      cfg.sampling_stride < 0)
    ck.error("/sampling_stride", "sampling_stride must be >= 0");
  if (doc.contains("fallback")) {
    std::string f;
    if (ck.string(doc["fallback"], "/fallback", f)) {
      if (f == "idle") cfg.fallback = Fallback::Idle;
      else if (f == "first_feasible") cfg.fallback = Fallback::FirstFeasible;
      else ck.error("/fallback", "expected idle or first_feasible");
    }
  }
  if (doc.contains("drain")) {
    if (!doc["drain"].is_boolean()) ck.error("/drain", "expected a boolean");
    else cfg.drain = doc["drain"].get<bool>();
  }

  if (!ck.issues.empty()) throw ConfigError(ck.issues);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({{"", 0, "cannot read " + path}});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["mode"] = cfg.mode == ConfigMode::Slotted ? "slotted" : "rate_adaptation";
  if (!cfg.channel.states.empty()) {
    json ch;
    ch["mode"] = cfg.channel.mode == ChannelMode::Iid ? "iid" : "periodic";
    json states = json::array();
    for (const auto& s : cfg.channel.states) states.push_back({{"id", s.id}, {"freq", s.freq}, {"p", reception_json(s.p)}});
    ch["states"] = states;
    if (!cfg.channel.sequence.empty()) ch["sequence"] = cfg.channel.sequence;
    j["channel"] = ch;
  }
  if (!cfg.combos.empty()) {
    json cb = json::array();
    for (const auto& c : cfg.combos) cb.push_back({{"T", c.T}, {"p", reception_json(c.p)}});
    j["combos"] = cb;
  }
  j["schemes"] = cfg.schemes;
  if (!cfg.directions.empty()) {
    json d = json::array();
    for (const auto& r : cfg.directions) d.push_back(json::array({r.R1, r.R2}));
    j["directions"] = d;
  }
  j["theta_grid"] = cfg.theta_grid;
  j["theta_relative"] = cfg.theta_relative;
  j["trials"] = cfg.trials;
  j["horizon"] = cfg.horizon;
  j["seed"] = cfg.seed;
  j["output"] = cfg.output;
  j["arrivals"] = arrival_kind_name(cfg.arrivals);
  j["batch_max"] = cfg.batch_max;
  j["pruning_period"] = cfg.pruning_period;
  j["sampling_stride"] = cfg.sampling_stride;
  j["fallback"] = cfg.fallback == Fallback::Idle ? "idle" : "first_feasible";
  j["drain"] = cfg.drain;
  return j.dump(2) + "\n";
}

}  // namespace opnc
