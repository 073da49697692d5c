#include "ovl/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ovl {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw std::invalid_argument(where + ": " + what);
}

void requireKeys(const json& j, const std::string& where, std::set<std::string> required,
                 std::set<std::string> optional = {}) {
  if (!j.is_object()) fail(where, "expected an object");
  for (const auto& [key, val] : j.items()) {
    (void)val;
    if (!required.count(key) && !optional.count(key)) fail(where, "unknown key '" + key + "'");
  }
  for (const auto& key : required)
    if (!j.contains(key)) fail(where, "missing key '" + key + "'");
}

CountDist parseDist(const json& j, const std::string& where) {
  requireKeys(j, where, {"kind"}, {"value", "n", "p"});
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "deterministic") {
    requireKeys(j, where, {"kind", "value"});
    return CountDist::deterministic(j.at("value").get<int>());
  }
  if (kind == "bernoulli") {
    requireKeys(j, where, {"kind", "n", "p"});
    return CountDist::bernoulli(j.at("n").get<int>(), j.at("p").get<double>());
  }
  fail(where, "unknown distribution kind '" + kind + "'");
}

StepSchedule parseSchedule(const json& j, const std::string& where) {
  requireKeys(j, where, {"kind"}, {"scale", "exponent", "value"});
  std::string kind = j.at("kind").get<std::string>();
  double scale = j.value("scale", 1.0);
  if (kind == "power") return StepSchedule::power(scale, j.at("exponent").get<double>());
  if (kind == "inverse-t") return StepSchedule::power(scale, 1.0);
  if (kind == "inverse-t-log") return StepSchedule::harmonicLog(scale);
  if (kind == "constant") return StepSchedule::constant(j.at("value").get<double>());
  if (kind == "zero") return StepSchedule::zero();
  fail(where, "unknown schedule kind '" + kind + "'");
}

}  // namespace

Scenario parseScenario(const std::string& text, const std::string& what) {
  json root = json::parse(text);
  requireKeys(root, what, {"name", "network", "sim"}, {"controller", "sweep_arrival_n"});

  Scenario sc;
  sc.name = root.at("name").get<std::string>();
  sc.sweepArrivalN = root.value("sweep_arrival_n", 2);

  const json& net = root.at("network");
  requireKeys(net, what + ".network", {"buffer_cap", "nodes", "links", "flows"},
              {"sharing", "routing"});
  sc.net.bufferCap = net.at("buffer_cap").get<int>();

  for (const auto& jn : net.at("nodes")) {
    requireKeys(jn, what + ".nodes[]", {"id", "role"});
    NodeSpec n;
    n.id = jn.at("id").get<std::string>();
    std::string role = jn.at("role").get<std::string>();
    if (role == "overlay")
      n.role = NodeRole::Overlay;
    else if (role == "underlay")
      n.role = NodeRole::Underlay;
    else
      fail(what + ".nodes[[]", "unknown role '" + role + "'");
    sc.net.nodes.push_back(std::move(n));
  }

  for (const auto& jl : net.at("links")) {
    requireKeys(jl, what + ".links[]", {"id", "from", "to", "capacity"});
    LinkSpec l;
    l.id = jl.at("id").get<std::string>();
    l.tail = jl.at("from").get<std::string>();
    l.head = jl.at("to").get<std::string>();
    l.capacity = parseDist(jl.at("capacity"), what + ".links[].capacity");
    sc.net.links.push_back(std::move(l));
  }

  for (const auto& jf : net.at("flows")) {
    requireKeys(jf, what + ".flows[]", {"id", "source", "dest", "arrivals", "route"},
                {"inject_caps"});
    FlowSpec f;
    f.id = jf.at("id").get<std::string>();
    f.source = jf.at("source").get<std::string>();
    f.dest = jf.at("dest").get<std::string>();
    f.arrivals = parseDist(jf.at("arrivals"), what + ".flows[].arrivals");
    for (const auto& r : jf.at("route")) f.route.push_back(r.get<std::string>());
    if (jf.contains("inject_caps"))
      for (const auto& c : jf.at("inject_caps")) f.injectCaps.push_back(c.get<int>());
    sc.net.flows.push_back(std::move(f));
  }

  if (net.contains("sharing")) {
    for (const auto& js : net.at("sharing")) {
      requireKeys(js, what + ".sharing[]", {"link", "flow", "ratio"});
      sc.net.sharing[{js.at("link").get<std::string>(), js.at("flow").get<std::string>()}] =
          js.at("ratio").get<double>();
    }
  }
  if (net.contains("routing")) {
    for (const auto& jr : net.at("routing")) {
      requireKeys(jr, what + ".routing[]", {"flow", "from", "to", "p"});
      sc.net.routing[{jr.at("flow").get<std::string>(), jr.at("from").get<std::string>(),
                      jr.at("to").get<std::string>()}] = jr.at("p").get<double>();
    }
  }

  const json& sim = root.at("sim");
  requireKeys(sim, what + ".sim", {"horizon", "seed", "controller"},
              {"underlay_policy", "stride", "warmup_slots", "warmup_fraction"});
  sc.sim.horizon = sim.at("horizon").get<long long>();
  sc.sim.seed = sim.at("seed").get<std::uint64_t>();
  sc.sim.controller = sim.at("controller").get<std::string>();
  if (sim.contains("underlay_policy"))
    sc.sim.policy = underlayPolicyFromString(sim.at("underlay_policy").get<std::string>());
  if (sim.contains("stride")) sc.sim.stride = sim.at("stride").get<long long>();
  if (sim.contains("warmup_slots") && sim.contains("warmup_fraction"))
    fail(what + ".sim", "give warmup_slots or warmup_fraction, not both");
  if (sim.contains("warmup_slots")) sc.sim.warmupSlots = sim.at("warmup_slots").get<long long>();
  if (sim.contains("warmup_fraction")) {
    sc.warmupFraction = sim.at("warmup_fraction").get<double>();
    sc.sim.warmupSlots = static_cast<long long>(sc.warmupFraction * sc.sim.horizon);
  }

  if (root.contains("controller")) {
    const json& c = root.at("controller");
    requireKeys(c, what + ".controller", {},
                {"K", "total_budget", "budgets_by_link", "budgets_by_tunnel", "lambda_init",
                 "alpha", "beta", "gamma", "epsilon0", "epsilon_tau", "price_smoothing",
                 "poc_t_rule", "state_clip", "downstream_clip", "alpha_per_pair"});
    ControllerParams& p = sc.sim.ctrl;
    p.priceCap = c.value("K", p.priceCap);
    p.totalBudget = c.value("total_budget", p.totalBudget);
    p.lambdaInit = c.value("lambda_init", p.lambdaInit);
    p.eps0 = c.value("epsilon0", p.eps0);
    p.epsTau = c.value("epsilon_tau", p.epsTau);
    p.priceSmoothing = c.value("price_smoothing", p.priceSmoothing);
    p.stateClip = c.value("state_clip", p.stateClip);
    p.downstreamClip = c.value("downstream_clip", p.downstreamClip);
    p.alphaPerPair = c.value("alpha_per_pair", p.alphaPerPair);
    if (c.contains("alpha")) p.alpha = parseSchedule(c.at("alpha"), what + ".controller.alpha");
    if (c.contains("beta")) p.beta = parseSchedule(c.at("beta"), what + ".controller.beta");
    if (c.contains("gamma")) p.gamma = parseSchedule(c.at("gamma"), what + ".controller.gamma");
    if (c.contains("poc_t_rule")) {
      std::string rule = c.at("poc_t_rule").get<std::string>();
      if (rule == "holding-cost")
        p.pocTLeastPrice = false;
      else if (rule == "least-price")
        p.pocTLeastPrice = true;
      else
        fail(what + ".controller", "unknown poc_t_rule '" + rule + "'");
    }
    if (c.contains("budgets_by_link") && c.contains("budgets_by_tunnel"))
      fail(what + ".controller", "give budgets_by_link or budgets_by_tunnel, not both");
    if (c.contains("budgets_by_link")) {
      const json& b = c.at("budgets_by_link");
      p.budgetsInit.assign(sc.net.links.size(), 0.0);
      for (const auto& [lid, v] : b.items()) {
        bool found = false;
        for (std::size_t i = 0; i < sc.net.links.size(); i++)
          if (sc.net.links[i].id == lid) {
            p.budgetsInit[i] = v.get<double>();
            found = true;
          }
        if (!found) fail(what + ".controller.budgets_by_link", "unknown link '" + lid + "'");
      }
    }
    if (c.contains("budgets_by_tunnel"))
      for (const auto& v : c.at("budgets_by_tunnel")) p.budgetsInit.push_back(v.get<double>());
  }

  return sc;
}

Scenario loadScenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parseScenario(ss.str(), path);
}

std::uint64_t hashFile(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open file for hashing: " + path);
  std::uint64_t h = 1469598103934665603ULL;
  char c;
  while (is.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::string manifestJson(const Scenario& sc, const std::string& scenarioPath,
                         std::uint64_t scenarioHash, const SimConfig& cfg) {
  json j;
  j["version"] = "1.0.0";
  j["scenario"] = scenarioPath;
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(scenarioHash));
  j["scenario_hash"] = hex;
  j["name"] = sc.name;
  j["seed"] = cfg.seed;
  j["controller"] = cfg.controller;
  j["horizon"] = cfg.horizon;
  j["warmup_slots"] = cfg.resolvedWarmup();
  j["stride"] = cfg.resolvedStride();
  j["underlay_policy"] = underlayPolicyToString(cfg.policy);
  j["K"] = cfg.ctrl.priceCap;
  j["total_budget"] = cfg.ctrl.totalBudget;
  j["lambda_init"] = cfg.ctrl.lambdaInit;
  j["epsilon0"] = cfg.ctrl.eps0;
  j["epsilon_tau"] = cfg.ctrl.epsTau;
  return j.dump(2) + "\n";
}

}  // namespace ovl
