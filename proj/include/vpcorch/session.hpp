// Copyright 2026 The vpcorch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "vpcorch/config_io.hpp"

#include <exception>
#include <istream>
#include <ostream>
#include <sstream>

namespace vpc {

// A stepped simulation driven one command at a time. Time only moves when
// the caller asks; commands that talk to the VPCMO run as a scripted call
// at the current instant and then advance the clock by one microsecond.
class Session {
 public:
  Session(const Topology& topo, const SpecBundle& bundle) : spec_(bundle.spec) {
    auto store = std::make_shared<VpfRegistry>();
    publish_artifacts(*store, bundle.artifacts);
    resolve_digests(*store, spec_);
    cluster_ = build_cluster(topo.cluster, spec_.deployment_id, topo.seed, store);
  }

  Micros now() const { return now_; }

  void run_until(Micros t) {
    if (t < now_) throw ConfigError(ConfigErrc::Invalid, "cannot run backwards to " + std::to_string(t));
    cluster_.sim->run_until(t);
    now_ = t;
  }

  DeploymentPlan deploy() {
    return at_vpcmo([this](Port& port) { return cluster_.orchestrator().deploy(port, spec_); });
  }

  DeploymentPlan reconfigure(const SpecBundle& next, Micros handover_time) {
    publish_artifacts(*cluster_.store, next.artifacts);
    DeploymentSpec s = next.spec;
    resolve_digests(*cluster_.store, s);
    const std::string dep = spec_.deployment_id;
    return at_vpcmo([&](Port& port) { return cluster_.orchestrator().redeploy(port, dep, s, handover_time); });
  }

  void kill(const std::string& sel) { cluster_.sim->kill_node(resolve(sel), now_); }
  void revive(const std::string& sel) { cluster_.sim->revive_node(resolve(sel), now_); }
  void partition(const std::vector<std::string>& a, const std::vector<std::string>& b, Micros until) {
    std::set<NodeId> ga, gb;
    for (const auto& s : a) ga.insert(resolve(s));
    for (const auto& s : b) gb.insert(resolve(s));
    cluster_.sim->partition(ga, gb, now_, until);
  }

  json status() const {
    json j = cluster_.vpcmo->logic().status_json();
    j["time"] = now_;
    json nodes = json::object();
    for (const auto& [id, node] : cluster_.irs) {
      json n = json::parse(node->state_json());
      n["alive"] = cluster_.sim->alive(id);
      nodes[std::to_string(id.value)] = n;
    }
    j["nodes"] = nodes;
    return j;
  }

  std::optional<DeploymentPlan> plan() const {
    const auto& plans = cluster_.vpcmo->logic().plans();
    auto it = plans.find(spec_.deployment_id);
    if (it == plans.end()) return std::nullopt;
    return it->second;
  }

  const Trace& trace() { return cluster_.sim->run_until(now_); }
  Cluster& cluster() { return cluster_; }

  NodeId resolve(const std::string& sel) const { return cluster_.resolve(sel, spec_.deployment_id); }

 private:
  template <class Fn>
  auto at_vpcmo(Fn fn) -> decltype(fn(std::declval<Port&>())) {
    using R = decltype(fn(std::declval<Port&>()));
    std::optional<R> result;
    std::exception_ptr err;
    cluster_.sim->schedule_call(now_, kVpcmoId, [&](Context& ctx) {
      SimPort port(ctx, cluster_.profiles);
      try {
        result = fn(port);
      } catch (...) {
        err = std::current_exception();
      }
    });
    run_until(now_ + 1);
    if (err) std::rethrow_exception(err);
    return std::move(*result);
  }

  DeploymentSpec spec_;
  Cluster cluster_;
  Micros now_{0};
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline Micros parse_time(const std::string& tok, Micros now, const std::string& where) {
  try {
    std::size_t used = 0;
    if (!tok.empty() && tok[0] == '+') {
      const Micros d = std::stoll(tok.substr(1), &used);
      if (used + 1 == tok.size()) return now + d;
    } else {
      const Micros t = std::stoll(tok, &used);
      if (used == tok.size()) return t;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError(ConfigErrc::Parse, where + ": bad time '" + tok + "'");
}

}  // namespace detail

// Session script, one command per line, '#' starts a comment:
//   until <t>                  run to absolute time t (us)
//   run <dt>                   run for dt more us
//   deploy                     deploy the session spec, print the plan
//   reconfigure <spec> <t|+dt> redeploy with a handover at t, print the plan
//   kill <sel> / revive <sel>
//   partition <a,b> <c,d> [t|+dt]
//   status                     print VPCMO and node status
// Domain failures are reported and make the result 1; the script goes on.
// Malformed lines abort with a ConfigError.
inline int run_session_script(Session& s, std::istream& in, std::ostream& out, std::ostream& err,
                              const std::string& name = "session") {
  int rc = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string cmd;
    if (!(ls >> cmd)) continue;
    const std::string where = name + ":" + std::to_string(lineno);
    std::vector<std::string> args;
    for (std::string a; ls >> a;) args.push_back(a);
    auto need = [&](std::size_t lo, std::size_t hi) {
      if (args.size() < lo || args.size() > hi) {
        throw ConfigError(ConfigErrc::Parse, where + ": wrong number of arguments for '" + cmd + "'");
      }
    };
    try {
      if (cmd == "until") {
        need(1, 1);
        s.run_until(detail::parse_time(args[0], s.now(), where));
      } else if (cmd == "run") {
        need(1, 1);
        s.run_until(s.now() + detail::parse_time(args[0], 0, where));
      } else if (cmd == "deploy") {
        need(0, 0);
        out << json(s.deploy()).dump() << '\n';
      } else if (cmd == "reconfigure") {
        need(2, 2);
        const SpecBundle next = load_spec(args[0]);
        out << json(s.reconfigure(next, detail::parse_time(args[1], s.now(), where))).dump() << '\n';
      } else if (cmd == "kill") {
        need(1, 1);
        s.kill(args[0]);
      } else if (cmd == "revive") {
        need(1, 1);
        s.revive(args[0]);
      } else if (cmd == "partition") {
        need(2, 3);
        const Micros until = args.size() == 3 ? detail::parse_time(args[2], s.now(), where) : kForever;
        s.partition(detail::split_list(args[0]), detail::split_list(args[1]), until);
      } else if (cmd == "status") {
        need(0, 0);
        out << s.status().dump() << '\n';
      } else {
        throw ConfigError(ConfigErrc::Parse, where + ": unknown command '" + cmd + "'");
      }
    } catch (const OrchError& e) {
      err << where << ": " << to_string(e.code()) << ": " << e.what() << '\n';
      rc = 1;
    } catch (const ScriptError& e) {
      err << where << ": " << e.what() << '\n';
      rc = 1;
    } catch (const SimError& e) {
      err << where << ": " << e.what() << '\n';
      rc = 1;
    }
  }
  return rc;
}

}  // namespace vpc
