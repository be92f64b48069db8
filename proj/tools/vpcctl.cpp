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

#include "vpcorch/vpcorch.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace vpc;

namespace {

constexpr int kOk = 0;
constexpr int kDomainFailure = 1;
constexpr int kUsage = 2;

std::string default_out_dir() {
  if (const char* env = std::getenv("VPCCTL_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return ".";
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw ConfigError(ConfigErrc::Io, path.string() + ": cannot write");
}

fs::path ensure_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw ConfigError(ConfigErrc::Io, dir + ": output directory not writable");
  return p;
}

// Merges a spec file into a script: the spec replaces the deployment and
// its artifacts are published next to the built-in ones.
void apply_spec(ScenarioScript& s, const SpecBundle& b) {
  s.spec = b.spec;
  for (const auto& a : b.artifacts) {
    std::erase_if(s.artifacts, [&](const VpfArtifact& x) {
      return x.descriptor.vpf_id == a.descriptor.vpf_id && x.descriptor.version == a.descriptor.version;
    });
    s.artifacts.push_back(a);
  }
  if (s.redeploy) s.redeploy->spec.deployment_id = b.spec.deployment_id;
}

struct ScenarioArgs {
  std::string id;
  std::optional<std::uint64_t> seed;
  std::string topology;
  std::string spec;
  std::string out = default_out_dir();
  bool sweep{false};
  std::size_t seeds{20};
  Micros step{100};
};

int cmd_scenario(const ScenarioArgs& a) {
  ScenarioScript s = make_script(a.id);
  std::uint64_t seed = 42;
  if (!a.topology.empty()) {
    Topology t = load_topology(a.topology);
    s.cluster = t.cluster;
    seed = t.seed;
  }
  if (!a.spec.empty()) apply_spec(s, load_spec(a.spec));
  if (a.seed) seed = *a.seed;
  const fs::path out = ensure_dir(a.out);

  if (a.sweep) {
    std::string target;
    if (a.id == "3a") target = "inactive:0";
    else if (a.id == "3b") target = "active";
    else throw ConfigError(ConfigErrc::Invalid, "--sweep applies to scenarios 3a and 3b");
    const SweepReport rep =
        sweep_failure_times(s, target, kFaultAt, kFaultAt + s.spec.sync_period, a.step, seed_range(seed, a.seeds));
    write_file(out / "sweep.json", to_json_value(rep).dump(2) + "\n");
    std::cout << "sweep " << a.id << ": " << rep.runs.size() << " runs, " << rep.failing_runs << " failing\n"
              << "  worst detection  " << rep.worst_detection_us << " us\n"
              << "  worst output gap " << rep.worst_output_gap_us << " us\n"
              << "  worst redundancy gap " << rep.worst_redundancy_gap_us << " us\n";
    return rep.failing_runs == 0 ? kOk : kDomainFailure;
  }

  const TraceReport r = run_scenario(s, seed);
  write_file(out / "report.json", to_json_value(r).dump(2) + "\n");
  write_file(out / "trace.jsonl", r.trace_jsonl);
  write_file(out / "metrics.csv", metrics_csv(r));
  std::cout << "scenario " << r.scenario << " seed " << r.seed << ": " << r.event_count << " events, "
            << r.violations.size() << " violations\n"
            << "  trace sha256 " << r.trace_hash << '\n'
            << "  missed control cycles " << r.metrics.missed_control_cycles << '\n'
            << "  failover detection    " << r.metrics.failover_detection_us << " us\n"
            << "  max output gap        " << r.metrics.max_output_gap_us << " us\n";
  for (const auto& v : r.violations) {
    std::cerr << "violation " << v.invariant << " at event " << v.event_index << " (t=" << v.time
              << "): " << v.detail << '\n';
  }
  return r.ok() ? kOk : kDomainFailure;
}

struct DeployArgs {
  std::string topology;
  std::string spec;
  std::optional<std::uint64_t> seed;
  Micros at{15'000};
  Micros settle{50'000};
  std::string new_spec;
  std::string handover;
  Micros reconfigure_at{100'000};
};

Session open_session(const DeployArgs& a) {
  Topology t = load_topology(a.topology);
  if (a.seed) t.seed = *a.seed;
  return Session(t, load_spec(a.spec));
}

int cmd_deploy(const DeployArgs& a) {
  Session s = open_session(a);
  s.run_until(a.at);
  try {
    std::cout << json(s.deploy()).dump(2) << '\n';
  } catch (const OrchError& e) {
    std::cerr << to_string(e.code()) << ": " << e.what() << '\n';
    return kDomainFailure;
  }
  s.run_until(s.now() + a.settle);
  std::cout << s.status().dump(2) << '\n';
  return kOk;
}

int cmd_reconfigure(const DeployArgs& a) {
  Session s = open_session(a);
  const SpecBundle next = load_spec(a.new_spec);
  s.run_until(a.at);
  try {
    s.deploy();
    s.run_until(std::max(s.now(), a.reconfigure_at));
    const Micros h = detail::parse_time(a.handover, s.now(), "--handover");
    std::cout << json(s.reconfigure(next, h)).dump(2) << '\n';
    s.run_until(h + s.cluster().orchestrator().config().release_delay + a.settle);
  } catch (const OrchError& e) {
    std::cerr << to_string(e.code()) << ": " << e.what() << '\n';
    return kDomainFailure;
  }
  std::cout << s.status().dump(2) << '\n';
  return kOk;
}

int cmd_session(const std::string& script, const DeployArgs& a) {
  std::ifstream in(script);
  if (!in) throw ConfigError(ConfigErrc::Io, script + ": cannot open");
  Session s = open_session(a);
  return run_session_script(s, in, std::cout, std::cerr, script);
}

struct BenchArgs {
  std::string profile{"compact"};
  bool compare{false};
  std::size_t count{10'000};
  std::uint64_t seed{42};
  Micros base{100};
  Micros jitter{50};
  std::int64_t cost_ns{10};
  std::string out = default_out_dir();
};

int cmd_bench(const BenchArgs& a) {
  const LinkSpec link{a.base, a.jitter, 0.0};
  BenchOptions opt;
  opt.cost_ns_per_byte = a.cost_ns;
  const fs::path out = ensure_dir(a.out);
  if (a.compare) {
    const BenchComparison c = compare_profiles(link, a.count, a.seed, opt);
    std::cout << comparison_table(c) << "\ncompact\n" << histogram(c.compact.samples_ns) << "\nrouted\n"
              << histogram(c.routed.samples_ns);
    write_file(out / "bench.csv", bench_csv({&c.compact, &c.routed}));
    return kOk;
  }
  const BenchResult r = latency_bench(detail::parse_profile(a.profile), link, a.count, a.seed, opt);
  std::cout << percentile_table(r) << '\n' << histogram(r.samples_ns);
  write_file(out / "bench.csv", bench_csv({&r}));
  return kOk;
}

struct VpfArgs {
  std::string store;
  std::string id;
  std::string version;
  std::string logic;
  std::string mode{"cyclic"};
  Micros period{1'000};
  std::string artifact;
  std::string out;
};

SemVer require_version(const std::string& v) {
  auto parsed = parse_semver(v);
  if (!parsed) throw ConfigError(ConfigErrc::Invalid, "version must look like 1.2.3, got '" + v + "'");
  return *parsed;
}

int cmd_vpf_publish(const VpfArgs& a) {
  VpfRegistry reg{fs::path(a.store)};
  VpfDescriptor d = make_descriptor(a.id, require_version(a.version), a.logic,
                                    a.mode == "acyclic" ? ExecutionMode::acyclic() : ExecutionMode::cyclic(a.period));
  const std::string text = detail::read_file(a.artifact);
  detail::parse_json(text, a.artifact);
  const Bytes blob(text.begin(), text.end());
  load_program(d, blob);  // reject artifacts the runtime could not load
  const Digest dg = reg.publish(d, blob);
  std::cout << a.id << '@' << a.version << ' ' << to_hex(dg) << '\n';
  return kOk;
}

int cmd_vpf_list(const VpfArgs& a) {
  VpfRegistry reg{fs::path(a.store)};
  for (const auto& e : reg.list()) std::cout << e.vpf_id << '@' << e.version.str() << ' ' << to_hex(e.digest) << '\n';
  return kOk;
}

int cmd_vpf_fetch(const VpfArgs& a) {
  VpfRegistry reg{fs::path(a.store)};
  const ArtifactRecord rec = reg.fetch(a.id, require_version(a.version));
  const std::string text(rec.blob.begin(), rec.blob.end());
  if (a.out.empty()) {
    std::cout << text << '\n';
  } else {
    write_file(a.out, text);
  }
  std::cerr << "sha256 " << to_hex(rec.descriptor.artifact_digest) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vpcctl: orchestrate virtualized process controllers in a deterministic simulation"};
  app.require_subcommand(1);
  int rc = kOk;

  ScenarioArgs sa;
  auto* scen = app.add_subcommand("scenario", "run a scripted scenario");
  scen->require_subcommand(1);
  auto* scen_run = scen->add_subcommand("run", "run scenario 1, 2, 3a, 3b, 3c, 3c-isolated or 4");
  scen_run->add_option("id", sa.id, "scenario id")->required()->check(CLI::IsMember(scenario_ids()));
  scen_run->add_option("--seed", sa.seed, "simulation seed (default: topology seed or 42)");
  scen_run->add_option("--config,--topology", sa.topology, "topology JSON")->check(CLI::ExistingFile);
  scen_run->add_option("--spec", sa.spec, "deployment spec JSON")->check(CLI::ExistingFile);
  scen_run->add_option("--out", sa.out, "output directory (default: $VPCCTL_OUT_DIR or .)");
  scen_run->add_flag("--sweep", sa.sweep, "sweep the failure time over one sync period");
  scen_run->add_option("--seeds", sa.seeds, "seeds per sweep point")->check(CLI::PositiveNumber);
  scen_run->add_option("--step", sa.step, "sweep step in us")->check(CLI::PositiveNumber);
  scen_run->callback([&] { rc = cmd_scenario(sa); });

  DeployArgs da;
  auto add_cluster_opts = [&](CLI::App* c) {
    c->add_option("--topology", da.topology, "topology JSON")->required()->check(CLI::ExistingFile);
    c->add_option("--spec", da.spec, "deployment spec JSON")->required()->check(CLI::ExistingFile);
    c->add_option("--seed", da.seed, "simulation seed");
  };
  auto* dep = app.add_subcommand("deploy", "deploy a spec and print the plan");
  add_cluster_opts(dep);
  dep->add_option("--at", da.at, "deploy time in us");
  dep->add_option("--settle", da.settle, "time to run after deploying, in us");
  dep->callback([&] { rc = cmd_deploy(da); });

  auto* rec = app.add_subcommand("reconfigure", "deploy, then redeploy with a scheduled handover");
  add_cluster_opts(rec);
  rec->add_option("--new-spec", da.new_spec, "spec for the redeployment")->required()->check(CLI::ExistingFile);
  rec->add_option("--handover", da.handover, "handover date in us, or +dt relative to the request")->required();
  rec->add_option("--at", da.at, "initial deploy time in us");
  rec->add_option("--request-at", da.reconfigure_at, "time of the redeploy request in us");
  rec->add_option("--settle", da.settle, "time to run after release, in us");
  rec->callback([&] { rc = cmd_reconfigure(da); });

  std::string script;
  auto* ses = app.add_subcommand("session", "drive a stepped simulation from a command script");
  ses->add_option("script", script, "session script")->required()->check(CLI::ExistingFile);
  add_cluster_opts(ses);
  ses->callback([&] { rc = cmd_session(script, da); });

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "E2E latency benchmark for the frame profiles");
  bench->add_option("--profile", ba.profile, "compact or routed")->check(CLI::IsMember({"compact", "routed"}));
  bench->add_flag("--compare", ba.compare, "paired compact/routed comparison");
  bench->add_option("--count", ba.count, "messages per profile")->check(CLI::Range(std::size_t{1000}, std::size_t{100'000'000}));
  bench->add_option("--seed", ba.seed, "link seed");
  bench->add_option("--base", ba.base, "base link latency in us")->check(CLI::NonNegativeNumber);
  bench->add_option("--jitter", ba.jitter, "maximum jitter in us")->check(CLI::NonNegativeNumber);
  bench->add_option("--cost-ns", ba.cost_ns, "encode plus decode cost per byte in ns")->check(CLI::NonNegativeNumber);
  bench->add_option("--out", ba.out, "output directory (default: $VPCCTL_OUT_DIR or .)");
  bench->callback([&] { rc = cmd_bench(ba); });

  VpfArgs va;
  auto* vpf = app.add_subcommand("vpf", "manage a directory-backed VPF registry");
  vpf->require_subcommand(1);
  auto* pub = vpf->add_subcommand("publish", "publish an artifact");
  pub->add_option("--store", va.store, "registry directory")->required();
  pub->add_option("--id", va.id, "VPF id")->required();
  pub->add_option("--version", va.version, "semantic version")->required();
  pub->add_option("--logic", va.logic, "logic name")->required()->check(
      CLI::IsMember({"pid", "threshold", "passthrough", "fault_injector"}));
  pub->add_option("--mode", va.mode, "cyclic or acyclic")->check(CLI::IsMember({"cyclic", "acyclic"}));
  pub->add_option("--period", va.period, "cycle period in us")->check(CLI::PositiveNumber);
  pub->add_option("--artifact", va.artifact, "artifact JSON")->required()->check(CLI::ExistingFile);
  pub->callback([&] { rc = cmd_vpf_publish(va); });
  auto* lst = vpf->add_subcommand("list", "list published VPFs");
  lst->add_option("--store", va.store, "registry directory")->required();
  lst->callback([&] { rc = cmd_vpf_list(va); });
  auto* fet = vpf->add_subcommand("fetch", "print or save one artifact");
  fet->add_option("--store", va.store, "registry directory")->required();
  fet->add_option("--id", va.id, "VPF id")->required();
  fet->add_option("--version", va.version, "semantic version")->required();
  fet->add_option("--out", va.out, "write the artifact here instead of stdout");
  fet->callback([&] { rc = cmd_vpf_fetch(va); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ScriptError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const BenchError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const RegistryError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDomainFailure;
  } catch (const VpfError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return rc;
}
