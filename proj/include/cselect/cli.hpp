#pragma once

// Command-line driver: cselect <command> --spec FILE [options]
//
// Exit codes: 0 success, 2 an audit or postcondition failed, 1 bad input.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cselect/audit.hpp"
#include "cselect/fields.hpp"
#include "cselect/grid.hpp"
#include "cselect/maps.hpp"
#include "cselect/michael.hpp"
#include "cselect/sandwich.hpp"
#include "cselect/spec_io.hpp"

namespace cselect {

struct CliOptions {
  std::string command;
  std::string spec;
  std::size_t grid = 33;
  int refine = 0;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
  std::string report;
  double tol = 1e-7;
};

namespace detail {

struct RunState {
  nlohmann::json report;
  bool passed = true;

  void add(const AuditReport& rep) {
    passed = passed && rep.passed();
    report["invariants"].push_back(to_json(rep));
  }
  void add_modulus(const ModulusStudy& study) {
    passed = passed && study.passed();
    report["modulus"] = to_json(study);
  }
};

inline void write_outputs(const CliOptions& opt, const Grid& grid, const std::vector<Point>& h, RunState& state,
                          std::ostream& out) {
  if (!opt.out.empty()) {
    std::ofstream f(opt.out, std::ios::binary);
    if (!f) throw SpecError(opt.out, "cannot write CSV output");
    write_csv(f, grid.points(), h);
  }
  state.report["passed"] = state.passed;
  if (!opt.report.empty()) {
    std::ofstream f(opt.report, std::ios::binary);
    if (!f) throw SpecError(opt.report, "cannot write report");
    f << state.report.dump(2) << '\n';
  }
  out << opt.command << ": " << (state.passed ? "passed" : "FAILED") << " (" << grid.size() << " grid points)\n";
  if (!state.passed)
    for (const auto& inv : state.report["invariants"])
      if (!inv["passed"].get<bool>()) {
        out << "  " << inv["name"].get<std::string>() << ": " << inv["violation_count"].get<std::size_t>()
            << " violation(s)";
        if (!inv["violations"].empty()) out << ", first: " << inv["violations"][0]["what"].get<std::string>();
        out << '\n';
      }
}

inline AuditOptions audit_options(const CliOptions& opt) {
  AuditOptions a;
  a.seed = opt.seed;
  return a;
}

inline const SetValuedMap& need_map(const LoadedSpec& spec) {
  if (!spec.map) throw SpecError("pieces", "this command needs a set-valued map (pieces)");
  return *spec.map;
}

inline std::pair<ScalarField, ScalarField> need_fields(const LoadedSpec& spec) {
  if (spec.f) return {*spec.f, *spec.g};
  return envelopes(need_map(spec));
}

/// f <= g at every grid point.
inline AuditReport order_audit(const ScalarField& f, const ScalarField& g, const Grid& grid) {
  AuditReport rep;
  rep.name = "f <= g";
  for (const auto& x : grid.points()) {
    ++rep.checked;
    const double a = f(x), b = g(x);
    if (!(a <= b) && rep.violations.size() < 50) rep.violations.push_back({x, Point{a, b}, x, a - b, "f > g"});
  }
  return rep;
}

inline int run_command(const CliOptions& opt, std::ostream& out) {
  const LoadedSpec spec = load_spec(opt.spec);
  Grid grid = Grid::build(spec.domain, opt.grid);
  const AuditOptions aopt = audit_options(opt);

  RunState state;
  state.report = {{"command", opt.command},
                  {"spec", opt.spec},
                  {"grid", {{"per_axis", opt.grid}, {"points", grid.size()}, {"refine", opt.refine}}},
                  {"seed", opt.seed},
                  {"tol", opt.tol},
                  {"domain_closed", spec.tags.closed_domain},
                  {"invariants", nlohmann::json::array()}};
  if (!spec.tags.closed_domain) state.report["notes"].push_back("domain declared not closed; results computed anyway");
  std::vector<Point> h(grid.size());

  if (opt.command == "lns") {
    const auto& map = need_map(spec);
    const VectorField lns = lns_field(map);
    for (std::size_t i = 0; i < grid.size(); ++i) h[i] = lns(grid.point(i));
    state.add(membership_audit(map, grid, h, opt.tol));
  } else if (opt.command == "envelopes") {
    auto [f, g] = need_fields(spec);
    for (std::size_t i = 0; i < grid.size(); ++i) h[i] = Point{f(grid.point(i)), g(grid.point(i))};
    const double eps = default_audit_eps(grid);
    state.add(semicontinuity_audit(f, grid, eps));
    state.add(semicontinuity_audit(g, grid, eps));
  } else if (opt.command == "verify") {
    if (spec.map) {
      state.add(lsc_audit(*spec.map, grid, aopt));
      if (spec.tags.continuous) state.add(closed_graph_audit(*spec.map, grid, aopt));
      state.add(stratum_continuity_audit(*spec.map, spec.strata, grid, aopt));
    }
    if (spec.strata.size() > 1) state.add(stratification_audit(spec.strata, grid, aopt));
    if (spec.f) {
      const double eps = default_audit_eps(grid);
      state.add(semicontinuity_audit(*spec.f, grid, eps));
      state.add(semicontinuity_audit(*spec.g, grid, eps));
      state.add(order_audit(*spec.f, *spec.g, grid));
    }
    h.clear();
  } else if (opt.command == "select-michael") {
    const auto& map = need_map(spec);
    if (!map.declared_lsc()) throw SpecError("tags.lsc", "select-michael needs a map declared lower semicontinuous");
    if (spec.strata.size() > 1) state.add(stratification_audit(spec.strata, grid, aopt));
    state.add(lsc_audit(map, grid, aopt));
    state.add(stratum_continuity_audit(map, spec.strata, grid, aopt));
    if (state.passed) {
      MichaelOptions mopt;
      mopt.audit = aopt;
      mopt.audit_map = false;
      mopt.domain_closed = spec.tags.closed_domain;
      auto res = michael_select(map, spec.strata, grid, mopt);
      h = res.values;
      state.add(membership_audit(map, grid, h, opt.tol));
      state.add(boundary_decay_audit(res.trace, grid, aopt));
      if (opt.refine > 0) state.add_modulus(michael_modulus_study(map, spec.strata, grid, opt.refine, mopt));
    } else {
      h.clear();
    }
  } else if (opt.command == "select-sandwich") {
    auto [f, g] = need_fields(spec);
    if (spec.strata.size() > 1) state.add(stratification_audit(spec.strata, grid, aopt));
    state.add(order_audit(f, g, grid));
    if (state.passed) {
      SandwichOptions sopt;
      sopt.audit = aopt;
      sopt.audit_strata = false;
      auto res = sandwich_select(f, g, spec.strata, grid, sopt);
      for (std::size_t i = 0; i < grid.size(); ++i) h[i] = Point{res.values[i]};
      state.add(sandwich_postcondition_audit(f, g, grid, res.values));
      state.add(sandwich_trace_audit(res.trace, grid));
      if (opt.refine > 0) state.add_modulus(sandwich_modulus_study(f, g, spec.strata, grid, opt.refine, sopt));
    } else {
      h.clear();
    }
  } else {
    throw SpecError("command", "unknown command '" + opt.command + "'");
  }

  write_outputs(opt, grid, h, state, out);
  return state.passed ? 0 : 2;
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Continuous selections of set-valued maps and sandwich functions"};
  app.require_subcommand(1);
  CliOptions opt;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"select-michael", "continuous selection of a lower semicontinuous map"},
      {"select-sandwich", "continuous h between an upper and a lower semicontinuous envelope"},
      {"lns", "least-norm selection"},
      {"envelopes", "inf / sup envelopes of a real-valued map"},
      {"verify", "run the semicontinuity and stratification audits"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--spec", opt.spec, "spec JSON file")->required();
    sub->add_option("--grid", opt.grid, "grid points per axis")->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
    sub->add_option("--refine", opt.refine, "grid halvings for the continuity modulus study")->check(CLI::Range(0, 8));
    sub->add_option("--seed", opt.seed, "seed for interior sampling");
    sub->add_option("--out", opt.out, "CSV output");
    sub->add_option("--report", opt.report, "JSON report output");
    sub->add_option("--tol", opt.tol, "membership tolerance")->check(CLI::PositiveNumber);
    sub->callback([&opt, name = name] { opt.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }
  try {
    return detail::run_command(opt, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace cselect
