// stclear: generate, clear, audit and compare space-time market instances.
//
// Exit codes: 0 success, 1 audit failure, 2 usage or input error,
// 3 infeasible/unbounded, 4 iteration limit.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <future>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "stclear/audit.hpp"
#include "stclear/io.hpp"
#include "stclear/scenario.hpp"

namespace fs = std::filesystem;
using namespace stclear;

namespace {

constexpr int kOk = 0;
constexpr int kAuditFailed = 1;
constexpr int kUsage = 2;
constexpr int kNoSolution = 3;
constexpr int kIterationLimit = 4;

int exit_code(SolverStatus status) {
  switch (status) {
    case SolverStatus::Optimal: return kOk;
    case SolverStatus::Infeasible:
    case SolverStatus::Unbounded: return kNoSolution;
    case SolverStatus::IterationLimit: return kIterationLimit;
  }
  return kNoSolution;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("stclear");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("STCLEAR_LOG")) {
    const auto parsed = spdlog::level::from_str(level);
    // from_str maps unknown names to off; only "off" itself should mean off.
    if (parsed != spdlog::level::off || std::string_view(level) == "off") spdlog::set_level(parsed);
  }
}

struct SolverFlags {
  double tol = 0.0;
  std::size_t max_iters = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--tol", tol, "Solver feasibility and optimality tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--max-iters", max_iters, "Simplex iteration limit (0: 50 x (rows + cols))");
  }

  SolverConfig config() const {
    SolverConfig cfg;
    if (tol > 0.0) cfg.feasibility_tolerance = cfg.optimality_tolerance = tol;
    cfg.max_iterations = max_iters;
    return cfg;
  }
};

void log_solve(const std::string& label, const ClearingSolution& sol) {
  spdlog::info("{}: {} after {} iterations ({} rows, {} columns), surplus {}", label, to_string(sol.status()),
               sol.result.iterations, sol.program.lp.rows(), sol.program.lp.cols(), io::fixed(sol.surplus));
}

// ---- generate --------------------------------------------------------------

struct GenerateArgs {
  CaseParams params;
  std::string variant = "base";
  fs::path out;
};

int run_generate(const GenerateArgs& args) {
  CaseParams p = args.params;
  p.variant = *parse_variant(args.variant);
  const MarketInstance inst = generate_waste_case(p);
  spdlog::info("generated {} suppliers, {} consumers, {} transporters, {} technologies", inst.suppliers.size(),
               inst.consumers.size(), inst.transporters.size(), inst.technologies.size());
  if (args.out.empty() || args.out == "-") {
    std::cout << io::emit_instance(inst);
  } else {
    io::save_instance(args.out, inst);
  }
  return kOk;
}

// ---- clear -----------------------------------------------------------------

struct ClearArgs {
  fs::path instance;
  fs::path out_dir;
  SolverFlags solver;
};

int run_clear(const ClearArgs& args) {
  const MarketInstance inst = io::load_instance(args.instance);
  AuditConfig audit_cfg;
  audit_cfg.solver = args.solver.config();
  const ClearingSolution sol = clear_market(inst, audit_cfg.solver);
  log_solve("clear", sol);
  if (!sol.optimal()) {
    std::cerr << "clear: solver returned " << to_string(sol.status()) << "\n";
    return exit_code(sol.status());
  }
  const SettlementReport settlement = settle(sol, inst);
  const AuditReport audit = audit_solution(inst, sol, audit_cfg);
  io::write_solution(args.out_dir, sol, settlement, &audit);
  std::cout << "status optimal\nsurplus " << io::fixed(sol.surplus) << "\n";
  if (!audit.passed()) spdlog::warn("audit did not pass; see audit.json");
  return kOk;
}

// ---- audit -----------------------------------------------------------------

struct AuditArgs {
  fs::path instance;
  fs::path solution;
  fs::path out;
  bool strict = false;
  SolverFlags solver;
};

int run_audit(const AuditArgs& args) {
  const MarketInstance inst = io::load_instance(args.instance);
  AuditConfig cfg = args.strict ? AuditConfig::strict() : AuditConfig{};
  cfg.solver = args.solver.config();

  AuditReport report;
  if (args.solution.empty()) {
    report = run_full_audit(inst, cfg);
  } else {
    report = audit_solution(inst, io::read_solution(args.solution, inst), cfg);
  }

  for (const auto& c : report.checks) {
    std::cout << std::left << std::setw(26) << c.name << std::setw(13) << to_string(c.status);
    if (c.status == CheckStatus::Pass || c.status == CheckStatus::Fail) {
      std::cout << " residual=" << detail::format_number(c.residual)
                << " tol=" << detail::format_number(c.tolerance);
    }
    if (!c.offender.empty() && !c.ok()) std::cout << " at " << c.offender;
    if (!c.detail.empty()) std::cout << " (" << c.detail << ")";
    std::cout << "\n";
  }
  std::cout << (report.passed() ? "PASS" : report.inconclusive() ? "INCONCLUSIVE" : "FAIL") << "\n";
  if (!args.out.empty()) io::write_file(args.out, io::audit_json(report).dump(2) + "\n");

  if (report.passed()) return kOk;
  return report.inconclusive() ? kIterationLimit : kAuditFailed;
}

// ---- compare ---------------------------------------------------------------

struct CompareArgs {
  std::vector<fs::path> instances;
  fs::path out;
  std::size_t jobs = 1;
  SolverFlags solver;
};

std::string surplus_csv(const ClearingSolution& st, const ClearingSolution& qss) {
  return "case,surplus\nST," + io::fixed(st.surplus) + "\nQSS," + io::fixed(qss.surplus) + "\n";
}

std::string price_delta_csv(const ClearingSolution& st, const ClearingSolution& qss) {
  std::string out = "time,node,product,price_st,price_qss,delta\n";
  const auto& index = st.index();
  for (std::size_t r = 0; r < index.rows(); ++r) {
    const NodeProduct& key = index.row(r);
    const auto a = st.prices[r];
    const auto b = qss.price(key);
    auto cell = [](const std::optional<double>& v) { return v ? io::fixed(*v) : std::string("undefined"); };
    out += std::to_string(key.time) + "," + io::csv_field(key.node) + "," + io::csv_field(key.product) + "," +
           cell(a) + "," + cell(b) + "," + (a && b ? io::fixed(*b - *a) : std::string("undefined")) + "\n";
  }
  return out;
}

int run_compare(const CompareArgs& args) {
  std::vector<MarketInstance> instances;
  for (const auto& path : args.instances) instances.push_back(io::load_instance(path));

  // Two independent solves per instance: index 2k is ST, 2k+1 its QSS restriction.
  const std::size_t tasks = 2 * instances.size();
  std::vector<ClearingSolution> solutions(tasks);
  const SolverConfig cfg = args.solver.config();
  auto solve_task = [&](std::size_t k) {
    const MarketInstance& inst = instances[k / 2];
    solutions[k] = clear_market(k % 2 == 0 ? inst : restrict_to_qss(inst), cfg);
  };
  const std::size_t workers = std::clamp<std::size_t>(args.jobs, 1, tasks == 0 ? 1 : tasks);
  if (workers == 1) {
    for (std::size_t k = 0; k < tasks; ++k) solve_task(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.push_back(std::async(std::launch::async, [&] {
        for (std::size_t k = next++; k < tasks; k = next++) solve_task(k);
      }));
    }
    for (auto& f : pool) f.get();
  }

  int code = kOk;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const ClearingSolution& st = solutions[2 * i];
    const ClearingSolution& qss = solutions[2 * i + 1];
    const std::string label = args.instances[i].filename().string();
    log_solve(label + " ST", st);
    log_solve(label + " QSS", qss);
    if (!st.optimal() || !qss.optimal()) {
      std::cerr << "compare: " << label << ": ST " << to_string(st.status()) << ", QSS " << to_string(qss.status())
                << "\n";
      code = std::max(code, exit_code(st.optimal() ? qss.status() : st.status()));
      continue;
    }
    const fs::path dir = instances.size() == 1 ? args.out : args.out / args.instances[i].stem();
    fs::create_directories(dir);
    io::write_file(dir / "surplus.csv", surplus_csv(st, qss));
    io::write_file(dir / "price_delta.csv", price_delta_csv(st, qss));
    std::cout << label << ": ST " << io::fixed(st.surplus) << " QSS " << io::fixed(qss.surplus) << "\n";
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Space-time market clearing, settlement and audit"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a desk-scale waste-to-energy case");
  generate->add_option("--farms", gen.params.farms, "Farm count")->capture_default_str();
  generate->add_option("--processors", gen.params.processors, "Farms with a digester")->capture_default_str();
  generate->add_option("--hours", gen.params.hours, "Hourly periods")->capture_default_str();
  generate->add_option("--seed", gen.params.seed, "RNG seed")->capture_default_str();
  generate->add_option("--variant", gen.variant, "base | nostorage | unlimited | triple")
      ->check(CLI::IsMember({"base", "nostorage", "unlimited", "triple"}))
      ->capture_default_str();
  generate->add_option("--out", gen.out, "Instance path (stdout if omitted)");

  ClearArgs clr;
  auto* clear = app.add_subcommand("clear", "Clear an instance and write the solution tables");
  clear->add_option("--instance", clr.instance, "Instance JSON")->required()->check(CLI::ExistingFile);
  clear->add_option("--out-dir", clr.out_dir, "Output directory")->required();
  clr.solver.attach(clear);

  AuditArgs aud;
  auto* audit = app.add_subcommand("audit", "Check every economic property of the cleared market");
  audit->add_option("--instance", aud.instance, "Instance JSON")->required()->check(CLI::ExistingFile);
  audit->add_flag("--strict", aud.strict, "Tolerances 100x tighter");
  audit->add_option("--solution", aud.solution, "Audit this solution directory instead of solving")
      ->check(CLI::ExistingDirectory);
  audit->add_option("--out", aud.out, "Also write the report as JSON");
  aud.solver.attach(audit);

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "Space-time vs quasi-steady-state surplus and prices");
  compare->add_option("--instance", cmp.instances, "Instance JSON (repeatable)")->required()->check(CLI::ExistingFile);
  compare->add_option("--out", cmp.out, "Output directory")->required();
  compare->add_option("--jobs", cmp.jobs, "Parallel solves")->check(CLI::PositiveNumber)->capture_default_str();
  cmp.solver.attach(compare);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const auto parsed = app.get_subcommands();
    std::cerr << (parsed.empty() ? app.help() : parsed.front()->help());
    return kUsage;
  }

  try {
    if (*generate) return run_generate(gen);
    if (*clear) return run_clear(clr);
    if (*audit) return run_audit(aud);
    if (*compare) return run_compare(cmp);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
