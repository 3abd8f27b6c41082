// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "stclear/audit.hpp"
#include "stclear/io.hpp"
#include "stclear/scenario.hpp"
#include "support/random_lp.hpp"
#include "support/vertex_oracle.hpp"

using namespace stclear;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::string num(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

bool close_rel(double actual, double expected, double rel) {
  return std::abs(actual - expected) <= rel * std::max(1.0, std::abs(expected));
}

MarketInstance fixture(const std::string& name) { return io::load_instance(fs::path(STCLEAR_FIXTURES) / name); }

CaseParams desk(Variant v, std::size_t hours) {
  CaseParams p;
  p.farms = 8;
  p.processors = 4;
  p.hours = hours;
  p.seed = 7;
  p.variant = v;
  return p;
}

// ---- 1. full audit on random instances -------------------------------------

Outcome random_audits() {
  const auto start = Clock::now();
  std::size_t passed = 0;
  std::string first_failure;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const AuditReport r = run_full_audit(random_instance(seed));
    if (r.passed()) {
      ++passed;
      continue;
    }
    if (first_failure.empty()) {
      for (const auto& c : r.checks) {
        if (!c.ok()) {
          first_failure = " first failure: seed " + std::to_string(seed) + " " + c.name + " " + c.offender;
          break;
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  Outcome out;
  out.pass = passed == 200 && elapsed < 60.0;
  out.detail = std::to_string(passed) + "/200 audits pass in " + num(elapsed) + " s" + first_failure;
  return out;
}

// ---- 2. solver vs vertex enumeration ---------------------------------------

Outcome solver_vs_oracle() {
  std::size_t agree = 0;
  std::size_t infeasible = 0;
  double worst = 0.0;
  std::string first_failure;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const LinearProgram lp = testing_support::random_lp(10000 + seed);
    const auto o = oracle::enumerate(lp);
    const SolverResult r = solve(lp);
    bool ok = false;
    if (!o.feasible) {
      ok = r.status == SolverStatus::Infeasible;
      ++infeasible;
    } else if (r.status == SolverStatus::Optimal) {
      const double gap = std::abs(r.objective - o.objective);
      worst = std::max(worst, gap);
      ok = gap <= 1e-7;
    }
    if (ok) {
      ++agree;
    } else if (first_failure.empty()) {
      first_failure = " first mismatch at seed " + std::to_string(10000 + seed);
    }
  }
  return {agree == 100, std::to_string(agree) + "/100 agree (" + std::to_string(infeasible) +
                            " infeasible), worst objective gap " + num(worst) + first_failure};
}

// ---- 3. hand fixtures ------------------------------------------------------

Outcome hand_fixtures() {
  std::vector<std::string> misses;
  auto expect = [&](const std::string& what, double actual, double expected) {
    if (std::abs(actual - expected) > 1e-9) misses.push_back(what + "=" + num(actual) + " (want " + num(expected) + ")");
  };

  const auto tv = fixture("two_variable.json");
  const auto tv_sol = clear_market(tv);
  const auto tv_rep = settle(tv_sol, tv);
  expect("two_variable objective", tv_sol.surplus, 30.0);
  expect("two_variable price", tv_sol.price({0, "n1", "good"}).value_or(NAN), 2.0);
  expect("two_variable consumer capacity dual", tv_sol.capacity_duals[*tv_sol.index().column_of("d1")], 6.0);
  for (const auto& s : tv_rep.stakeholders) {
    if (s.id == "d1") expect("two_variable consumer profit", s.profit, 30.0);
  }

  const auto st = fixture("storage.json");
  const auto st_sol = clear_market(st);
  expect("storage ST surplus", st_sol.surplus, 42.5);
  expect("storage QSS surplus", clear_market(restrict_to_qss(st)).surplus, 0.0);
  expect("storage price t1", st_sol.price({0, "n1", "good"}).value_or(NAN), 1.0);
  expect("storage price t2", st_sol.price({1, "n1", "good"}).value_or(NAN), 1.5);

  const auto tn = fixture("two_node_transport.json");
  const auto tn_sol = clear_market(tn);
  const auto tn_rep = settle(tn_sol, tn);
  for (const auto& s : tn_rep.stakeholders) {
    if (s.id == "l1") {
      expect("transport link price", s.price, 1.0);
      expect("transport link price - bid", s.price - s.bid, 0.0);
    }
  }

  Outcome out;
  out.pass = misses.empty() && tv_sol.optimal() && st_sol.optimal() && tn_sol.optimal();
  out.detail = out.pass ? "two-variable, storage and transport fixtures exact to 1e-9" : misses.front();
  return out;
}

// ---- 4. revenue streams balance on every variant ---------------------------

double grand_total_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    const auto fields = io::split_csv_line(line);
    if (fields.size() == 2 && fields[0] == "Grand Total") return std::stod(fields[1]);
  }
  return NAN;
}

Outcome streams_balance() {
  Outcome out;
  for (Variant v : {Variant::Base, Variant::NoStorage, Variant::UnlimitedStorage, Variant::TripleWaste}) {
    const auto inst = generate_waste_case(desk(v, 24));
    const auto sol = clear_market(inst);
    if (!sol.optimal()) return {false, std::string(to_string(v)) + " did not clear"};
    const auto rep = settle(sol, inst);
    const double total = grand_total_from_csv(io::streams_csv(rep.streams));
    const double rel = std::abs(total) / rep.streams.magnitude();
    out.pass = out.pass && rel <= 1e-6;
    out.detail += std::string(out.detail.empty() ? "" : ", ") + std::string(to_string(v)) + " |total|/volume=" + num(rel);
  }
  return out;
}

// ---- 5. case-study dynamics ------------------------------------------------

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = 0.5 * static_cast<double>(i + j);
    i = j + 1;
  }
  return rank;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / static_cast<double>(ra.size());
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / static_cast<double>(rb.size());
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < ra.size(); ++k) {
    sab += (ra[k] - ma) * (rb[k] - mb);
    saa += (ra[k] - ma) * (ra[k] - ma);
    sbb += (rb[k] - mb) * (rb[k] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

double coefficient_of_variation(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(v.size())) / std::abs(mean);
}

Outcome case_dynamics() {
  const auto start = Clock::now();
  const std::size_t hours = 72;
  const auto none = generate_waste_case(desk(Variant::NoStorage, hours));
  const auto base = generate_waste_case(desk(Variant::Base, hours));
  const auto unlimited = generate_waste_case(desk(Variant::UnlimitedStorage, hours));
  const auto none_sol = clear_market(none);
  const auto base_sol = clear_market(base);
  const auto unlimited_sol = clear_market(unlimited);
  if (!none_sol.optimal() || !base_sol.optimal() || !unlimited_sol.optimal()) return {false, "a variant did not clear"};

  auto hub_price = [&](const ClearingSolution& s, std::size_t h) {
    return s.price({h, "hub", "electricity"}).value_or(NAN);
  };
  const DemandCurve demand = DemandCurve::make(desk(Variant::NoStorage, hours));
  const std::size_t peak = demand.peak_hour_of_day(desk(Variant::Base, hours).trough_hour);
  auto tol = [](double a, double b) { return 1e-6 * (1.0 + std::abs(a) + std::abs(b)); };

  // (a) NoStorage hub price repeats daily and tracks demand.
  std::vector<double> none_prices(hours);
  for (std::size_t h = 0; h < hours; ++h) none_prices[h] = hub_price(none_sol, h);
  double period_gap = 0.0;
  for (std::size_t h = 0; h + 24 < hours; ++h) {
    period_gap = std::max(period_gap, std::abs(none_prices[h] - none_prices[h + 24]) - tol(none_prices[h], 0.0));
  }
  const double rho = spearman(none_prices, demand.load);
  const bool a = period_gap <= 0.0 && rho >= 0.95;

  // (b) Storage lowers peak prices; unlimited storage lowers them further.
  bool b = true;
  std::size_t peaks = 0;
  for (std::size_t h = peak; h < hours; h += 24) {
    ++peaks;
    const double pn = hub_price(none_sol, h), pb = hub_price(base_sol, h), pu = hub_price(unlimited_sol, h);
    b = b && pb <= pn + tol(pb, pn) && pu <= pb + tol(pu, pb);
  }

  // (c) Total stored waste in Base empties and fills within every day.
  std::vector<double> level(hours, 0.0), capacity(hours, 0.0);
  for (const auto& l : base.transporters) {
    if (classify_arc(l.arc) != ArcClass::Temporal) continue;
    level[l.arc.base.time] += base_sol.allocation_of(l.id);
    capacity[l.arc.base.time] += l.capacity;
  }
  const double full = *std::max_element(capacity.begin(), capacity.end());
  bool c = full > 0.0;
  for (std::size_t w = 0; w + 24 <= hours; w += 24) {
    const auto lo = *std::min_element(level.begin() + w, level.begin() + w + 24);
    const auto hi = *std::max_element(level.begin() + w, level.begin() + w + 24);
    c = c && lo <= 0.05 * full && hi >= 0.95 * full;
  }

  // (d) Unlimited-storage waste price at farm00 is flat once the first-day
  // warm-up is over, up to the last demand peak (later waste has no peak left
  // to reach).
  const std::size_t last_peak = peak + 24 * ((hours - 1 - peak) / 24);
  std::vector<double> steady, whole;
  for (std::size_t h = 0; h <= last_peak; ++h) {
    const double p = unlimited_sol.price({h, "farm00", "waste"}).value_or(NAN);
    whole.push_back(p);
    if (h >= 24) steady.push_back(p);
  }
  const double cv = coefficient_of_variation(steady);
  const bool d = cv <= 0.01;

  const double elapsed = seconds_since(start);
  Outcome out;
  out.pass = a && b && c && d && elapsed < 300.0;
  out.detail = std::string("(a) ") + (a ? "ok" : "FAIL") + " spearman=" + num(rho) +
               " period_gap=" + num(std::max(0.0, period_gap)) + "; (b) " + (b ? "ok" : "FAIL") + " over " +
               std::to_string(peaks) + " peaks; (c) " + (c ? "ok" : "FAIL") + "; (d) " + (d ? "ok" : "FAIL") +
               " cv[24.." + std::to_string(last_peak) + "]=" + num(cv) + " (cv[0.." + std::to_string(last_peak) +
               "]=" + num(coefficient_of_variation(whole)) + "); " + num(elapsed) + " s";
  return out;
}

// ---- 6. bid scaling covariance --------------------------------------------

MarketInstance scale_bids(MarketInstance m, double k) {
  for (auto& i : m.suppliers) i.bid *= k;
  for (auto& j : m.consumers) j.bid *= k;
  for (auto& l : m.transporters) l.bid *= k;
  for (auto& t : m.technologies) t.bid *= k;
  return m;
}

std::string covariance_failure(const MarketInstance& m) {
  const auto base = clear_market(m);
  const auto scaled_instance = scale_bids(m, 3.0);
  const auto scaled = clear_market(scaled_instance);
  if (!base.optimal() || !scaled.optimal()) return "not optimal";
  const double rel = 1e-9;
  if (!close_rel(scaled.surplus, 3.0 * base.surplus, rel)) return "surplus";
  for (std::size_t r = 0; r < base.prices.size(); ++r) {
    if (base.prices[r].has_value() != scaled.prices[r].has_value()) return "price definedness";
    if (base.prices[r] && !close_rel(*scaled.prices[r], 3.0 * *base.prices[r], rel)) {
      return "price " + scaled.program.lp.row_labels()[r];
    }
  }
  for (std::size_t j = 0; j < base.capacity_duals.size(); ++j) {
    if (!close_rel(scaled.capacity_duals[j], 3.0 * base.capacity_duals[j], rel)) {
      return "capacity dual " + base.index().id(j);
    }
  }
  // The original allocation attains the scaled optimum.
  const LinearProgram& lp = scaled.program.lp;
  for (double residual : row_residuals(lp, base.allocation)) {
    if (std::abs(residual) > 1e-9) return "original allocation infeasible";
  }
  if (!close_rel(lp.objective_value(base.allocation), scaled.surplus, rel)) return "original allocation suboptimal";
  return {};
}

Outcome scaling_covariance() {
  std::vector<std::pair<std::string, MarketInstance>> cases{
      {"two_variable", fixture("two_variable.json")},
      {"storage", fixture("storage.json")},
      {"two_node_transport", fixture("two_node_transport.json")},
      {"tipping_fee", fixture("tipping_fee.json")},
      {"desk_base_24h", generate_waste_case(desk(Variant::Base, 24))}};
  for (std::uint64_t seed = 1; seed <= 50; ++seed) cases.emplace_back("random_" + std::to_string(seed), random_instance(seed));
  std::size_t ok = 0;
  std::string first_failure;
  for (const auto& [name, inst] : cases) {
    const std::string why = covariance_failure(inst);
    if (why.empty()) {
      ++ok;
    } else if (first_failure.empty()) {
      first_failure = "; first failure " + name + ": " + why;
    }
  }
  return {ok == cases.size(), std::to_string(ok) + "/" + std::to_string(cases.size()) +
                                  " instances scale exactly (phi, pi, lambda within 1e-9 relative)" + first_failure};
}

// ---- 7. CLI determinism ----------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string("'") + STCLEAR_CLI + "' " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "stclear_acceptance_determinism";
  fs::remove_all(root);
  std::vector<fs::path> runs{root / "a", root / "b"};
  for (const auto& dir : runs) {
    fs::create_directories(dir);
    const fs::path inst = dir / "instance.json";
    if (run_cli("generate --farms 8 --processors 4 --hours 24 --seed 7 --variant base --out '" + inst.string() + "'") != 0) {
      return {false, "generate failed"};
    }
    if (run_cli("clear --instance '" + inst.string() + "' --out-dir '" + (dir / "solution").string() + "'") != 0) {
      return {false, "clear failed"};
    }
  }
  std::size_t compared = 0;
  for (const char* rel : {"instance.json", "solution/allocations.csv", "solution/prices.csv", "solution/settlement.csv",
                          "solution/streams.csv", "solution/audit.json"}) {
    if (io::read_file(runs[0] / rel) != io::read_file(runs[1] / rel)) return {false, std::string(rel) + " differs"};
    ++compared;
  }
  return {true, std::to_string(compared) + " files byte-identical across two generate+clear runs"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 full audit on 200 random instances", random_audits},
      {"2 solver matches vertex enumeration on 100 random LPs", solver_vs_oracle},
      {"3 hand fixtures match exactly", hand_fixtures},
      {"4 revenue streams balance on all desk-scale variants", streams_balance},
      {"5 desk-scale case dynamics (T=72)", case_dynamics},
      {"6 bids x3 scale surplus, prices and capacity duals", scaling_covariance},
      {"7 generate + clear is byte-deterministic", cli_determinism},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome out;
    try {
      out = run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    if (!out.pass) ++failures;
    std::printf("[%s] %s: %s\n", out.pass ? "PASS" : "FAIL", name.c_str(), out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
