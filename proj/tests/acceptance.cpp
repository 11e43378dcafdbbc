// One PASS/FAIL line per acceptance criterion. Every experiment runs through the CLI, and
// each metric value is checked against the tolerance pinned below, not the report's flag.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "horolab_acceptance";

struct Run {
  int exit_code = -1;
  json report;
};

Run cli(const std::string& name, const std::string& args, int threads = 0) {
  const fs::path out = kWork / name;
  fs::remove_all(out);
  fs::create_directories(kWork);
  std::string cmd;
  if (threads > 0) cmd = "HOROLAB_THREADS=" + std::to_string(threads) + " ";
  cmd += std::string(HOROLAB_CLI_PATH) + " " + args + " --out " + out.string() + " > " + (kWork / (name + ".log")).string() + " 2>&1";
  Run r;
  const int status = std::system(cmd.c_str());
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream is(out / "report.json");
  if (is) r.report = json::parse(is);
  return r;
}

double metric(const Run& r, const std::string& name) {
  if (!r.report.contains("metrics")) return std::nan("");
  for (const auto& m : r.report["metrics"])
    if (m["name"] == name) return m["value"].get<double>();
  return std::nan("");
}

double timing_check(const Run& r, const std::string& name) {
  if (!r.report.contains("timing")) return std::nan("");
  for (const auto& m : r.report["timing"]["checks"])
    if (m["name"] == name) return m["value"].get<double>();
  return std::nan("");
}

struct Criterion {
  bool ok = true;
  std::ostringstream detail;

  // value <= tol (NaN fails).
  void at_most(const std::string& label, double value, double tol) {
    const bool pass = value <= tol;
    ok = ok && pass;
    detail << ' ' << label << '=' << value << (pass ? "<=" : " NOT<=") << tol << ';';
  }
  void at_least(const std::string& label, double value, double tol) {
    const bool pass = value >= tol;
    ok = ok && pass;
    detail << ' ' << label << '=' << value << (pass ? ">=" : " NOT>=") << tol << ';';
  }
  void require(const std::string& label, bool pass) {
    ok = ok && pass;
    detail << ' ' << label << '=' << (pass ? "yes" : "NO") << ';';
  }
  void note(const std::string& text) { detail << ' ' << text << ';'; }
};

int failures = 0;

void report_line(int id, const std::string& title, const Criterion& c) {
  std::printf("%s %2d %s:%s\n", c.ok ? "PASS" : "FAIL", id, title.c_str(), c.detail.str().c_str());
  std::fflush(stdout);
  if (!c.ok) ++failures;
}

json strip(json r) {
  r.erase("timing");
  r["config"].erase("out");
  return r;
}

}  // namespace

int main() {
  // 1. Riccati oracle and speed.
  {
    Criterion c;
    const Run r = cli("riccati_constant", "run riccati --model constant");
    c.at_most("|m_10 - tanh 10|", metric(r, "riccati_tanh"), 1e-6);
    c.at_most("seconds_per_100", timing_check(r, "riccati_100_evaluations_seconds"), 1.0);
    report_line(1, "Riccati oracle", c);
  }
  // 2. Truncation law.
  {
    Criterion c;
    const Run h = cli("riccati_constant2", "run riccati --model constant");
    c.at_most("rate_factor_vs_2a", metric(h, "decay_rate_factor"), 2.0);
    const Run p = cli("riccati_perturbed", "run riccati --model perturbed_axial --epsilon 0.25");
    c.require("perturbed_monotone_R10_15_20", metric(p, "decay_monotone") == 1.0);
    report_line(2, "Truncation law", c);
  }
  // 3. Busemann and Gromov oracles.
  {
    Criterion c;
    const Run r = cli("products_constant", "run boundary-products --model constant --n 100 --T 20");
    c.at_most("q_max_err", metric(r, "q_closed_form"), 1e-3);
    c.at_most("gromov_max_err", metric(r, "gromov_closed_form"), 1e-3);
    report_line(3, "Busemann/Gromov oracle", c);
  }
  // 4. Cross-ratio invariances.
  {
    Criterion c;
    const Run h = cli("products_constant4", "run boundary-products --model constant --n 100");
    c.at_most("const_basepoint_spread", metric(h, "crossratio_basepoint_spread"), 1e-3);
    c.at_most("const_isometry_residual", metric(h, "crossratio_isometry_residual"), 1e-3);
    const Run p = cli("products_perturbed", "run boundary-products --model perturbed_axial --epsilon 0.25");
    c.at_most("pert_basepoint_spread", metric(p, "crossratio_basepoint_spread"), 1e-2);
    c.at_most("pert_isometry_residual", metric(p, "crossratio_isometry_residual"), 1e-2);
    report_line(4, "Cross-ratio invariances", c);
  }
  // 5. Quasimetric constant; the perturbed gate is warn-level.
  {
    Criterion c;
    const Run h = cli("quasi_constant", "run quasimetric --model constant --epsilon 1 --n 100000");
    c.at_most("const_K", metric(h, "k_hat"), 1 + 1e-9);
    const Run p = cli("quasi_perturbed", "run quasimetric --model perturbed_axial --epsilon 0.25 --n 100000");
    const double k = metric(p, "k_hat");
    if (k <= 2.0)
      c.note("pert_K=" + std::to_string(k) + "<=2");
    else
      c.note("WARN pert_K=" + std::to_string(k) + ">2");
    c.require("pert_K_finite", std::isfinite(k));
    report_line(5, "Quasimetric constant", c);
  }
  // 6. Ahlfors dimension.
  {
    Criterion c;
    const Run a = cli("ahlfors_c1", "run ahlfors --model constant --epsilon 1");
    c.at_most("const_eps1_rel_err", metric(a, "dimension_relative_error"), 0.05);
    c.at_most("const_eps1_C_change", metric(a, "C_doubling_change"), 0.2);
    const Run b = cli("ahlfors_c05", "run ahlfors --model constant --epsilon 0.5");
    c.at_most("const_eps0.5_rel_err", metric(b, "dimension_relative_error"), 0.05);
    c.at_most("const_eps0.5_C_change", metric(b, "C_doubling_change"), 0.2);
    const Run p = cli("ahlfors_p", "run ahlfors --model perturbed_axial --epsilon 0.25");
    c.at_most("pert_eps0.25_rel_err", metric(p, "dimension_relative_error"), 0.15);
    c.at_most("pert_C_change", metric(p, "C_doubling_change"), 0.2);
    report_line(6, "Ahlfors dimension", c);
  }
  // 7. Derivative identity and chain rule.
  {
    Criterion c;
    const Run h = cli("deriv_constant", "run derivative --model constant --epsilon 1 --n 1000");
    c.at_most("const_identity", metric(h, "derivative_identity_residual"), 1e-4);
    c.at_most("const_chain", metric(h, "chain_rule_residual"), 1e-4);
    c.at_most("const_attracting", metric(h, "derivative_attracting"), 1e-4);
    const Run p = cli("deriv_perturbed", "run derivative --model perturbed_axial --epsilon 0.25 --n 1000");
    c.at_most("pert_identity", metric(p, "derivative_identity_residual"), 1e-2);
    c.at_most("pert_chain", metric(p, "chain_rule_residual"), 1e-2);
    report_line(7, "Derivative identity and chain rule", c);
  }
  // 8 and 9 share the growth runs.
  const Run gh = cli("growth_constant", "run cocycle-growth --model constant --epsilon 1 --n 100000");
  const Run gp = cli("growth_perturbed", "run cocycle-growth --model perturbed_axial --epsilon 0.25 --n 100000");
  {
    Criterion c;
    for (const auto* r : {&gh, &gp}) {
      const std::string tag = r == &gh ? "const" : "pert";
      c.require(tag + "_no_trend_in_l", metric(*r, "rn_nu_no_trend") == 1.0);
      if (r->report.contains("details")) {
        const auto& d = r->report["details"];
        c.note(tag + "_C=" + std::to_string(d["rn_nu_C"].get<double>()) + " slope_ci=[" +
               std::to_string(d["rn_nu_trend_ci"][0].get<double>()) + "," +
               std::to_string(d["rn_nu_trend_ci"][1].get<double>()) + "]");
      }
    }
    report_line(8, "RN_nu power bounds", c);
  }
  {
    Criterion c;
    for (const auto* r : {&gh, &gp}) {
      const std::string tag = r == &gh ? "const" : "pert";
      c.require(tag + "_increasing", metric(*r, "strictly_increasing") == 1.0);
      c.at_least(tag + "_slope_ci_low", metric(*r, "slope_ci_low"), 0.0);
      c.at_least(tag + "_r2", metric(*r, "fit_r2"), 0.9);
      c.require(tag + "_adjacent_cis_disjoint", metric(*r, "adjacent_cis_disjoint") == 1.0);
      c.at_most(tag + "_seconds", timing_check(*r, "growth_runtime_seconds"), 300.0);
    }
    report_line(9, "Cocycle growth", c);
  }
  // 10. Hoelder positivity.
  {
    Criterion c;
    const Run p = cli("holder_perturbed", "run holder --model perturbed_axial");
    c.at_least("pert_ci_low", metric(p, "exponent_ci_low"), 1e-12);
    const Run h = cli("holder_constant", "run holder --model constant");
    c.require("const_degenerate_flag", metric(h, "degenerate_flag") == 1.0);
    report_line(10, "Hoelder positivity", c);
  }
  // 11. Symmetry defect.
  {
    Criterion c;
    const Run p = cli("symmetry_perturbed", "run symmetry-defect --model perturbed_axial --n 50");
    const double t = metric(p, "welch_t_statistic");
    // One-sided 95% normal quantile; the Student quantile at 50+ dof is larger, so this is stricter.
    c.at_most("welch_t", t, 1.645);
    report_line(11, "Symmetry defect", c);
  }
  // 12. Determinism across runs and worker counts.
  {
    Criterion c;
    for (const std::string exp : {"cocycle-growth", "derivative"}) {
      const std::string args = "run " + exp + " --model perturbed_axial --epsilon 0.25";
      const Run a = cli("det_" + exp + "_1a", args, 1);
      const Run b = cli("det_" + exp + "_1b", args, 1);
      const Run d = cli("det_" + exp + "_4", args, 4);
      const bool have = !a.report.is_null() && !b.report.is_null() && !d.report.is_null();
      c.require(exp + "_repeat_identical", have && strip(a.report).dump() == strip(b.report).dump());
      c.require(exp + "_threads_1_vs_4_identical", have && strip(a.report).dump() == strip(d.report).dump());
    }
    report_line(12, "Determinism", c);
  }
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
