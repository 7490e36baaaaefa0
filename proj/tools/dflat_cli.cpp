#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "dflat/catalog.hpp"
#include "dflat/errors.hpp"
#include "dflat/suites.hpp"

using namespace dflat;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

void emit(const RunConfig& cfg, const std::string& text) {
  if (cfg.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.output);
  if (!out) throw ConfigError("cannot open output file " + cfg.output);
  out << text;
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(15) << v;
  return os.str();
}

std::string checks_csv(const SuiteReport& r) {
  std::ostringstream os;
  os << "name,anchor,max_residual,mean_residual,samples,tolerance,pass\n";
  for (const CheckRecord& c : r.checks)
    os << c.name << ",\"" << c.anchor << "\"," << num(c.max_residual) << ','
       << num(c.mean_residual) << ',' << c.samples << ',' << num(c.tolerance) << ','
       << (c.pass ? "true" : "false") << '\n';
  return os.str();
}

int cmd_verify(const RunConfig& cfg) {
  const SuiteReport r = run_suite(cfg);
  emit(cfg, cfg.format == "csv" ? checks_csv(r) : r.to_json().dump(2) + "\n");
  return r.pass() ? kExitPass : kExitFail;
}

int cmd_solve_phi(const RunConfig& cfg) {
  const KParams k(cfg.k1.value_or(0.0), cfg.k2.value_or(0.0), cfg.k3.value_or(0.0),
                  cfg.eps.value_or(0.5));
  const PhiTable t = phi_table(k, cfg.method, cfg.grid);
  const double tol = cfg.tol.value_or(1e-6);
  bool ok = true;
  std::ostringstream os;
  if (cfg.format == "json") {
    nlohmann::json j;
    j["schema_version"] = kReportSchemaVersion;
    j["artifact_version"] = kArtifactVersion;
    j["config"] = cfg.to_json();
    j["method"] = t.method;
    j["label"] = t.label;
    j["domain"] = {t.domain.lo, t.domain.hi};
    nlohmann::json rows = nlohmann::json::array();
    for (const PhiRow& r : t.rows) {
      rows.push_back({r.s, r.value, r.d1, r.d2, r.residual});
      ok = ok && r.residual < tol;
    }
    j["columns"] = {"s", "phi", "dphi", "d2phi", "residual"};
    j["rows"] = rows;
    j["pass"] = ok;
    os << j.dump(2) << '\n';
  } else {
    os << "s,phi,dphi,d2phi,residual\n";
    for (const PhiRow& r : t.rows) {
      os << num(r.s) << ',' << num(r.value) << ',' << num(r.d1) << ',' << num(r.d2) << ','
         << num(r.residual) << '\n';
      ok = ok && r.residual < tol;
    }
  }
  emit(cfg, os.str());
  return ok ? kExitPass : kExitFail;
}

int cmd_report_eta(const RunConfig& cfg) {
  const double tol = cfg.tol.value_or(1e-6);
  const std::vector<EtaRow> rows = eta_table(tol);
  const SuiteReport r = suite_eta(cfg);
  std::ostringstream os;
  if (cfg.format == "csv") {
    os << "case,form,params,points,max_deviation,flagged\n";
    for (const EtaRow& e : rows)
      os << e.which << ',' << e.form << ",\"" << e.params << "\"," << e.points << ','
         << num(e.max_deviation) << ',' << (e.flagged ? "true" : "false") << '\n';
  } else {
    nlohmann::json j = r.to_json();
    nlohmann::json arr = nlohmann::json::array();
    for (const EtaRow& e : rows)
      arr.push_back({{"case", e.which},
                     {"form", e.form},
                     {"params", e.params},
                     {"points", e.points},
                     {"max_deviation", e.max_deviation},
                     {"flagged", e.flagged}});
    j["rows"] = arr;
    nlohmann::json flagged = nlohmann::json::array();
    for (const EtaRow& e : rows)
      if (e.flagged) flagged.push_back(std::to_string(e.which) + ":" + e.form + ":" + e.params);
    j["flagged"] = flagged;
    os << j.dump(2) << '\n';
  }
  emit(cfg, os.str());
  return r.pass() ? kExitPass : kExitFail;
}

int cmd_list_cases(const RunConfig& cfg) {
  std::ostringstream os;
  if (cfg.format == "json") {
    nlohmann::json arr = nlohmann::json::array();
    for (const CatalogEntry& e : catalog_entries())
      arr.push_back({{"id", e.id}, {"description", e.description}, {"expectation", e.expectation}});
    os << arr.dump(2) << '\n';
  } else {
    for (const CatalogEntry& e : catalog_entries())
      os << std::left << std::setw(20) << e.id << ' ' << e.description << " [" << e.expectation
         << "]\n";
  }
  emit(cfg, os.str());
  return kExitPass;
}

template <class T>
void optional_flag(CLI::App* app, const std::string& name, std::optional<T>& target,
                   const std::string& help) {
  app->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks for dually flat (alpha, beta)-metrics"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto common = [&cfg](CLI::App* sub) {
    sub->add_option("--dim", cfg.dim, "dimension n")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    sub->add_option("--output,-o", cfg.output, "output file (default stdout)");
    sub->add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    optional_flag(sub, "--tol", cfg.tol, "tolerance");
  };

  CLI::App* verify = app.add_subcommand("verify", "run a verification suite");
  verify->add_option("--case", cfg.case_id, "catalog or suite id (see list-cases)")->required();
  optional_flag(verify, "--samples", cfg.samples, "number of sample points");
  optional_flag(verify, "--mu", cfg.mu, "mu of the flat pair");
  optional_flag(verify, "--lambda", cfg.lambda, "lambda of the flat pair");
  optional_flag(verify, "--kappa", cfg.kappa, "kappa for ex-5.2 / family-1.11");
  optional_flag(verify, "--eps", cfg.eps, "eps for ex-5.2 / family-1.11");
  verify->add_option("--sign", cfg.sign, "upper (+1) or lower (-1) sign for ex-5.5 / ex-5.6")
      ->check(CLI::IsMember({1, -1}));
  common(verify);

  CLI::App* solve = app.add_subcommand("solve-phi", "tabulate phi on its natural domain");
  optional_flag(solve, "--k1", cfg.k1, "k1");
  optional_flag(solve, "--k2", cfg.k2, "k2");
  optional_flag(solve, "--k3", cfg.k3, "k3");
  optional_flag(solve, "--eps", cfg.eps, "phi'(0)");
  solve->add_option("--method", cfg.method, "auto, elementary or integral")
      ->check(CLI::IsMember({"auto", "elementary", "integral"}));
  solve->add_option("--grid", cfg.grid, "number of grid points")->capture_default_str();
  common(solve);

  CLI::App* eta = app.add_subcommand("report-eta", "closed-form eta against quadrature");
  common(eta);

  CLI::App* list = app.add_subcommand("list-cases", "list catalog and suite ids");
  list->add_option("--format", cfg.format, "text or json")->check(CLI::IsMember({"text", "json"}));
  list->add_option("--output,-o", cfg.output, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (verify->parsed()) {
      cfg.command = "verify";
      cfg.validate();
      return cmd_verify(cfg);
    }
    if (solve->parsed()) {
      cfg.command = "solve-phi";
      if (cfg.format == "json" && !solve->count("--format")) cfg.format = "csv";
      cfg.validate();
      return cmd_solve_phi(cfg);
    }
    if (eta->parsed()) {
      cfg.command = "report-eta";
      cfg.case_id = "eta";
      cfg.validate();
      return cmd_report_eta(cfg);
    }
    if (list->parsed()) {
      cfg.command = "list-cases";
      if (!list->count("--format")) cfg.format = "text";
      return cmd_list_cases(cfg);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << " (admissible interval [" << e.lower() << ", "
              << e.upper() << "])\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return kExitUsage;
}
