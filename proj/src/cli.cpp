#include "hybridbell/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "hybridbell/format.hpp"
#include "hybridbell/locality.hpp"
#include "hybridbell/nonclassicality.hpp"

namespace hybridbell::cli {

namespace {

struct Spec {
  std::string state = "tmsvs";
  double r_min = 1.0, r_max = 1.0, r_step = 0.05;
  double alpha0_min = 1.0, alpha0_max = 1.0, alpha0_step = 0.05;
  double eta_a = 1.0, eta_b = 1.0;
  double phi1 = 0.0, phi2 = std::numbers::pi / 2;
  std::string gamma1 = "0,0", gamma2 = "1,0";
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "csv";
  long samples = 1000;
  int setting_i = 1, setting_j = 1;
  int starts = 64;
  long max_evaluations = 1500;
  int nodes = 32;
  double x_min = -6.0, x_max = 6.0;
  int x_points = 121;
};

/// Per-command defaults; the published figure parameters where one applies.
void apply_defaults(const std::string& command, Spec& s) {
  if (command == "nc-scan") {
    s.state = "tmsvs";
    s.r_min = 0.05;
    s.r_max = 2.0;
    s.r_step = 0.05;
    s.eta_a = 0.7;
    s.eta_b = 0.6;
  } else if (command == "cat-scan") {
    s.state = "cat";
    s.alpha0_min = 0.0;
    s.alpha0_max = 1.5;
    s.alpha0_step = 0.05;
  }
}

/// Cat-state settings are the defaults whenever the state is cat.
void apply_state_defaults(Spec& s) {
  if (s.state == "cat") {
    s.eta_a = 0.95;
    s.eta_b = 0.95;
    s.gamma1 = "0,0.25";
    s.gamma2 = "0,-0.25";
  }
}

Complex parse_complex(const std::string& text, const char* name) {
  std::string t = text;
  for (char& c : t) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(t);
  double re = 0.0;
  double im = 0.0;
  if (!(in >> re)) throw std::invalid_argument(std::string(name) + ": expected re,im but got '" + text + "'");
  if (!(in >> im)) im = 0.0;
  std::string rest;
  if (in >> rest) throw std::invalid_argument(std::string(name) + ": expected re,im but got '" + text + "'");
  return {re, im};
}

std::vector<double> make_grid(double lo, double hi, double step, const char* name) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(step > 0.0) || hi < lo) {
    throw std::invalid_argument(std::string("empty ") + name + " grid");
  }
  const long n = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> grid;
  for (long k = 0; k < n; ++k) grid.push_back(lo + step * static_cast<double>(k));
  return grid;
}

HybridSettings settings_of(const Spec& s) {
  HybridSettings out;
  out.phi = {s.phi1, s.phi2};
  out.gamma = {parse_complex(s.gamma1, "--gamma1"), parse_complex(s.gamma2, "--gamma2")};
  out.validate();
  return out;
}

TmsvsParams tmsvs_params(const Spec& s, double r) {
  TmsvsParams p;
  p.r = r;
  p.eff = {s.eta_a, s.eta_b};
  p.validate();
  return p;
}

CatParams cat_params(const Spec& s, double alpha0) {
  CatParams p;
  p.alpha0 = alpha0;
  p.eff = {s.eta_a, s.eta_b};
  p.validate();
  return p;
}

BehaviorPtr single_behavior(const Spec& s) {
  const HybridSettings settings = settings_of(s);
  if (s.state == "tmsvs") return std::make_shared<TmsvsBehavior>(tmsvs_params(s, s.r_min), settings);
  return std::make_shared<CatBehavior>(cat_params(s, s.alpha0_min), settings);
}

std::string num(double v) { return format_double(v); }

Table cmd_nc_scan(const Spec& s, std::ostream& err) {
  if (s.state != "tmsvs") throw std::invalid_argument("nc-scan requires --state tmsvs");
  const std::vector<double> grid = make_grid(s.r_min, s.r_max, s.r_step, "r");
  const HybridSettings settings = settings_of(s);
  if (settings.gamma[0].imag() != 0.0 || settings.gamma[1].imag() != 0.0) {
    throw std::invalid_argument("nc-scan needs real displacements");
  }
  nonclassicality::NcTestConfig base;
  base.phi0 = settings.phi[0];
  base.gamma1 = settings.gamma[0].real();
  base.gamma2 = settings.gamma[1].real();
  base.validate();

  Table t{{"r", "eta_A", "eta_B", "x0", "alpha0", "D", "lhs", "rhs", "R"}, {}};
  for (double r : grid) {
    const TmsvsParams p = tmsvs_params(s, r);
    const TmsvsBehavior b(p, settings);
    const nonclassicality::NcReport rep =
        nonclassicality::optimize_nc(b, base, nonclassicality::tmsvs_nc_search(p));
    t.rows.push_back({num(r), num(s.eta_a), num(s.eta_b), num(rep.config.x0),
                      num(rep.config.alpha0), num(rep.D), num(rep.lhs), num(rep.rhs), num(rep.R)});
  }
  err << "nc-scan: " << t.rows.size() << " grid points\n";
  return t;
}

Table violation_rows(const Spec& s, std::ostream& err) {
  const std::vector<double> grid = make_grid(s.alpha0_min, s.alpha0_max, s.alpha0_step, "alpha0");
  const HybridSettings settings = settings_of(s);
  Table t{{"alpha0", "eta_A", "eta_B", "V", "margin1", "margin2"}, {}};
  double prev_a = 0.0;
  double prev_v = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const CatBehavior b(cat_params(s, grid[k]), settings);
    const locality::LocalityMargins m = locality::locality_margins(locality::MMFunctions(b));
    const double v = m.violation();
    if (k > 0 && (prev_v <= 0.0) != (v <= 0.0)) {
      err << "V changes sign between alpha0 = " << num(prev_a) << " and " << num(grid[k]) << '\n';
    }
    prev_a = grid[k];
    prev_v = v;
    t.rows.push_back({num(grid[k]), num(s.eta_a), num(s.eta_b), num(v), num(m.first), num(m.second)});
  }
  return t;
}

Table cmd_cat_scan(const Spec& s, std::ostream& err) {
  if (s.state != "cat") throw std::invalid_argument("cat-scan requires --state cat");
  return violation_rows(s, err);
}

Table cmd_locality(const Spec& s, std::ostream& err) {
  if (s.state == "cat") return violation_rows(s, err);
  if (s.starts < 1) throw std::invalid_argument("--starts must be positive");
  const std::vector<double> grid = make_grid(s.r_min, s.r_max, s.r_step, "r");
  Table t{{"r", "eta_A", "eta_B", "F_max", "phi1", "phi2", "gamma1_re", "gamma1_im", "gamma2_re",
           "gamma2_im"},
          {}};
  numerics::MultistartOptions options;
  options.local.max_evaluations = s.max_evaluations;
  for (double r : grid) {
    const locality::FMaximum best =
        locality::maximize_locality_objective(tmsvs_params(s, r), s.starts, s.seed, options);
    const HybridSettings& at = best.settings;
    t.rows.push_back({num(r), num(s.eta_a), num(s.eta_b), num(best.result.value), num(at.phi[0]),
                      num(at.phi[1]), num(at.gamma[0].real()), num(at.gamma[0].imag()),
                      num(at.gamma[1].real()), num(at.gamma[1].imag())});
    err << "global max of F at r = " << num(r) << ": " << num(best.result.value) << '\n';
  }
  return t;
}

Table cmd_jpdao(const Spec& s, std::ostream& err) {
  if (s.nodes < 2) throw std::invalid_argument("--nodes must be at least 2");
  const BehaviorPtr b = single_behavior(s);
  const locality::FactorizedJpdao j = locality::build_jpdao(b);
  err << "kappa = " << num(j.kappa) << '\n';
  std::ostringstream csv;
  locality::write_jpdao_csv(csv, j, *b, s.nodes);
  Table t;
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  t.columns = {"x1", "x2", "n1", "n2", "w"};
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    t.rows.push_back(std::move(cells));
  }
  return t;
}

Table cmd_behavior(const Spec& s, std::ostream&) {
  if (s.x_points < 2 || !(s.x_max > s.x_min)) throw std::invalid_argument("empty x grid");
  const BehaviorPtr b = single_behavior(s);
  std::vector<double> xs;
  for (int k = 0; k < s.x_points; ++k) xs.push_back(s.x_min + (s.x_max - s.x_min) * k / (s.x_points - 1));
  Table t{{"x", "n", "i", "j", "p"}, {}};
  for (const TabulatedSample& row : tabulate(*b, xs)) {
    t.rows.push_back({num(row.x), std::to_string(row.n), std::to_string(row.i),
                      std::to_string(row.j), num(row.p)});
  }
  return t;
}

Table cmd_sample(const Spec& s, std::ostream&) {
  if (s.samples < 1) throw std::invalid_argument("--samples must be positive");
  check_setting_index(s.setting_i, "--setting-i");
  check_setting_index(s.setting_j, "--setting-j");
  const BehaviorPtr b = single_behavior(s);
  Table t{{"x", "n"}, {}};
  for (const Outcome& o : sample_outcomes(*b, s.setting_i, s.setting_j, s.samples, s.seed)) {
    t.rows.push_back({num(o.x), std::to_string(o.n)});
  }
  return t;
}

}  // namespace

void write_csv(std::ostream& out, const Table& table) {
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    out << (c ? "," : "") << table.columns[c];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << '\n';
  }
}

void write_json(std::ostream& out, const Table& table) {
  auto cell = [](const std::string& v) {
    // JSON has no literal for non-finite numbers.
    const bool finite = v.find_first_of("ni") == std::string::npos;
    return finite ? v : std::string("null");
  };
  out << "[";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out << (r ? ",\n " : "\n ") << "{";
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      out << (c ? ", " : "") << '"' << table.columns[c] << "\": " << cell(table.rows[r][c]);
    }
    out << "}";
  }
  out << (table.rows.empty() ? "]\n" : "\n]\n");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bell nonlocality and nonclassicality tests for hybrid homodyne measurements",
               "hybridbell"};
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  std::string config_default;
  if (const char* env = std::getenv(kConfigEnv); env != nullptr && *env != '\0') {
    config_default = env;
    if (!std::filesystem::exists(config_default)) {
      err << "configuration file named by " << kConfigEnv << " does not exist: " << config_default
          << '\n';
      return kSpecError;
    }
  }
  app.set_config("--config", config_default, "key=value configuration file");
  app.require_subcommand(1);
  app.fallthrough();

  Spec raw;
  std::vector<std::pair<CLI::Option*, std::function<void(Spec&)>>> bound;
  auto bind = [&](CLI::Option* opt, auto Spec::*field) {
    bound.push_back({opt, [opt, field, &raw](Spec& s) {
                       if (opt->count() > 0) s.*field = raw.*field;
                     }});
  };
  bind(app.add_option("--state", raw.state, "tmsvs or cat")->check(CLI::IsMember({"tmsvs", "cat"})),
       &Spec::state);
  bind(app.add_option("--r-min", raw.r_min, "smallest squeezing parameter"), &Spec::r_min);
  bind(app.add_option("--r-max", raw.r_max, "largest squeezing parameter"), &Spec::r_max);
  bind(app.add_option("--r-step", raw.r_step, "squeezing grid step"), &Spec::r_step);
  bind(app.add_option("--alpha0-min", raw.alpha0_min, "smallest cat amplitude"), &Spec::alpha0_min);
  bind(app.add_option("--alpha0-max", raw.alpha0_max, "largest cat amplitude"), &Spec::alpha0_max);
  bind(app.add_option("--alpha0-step", raw.alpha0_step, "cat amplitude grid step"), &Spec::alpha0_step);
  bind(app.add_option("--eta-a", raw.eta_a, "Alice's detection efficiency"), &Spec::eta_a);
  bind(app.add_option("--eta-b", raw.eta_b, "Bob's detection efficiency"), &Spec::eta_b);
  bind(app.add_option("--phi1", raw.phi1, "first quadrature phase"), &Spec::phi1);
  bind(app.add_option("--phi2", raw.phi2, "second quadrature phase"), &Spec::phi2);
  bind(app.add_option("--gamma1", raw.gamma1, "first displacement as re,im"), &Spec::gamma1);
  bind(app.add_option("--gamma2", raw.gamma2, "second displacement as re,im"), &Spec::gamma2);
  bind(app.add_option("--seed", raw.seed, "random seed"), &Spec::seed);
  bind(app.add_option("--out", raw.out, "output file; standard output if omitted"), &Spec::out);
  bind(app.add_option("--format", raw.format, "csv or json")->check(CLI::IsMember({"csv", "json"})),
       &Spec::format);
  bind(app.add_option("--samples", raw.samples, "number of sampled outcomes"), &Spec::samples);
  bind(app.add_option("--setting-i", raw.setting_i, "Alice setting for sampling"), &Spec::setting_i);
  bind(app.add_option("--setting-j", raw.setting_j, "Bob setting for sampling"), &Spec::setting_j);
  bind(app.add_option("--starts", raw.starts, "multistart count for the F search"), &Spec::starts);
  bind(app.add_option("--max-evaluations", raw.max_evaluations, "simplex budget per start"),
       &Spec::max_evaluations);
  bind(app.add_option("--nodes", raw.nodes, "quadrature nodes per axis of the JPDAO dump"),
       &Spec::nodes);
  bind(app.add_option("--x-min", raw.x_min, "behavior table lower x"), &Spec::x_min);
  bind(app.add_option("--x-max", raw.x_max, "behavior table upper x"), &Spec::x_max);
  bind(app.add_option("--x-points", raw.x_points, "behavior table size"), &Spec::x_points);

  using Command = std::function<Table(const Spec&, std::ostream&)>;
  const std::vector<std::tuple<std::string, std::string, Command>> commands = {
      {"nc-scan", "relative violation R(r) of the nonclassicality inequality", cmd_nc_scan},
      {"cat-scan", "locality violation V(alpha0) of the hybrid cat state", cmd_cat_scan},
      {"locality", "global maximum of F (tmsvs) or V on an alpha0 grid (cat)", cmd_locality},
      {"jpdao", "joint distribution of all outcomes for a local behavior", cmd_jpdao},
      {"behavior", "tabulated behavior P(x, n | phi_i, gamma_j)", cmd_behavior},
      {"sample", "sampled outcomes (x, n) at one setting pair", cmd_sample},
  };
  for (const auto& [name, help, fn] : commands) app.add_subcommand(name, help);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kSpecError;
  }

  std::string command;
  Command fn;
  for (const auto& [name, help, f] : commands) {
    if (app.got_subcommand(name)) {
      command = name;
      fn = f;
    }
  }

  Spec spec;
  apply_defaults(command, spec);
  // The state decides the remaining defaults, so it is resolved first.
  if (bound.front().first->count() > 0) spec.state = raw.state;
  apply_state_defaults(spec);
  for (auto& [opt, apply] : bound) apply(spec);

  try {
    const Table table = fn(spec, err);
    std::ostringstream text;
    if (spec.format == "json") {
      write_json(text, table);
    } else {
      write_csv(text, table);
    }
    if (spec.out.empty()) {
      out << text.str();
    } else {
      std::ofstream file(spec.out, std::ios::binary);
      if (!(file << text.str())) {
        err << "cannot write " << spec.out << '\n';
        return kFailure;
      }
    }
    return kSuccess;
  } catch (const locality::NotLocalError& e) {
    err << "not local: " << e.what() << '\n';
    return kPreconditionFailure;
  } catch (const locality::DegeneracyError& e) {
    err << "degenerate behavior: " << e.what() << '\n';
    return kPreconditionFailure;
  } catch (const nonclassicality::NonConvergenceError& e) {
    err << "no convergence: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const numerics::IntegrationError& e) {
    err << "no convergence: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const std::domain_error& e) {
    err << "precondition failed: " << e.what() << '\n';
    return kPreconditionFailure;
  } catch (const std::invalid_argument& e) {
    err << "invalid specification: " << e.what() << '\n';
    return kSpecError;
  } catch (const std::out_of_range& e) {
    err << "invalid specification: " << e.what() << '\n';
    return kSpecError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace hybridbell::cli
