#include "semicp/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "semicp/harness.hpp"

namespace semicp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) throw UsageError("invalid " + what + ": '" + s + "'");
  return v;
}

long long parse_integer(const std::string& s, const std::string& what) {
  // Accept scientific notation for whole numbers (e.g. 1e4).
  const double d = parse_double(s, what);
  if (d != std::floor(d)) throw UsageError("invalid " + what + ": '" + s + "' is not an integer");
  return static_cast<long long>(d);
}

std::uint64_t parse_seed(const std::string& s) {
  std::size_t pos = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(s, &pos, 0);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) throw UsageError("invalid seed: '" + s + "'");
  return v;
}

OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  throw UsageError("format must be csv or json, got '" + s + "'");
}

/// Raw string values keyed by flag name (without dashes).
using Settings = std::map<std::string, std::string>;

Settings read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  Settings out;
  const std::string body = trim(text);
  if (!body.empty() && body.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(std::string("config file: ") + e.what());
    }
    for (const auto& [key, value] : j.items()) {
      if (value.is_array()) {
        std::string joined;
        for (const auto& v : value) joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
        out[key] = joined;
      } else {
        out[key] = value.is_string() ? value.get<std::string>() : value.dump();
      }
    }
    return out;
  }
  std::stringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config file line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

void apply_settings(const Settings& s, ExperimentConfig& cfg, bool& format_set) {
  for (const auto& [key, value] : s) {
    if (key == "n") {
      cfg.n_list.clear();
      for (const auto& v : split_list(value)) cfg.n_list.push_back(static_cast<int>(parse_integer(v, "n")));
    } else if (key == "lambda") {
      cfg.lambda_list.clear();
      for (const auto& v : split_list(value)) cfg.lambda_list.push_back(parse_double(v, "lambda"));
    } else if (key == "theta") {
      cfg.theta = parse_double(value, "theta");
    } else if (key == "replicas") {
      const long long r = parse_integer(value, "replicas");
      if (r < 1) throw UsageError("replicas must be >= 1");
      cfg.replicas = static_cast<std::size_t>(r);
    } else if (key == "horizon") {
      cfg.horizon = parse_double(value, "horizon");
    } else if (key == "seed") {
      cfg.master_seed = parse_seed(value);
    } else if (key == "out") {
      cfg.out_path = value;
    } else if (key == "format") {
      cfg.format = parse_format(value);
      format_set = true;
    } else if (key == "epsilon") {
      cfg.epsilon = parse_double(value, "epsilon");
    } else if (key == "threads") {
      const long long t = parse_integer(value, "threads");
      if (t < 0) throw UsageError("threads must be >= 0");
      cfg.threads = static_cast<unsigned>(t);
    } else {
      throw UsageError("unknown setting '" + key + "'");
    }
  }
}

template <class Row>
std::string render(const std::vector<Row>& rows, OutputFormat fmt) {
  return format_rows(rows, fmt);
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact simulation and verification harness for the contact process with a "
               "semi-infected state on the complete graph",
               "semicp"};
  app.require_subcommand(1, 1);

  struct Flags {
    std::string n, lambda, theta, replicas, horizon, seed, out, format, config, epsilon, threads;
  } flags;

  const std::vector<std::pair<std::string, std::string>> kinds = {
      {"sweep", "extinction-time sweep over n and lambda, started from (n, 0)"},
      {"meanfield", "sup-deviation of (B/n, G/n) from the ODE solution on [0, horizon]"},
      {"coupling-audit", "order-violation audit of both coupling variants"},
      {"lumping", "per-vertex simulator vs lumped chain, TV distance at time horizon"},
      {"aux", "auxiliary-chain checks (survival design, minorant, domination, envelope chain)"},
      {"ode", "integrate the mean-field ODE from (1, 0)"}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : kinds) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--n", flags.n, "comma-separated population sizes");
    sub->add_option("--lambda", flags.lambda, "comma-separated infection rates");
    sub->add_option("--theta", flags.theta, "theta of the envelope chain (aux)");
    sub->add_option("--replicas", flags.replicas, "replicas per cell");
    sub->add_option("--horizon", flags.horizon, "time horizon (T for meanfield/lumping, t for aux)");
    sub->add_option("--seed", flags.seed, "master seed (default: $SEMICP_SEED or 1)");
    sub->add_option("--out", flags.out, "output path (default: stdout)");
    sub->add_option("--format", flags.format, "csv or json (default: from --out extension, else csv)");
    sub->add_option("--config", flags.config, "key = value or JSON config file; flags take precedence");
    sub->add_option("--epsilon", flags.epsilon, "deviation threshold for meanfield (default 0.05)");
    sub->add_option("--threads", flags.threads, "worker threads (0 = all cores)");
    subs.push_back(sub);
  }

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  CLI::App* chosen = nullptr;
  for (auto* s : subs)
    if (s->parsed()) chosen = s;

  try {
    const ExperimentKind kind = parse_kind(chosen->get_name());
    ExperimentConfig cfg = default_config(kind);
    bool format_set = false;
    if (const char* env = std::getenv("SEMICP_SEED"); env && *env) cfg.master_seed = parse_seed(env);
    if (!flags.config.empty()) apply_settings(read_config_file(flags.config), cfg, format_set);

    Settings cli;
    auto take = [&](const char* key, const std::string& value) {
      if (chosen->count(std::string("--") + key) > 0) cli[key] = value;
    };
    take("n", flags.n);
    take("lambda", flags.lambda);
    take("theta", flags.theta);
    take("replicas", flags.replicas);
    take("horizon", flags.horizon);
    take("seed", flags.seed);
    take("out", flags.out);
    take("format", flags.format);
    take("epsilon", flags.epsilon);
    take("threads", flags.threads);
    apply_settings(cli, cfg, format_set);

    if (!format_set && cfg.out_path.size() >= 5 &&
        cfg.out_path.compare(cfg.out_path.size() - 5, 5, ".json") == 0)
      cfg.format = OutputFormat::Json;
    if (kind == ExperimentKind::Aux && cfg.lambda_list.empty() && !cfg.theta)
      throw UsageError("aux needs --lambda and/or --theta");

    std::string text;
    int status = kExitOk;
    switch (kind) {
      case ExperimentKind::Sweep: text = render(run_sweep(cfg), cfg.format); break;
      case ExperimentKind::MeanField: text = render(run_meanfield(cfg), cfg.format); break;
      case ExperimentKind::CouplingAudit: text = render(run_coupling_audit(cfg), cfg.format); break;
      case ExperimentKind::Lumping: text = render(run_lumping_check(cfg), cfg.format); break;
      case ExperimentKind::Ode: text = render(run_ode(cfg), cfg.format); break;
      case ExperimentKind::Aux: {
        const auto rows = run_aux_checks(cfg);
        text = render(rows, cfg.format);
        for (const auto& r : rows) {
          if (r.check == "design" && !r.passed) {
            err << "error: lambda=" << r.lambda << ": " << r.detail << "\n";
            status = kExitInfeasible;
          }
        }
        break;
      }
    }
    if (cfg.out_path.empty()) out << text;
    else write_text(cfg.out_path, text);
    return status;
  } catch (const InfeasibleDesign& e) {
    err << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    // UsageError, DomainError, CapacityError: bad arguments for the experiment.
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace semicp
