#include "keysim/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "keysim/analytics.hpp"
#include "keysim/config.hpp"
#include "keysim/csv.hpp"
#include "keysim/simulator.hpp"

namespace keysim {

namespace {

struct Options {
  std::string config_path;
  std::string figure;
  std::string sweep;
  std::string out_path;
  std::string plot_script;
  std::optional<std::uint32_t> trials;
  std::optional<std::uint64_t> seed;
  bool delete_low_priority = false;
  std::optional<bool> use_floors;
  bool resume = false;
  std::string trace;
  std::string transcript_path;
  std::string dump_pool;
  std::string dump_rings;
};

struct ExitWith {
  int code;
};

std::vector<double> parse_values(const std::string& field, const std::string& text) {
  std::vector<double> values;
  // start:stop:step
  if (text.find(':') != std::string::npos) {
    std::stringstream s(text);
    std::string a, b, c;
    std::getline(s, a, ':');
    std::getline(s, b, ':');
    std::getline(s, c, ':');
    try {
      const double start = std::stod(a);
      const double stop = std::stod(b);
      const double step = c.empty() ? 1.0 : std::stod(c);
      if (!(step > 0)) throw InvalidConfig("sweep: step must be > 0");
      for (long i = 0;; ++i) {
        const double v = start + static_cast<double>(i) * step;
        if (v > stop + step * 1e-9) break;
        values.push_back(v);
      }
    } catch (const std::logic_error&) {
      throw InvalidConfig("sweep: cannot parse range '" + text + "' for " + field);
    }
    return values;
  }
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw InvalidConfig("sweep: '" + item + "' is not a number");
    }
  }
  if (values.empty()) throw InvalidConfig("sweep: no values given for " + field);
  return values;
}

Sweep parse_sweep(const std::string& text, const std::string& default_field, std::vector<double> default_values) {
  if (text.empty()) return Sweep{default_field, std::move(default_values)};
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw InvalidConfig("sweep: expected FIELD=v1,v2,...");
  Sweep sweep;
  sweep.field = text.substr(0, eq);
  sweep.values = parse_values(sweep.field, text.substr(eq + 1));
  return sweep;
}

std::vector<double> range(double start, double stop, double step) {
  std::vector<double> out;
  for (double v = start; v <= stop + 1e-9; v += step) out.push_back(v);
  return out;
}

SimConfig resolve_config(const Options& opt, std::ostream& err, bool* seed_given = nullptr) {
  LoadedConfig loaded;
  try {
    if (!opt.config_path.empty()) loaded = load_config(opt.config_path);
  } catch (const ConfigError& e) {
    for (const auto& p : e.problems()) err << "error: " << p << "\n";
    throw ExitWith{kExitConfig};
  }
  auto& c = loaded.config;
  if (opt.trials) c.trials = *opt.trials;
  if (opt.seed) {
    c.seed = *opt.seed;
    loaded.seed_given = true;
  }
  if (opt.delete_low_priority) c.delete_low_priority = true;
  if (opt.use_floors) c.use_floors = *opt.use_floors;
  if (seed_given) *seed_given = loaded.seed_given;

  const auto problems = c.violations();
  if (!problems.empty()) {
    for (const auto& p : problems) err << "error: " << p << "\n";
    throw ExitWith{kExitConfig};
  }
  return c;
}

std::ofstream open_output(const std::string& path, std::ostream& err, std::ios::openmode mode = std::ios::out) {
  std::ofstream file(path, mode);
  if (!file) {
    err << "error: cannot write '" << path << "'\n";
    throw ExitWith{kExitIo};
  }
  return file;
}

void check_written(std::ostream& stream, const std::string& path, std::ostream& err) {
  stream.flush();
  if (!stream) {
    err << "error: write to '" << path << "' failed\n";
    throw ExitWith{kExitIo};
  }
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

int cmd_validate(const Options& opt, std::ostream& out, std::ostream& err) {
  const SimConfig c = resolve_config(opt, err);
  out << config_to_json(c);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

void write_plot_script(const std::string& path, const std::string& figure, const std::string& csv_path,
                       std::ostream& err) {
  auto file = open_output(path, err);
  file << "# gnuplot script; run: gnuplot " << path << "\n"
       << "set datafile separator ','\n"
       << "set key autotitle columnhead\n"
       << "set terminal pngcairo size 800,600\n"
       << "set output '" << figure << ".png'\n";
  if (figure == "netsize") {
    file << "set xlabel 'average neighbors d'\nset ylabel 'maximum network size n'\n"
         << "plot for [r in \"30 40\"] '" << csv_path
         << "' using ($1 == r ? $2 : 1/0):3 with lines title 'd_r = '.r.' m'\n";
  } else if (figure == "connectivity") {
    file << "set xlabel 'additional memory (%)'\nset ylabel 'p'\n"
         << "plot '" << csv_path << "' using 1:3 with linespoints\n";
  } else {
    file << "set xlabel 'captured nodes N_c'\nset ylabel 'P_e'\n"
         << "plot '" << csv_path << "' using 1:2 with lines\n";
  }
  check_written(file, path, err);
}

int cmd_analyze(const Options& opt, std::ostream& out, std::ostream& err) {
  const SimConfig c = resolve_config(opt, err);
  const std::set<std::string> figures{"netsize", "connectivity", "resilience"};
  if (!figures.contains(opt.figure)) {
    err << "error: figure: expected netsize, connectivity or resilience\n";
    return kExitConfig;
  }

  std::ostringstream body;
  CsvWriter csv(body);
  if (opt.figure == "netsize") {
    const auto sweep = parse_sweep(opt.sweep, "d_r", {30.0, 40.0});
    if (sweep.field != "d_r") throw InvalidConfig("sweep: netsize sweeps d_r");
    csv.row("d_r", "d", "n");
    for (const auto& pt : netsize_curve(c.field.area(), sweep.values, range(1, 100, 1))) csv.row(pt.d_r, pt.d, pt.n);
  } else if (opt.figure == "connectivity") {
    const auto sweep = parse_sweep(opt.sweep, "memory_pct", range(0, 100, 10));
    const std::set<std::string> allowed{"memory_pct", "m", "c", "M", "d_r"};
    if (!allowed.contains(sweep.field)) throw InvalidConfig("sweep: connectivity sweeps memory_pct, m, c, M or d_r");
    csv.row(sweep.field, "m", "p_analytic");
    for (double v : sweep.values) {
      const SimConfig point = apply_sweep(c, sweep.field, v);
      point.validate();
      csv.row(v, point.ring_size, average_connectivity(AnalyticParams::from_config(point)));
    }
  } else {
    const auto sweep = parse_sweep(opt.sweep, "N_c", range(0, 1000, 10));
    if (sweep.field != "N_c") throw InvalidConfig("sweep: resilience sweeps N_c");
    csv.row("N_c", "P_e");
    for (const auto& pt : resilience_curve(c.ring_size, c.pool_size, sweep.values)) csv.row(pt.captured, pt.p_e);
  }

  if (opt.out_path.empty()) {
    out << body.str();
  } else {
    auto file = open_output(opt.out_path, err);
    file << body.str();
    check_written(file, opt.out_path, err);
  }
  if (!opt.plot_script.empty()) {
    write_plot_script(opt.plot_script, opt.figure, opt.out_path.empty() ? "-" : opt.out_path, err);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

constexpr const char* kSimulateHeader =
    "sweep_field,sweep_value,p_sim_mean,p_sim_std,p_analytic,trials,m,p_sim_interior_mean,"
    "per_key_mean,per_key_std,per_key_analytic,link_compromise_mean,link_compromise_std,overflow_mean";

void write_row(CsvWriter& csv, const SweepRow& r) {
  csv.row(r.field, r.value, r.p_mean, r.p_std, r.p_analytic, r.trials, r.ring_size, r.p_interior_mean,
          r.per_key_mean, r.per_key_std, r.per_key_analytic, r.link_compromise_mean, r.link_compromise_std,
          r.overflow_mean);
}

// Sweep values already present in a previous, possibly interrupted run.
std::set<std::string> completed_values(const std::string& path, const std::string& field, std::ostream& err) {
  std::set<std::string> done;
  std::ifstream in(path);
  if (!in) return done;
  std::string line;
  if (!std::getline(in, line)) return done;
  if (line != kSimulateHeader) {
    err << "error: '" << path << "' has a different header; refusing to resume\n";
    throw ExitWith{kExitConfig};
  }
  while (std::getline(in, line)) {
    std::stringstream s(line);
    std::string f, v;
    std::getline(s, f, ',');
    std::getline(s, v, ',');
    if (f == field) done.insert(v);
  }
  return done;
}

void run_debug_trial(const SimConfig& c, const Options& opt, std::ostream& err) {
  Trial trial(c, trial_seed(c.seed, 0));
  std::optional<std::pair<NodeId, NodeId>> pair;
  if (!opt.trace.empty()) {
    const auto comma = opt.trace.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument(opt.trace);
      pair = std::pair{static_cast<NodeId>(std::stoul(opt.trace.substr(0, comma))),
                       static_cast<NodeId>(std::stoul(opt.trace.substr(comma + 1)))};
    } catch (const std::logic_error&) {
      err << "error: trace: expected U,V node ids\n";
      throw ExitWith{kExitConfig};
    }
    trial.trace_pair(pair->first, pair->second);
  }
  trial.setup();
  trial.bootstrap();

  if (pair) {
    const std::string path = opt.transcript_path.empty() ? "transcript.csv" : opt.transcript_path;
    auto file = open_output(path, err);
    CsvWriter csv(file);
    csv.row("from", "to", "message_hex", "message");
    for (const auto& e : trial.transcript()) csv.row(e.from, e.to, to_hex(encode_message(e.message)), describe(e.message));
    check_written(file, path, err);
  }
  if (!opt.dump_pool.empty()) {
    auto file = open_output(opt.dump_pool, err);
    write_pool_csv(file, *trial.pool());
    check_written(file, opt.dump_pool, err);
  }
  if (!opt.dump_rings.empty()) {
    auto file = open_output(opt.dump_rings, err);
    write_rings_csv(file, trial.nodes());
    check_written(file, opt.dump_rings, err);
  }
}

int cmd_simulate(const Options& opt, std::ostream& out, std::ostream& err) {
  bool seed_given = false;
  const SimConfig c = resolve_config(opt, err, &seed_given);
  if (!seed_given) {
    err << "error: seed: a master seed is required for simulate (--seed or \"seed\" in the config)\n";
    return kExitConfig;
  }
  const auto sweep = parse_sweep(opt.sweep, "memory_pct", {0.0});
  if (!is_sweep_field(sweep.field)) {
    err << "error: sweep: unknown field '" << sweep.field << "'\n";
    return kExitConfig;
  }
  // Every sweep point must be valid before any trial runs.
  for (double v : sweep.values) {
    const auto problems = apply_sweep(c, sweep.field, v).violations();
    if (!problems.empty()) {
      for (const auto& p : problems) err << "error: " << sweep.field << "=" << csv_field(v) << ": " << p << "\n";
      return kExitConfig;
    }
  }

  if (!opt.trace.empty() || !opt.dump_pool.empty() || !opt.dump_rings.empty()) {
    run_debug_trial(apply_sweep(c, sweep.field, sweep.values.front()), opt, err);
  }

  std::set<std::string> done;
  std::unique_ptr<std::ofstream> file;
  std::ostream* sink = &out;
  if (!opt.out_path.empty()) {
    const bool resume = opt.resume && std::filesystem::exists(opt.out_path);
    if (resume) done = completed_values(opt.out_path, sweep.field, err);
    const bool fresh_file = !resume || std::filesystem::file_size(opt.out_path) == 0;
    file = std::make_unique<std::ofstream>(open_output(opt.out_path, err, resume ? std::ios::app : std::ios::out));
    sink = file.get();
    if (fresh_file) *sink << kSimulateHeader << "\n";
  } else {
    out << kSimulateHeader << "\n";
  }

  CsvWriter csv(*sink);
  Sweep todo{sweep.field, {}};
  for (double v : sweep.values) {
    if (!done.contains(csv_field(v))) todo.values.push_back(v);
  }
  run_experiment(c, todo, [&](const SweepRow& row) {
    write_row(csv, row);
    csv.flush();
    if (!*sink) {
      err << "error: write to '" << opt.out_path << "' failed\n";
      throw ExitWith{kExitIo};
    }
  });
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Key establishment simulator for mobile sensor networks", "keysim"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON config file (flat keys, see docs/config.md)");
    sub->add_option("--trials", opt.trials, "trials per sweep point");
    sub->add_option("--seed", opt.seed, "master seed");
    sub->add_flag("--delete-low-priority", opt.delete_low_priority, "drop low-priority units after ranking");
    sub->add_option("--use-floors", opt.use_floors, "floor the analytic key counts (true/false)");
  };

  auto* validate = app.add_subcommand("validate", "check a config and print it normalized");
  add_common(validate);

  auto* analyze = app.add_subcommand("analyze", "emit an analytic curve as CSV");
  add_common(analyze);
  analyze->add_option("--figure", opt.figure, "netsize | connectivity | resilience")->required();
  analyze->add_option("--sweep", opt.sweep, "FIELD=v1,v2,... or FIELD=start:stop:step");
  analyze->add_option("--out", opt.out_path, "output CSV (stdout if omitted)");
  analyze->add_option("--plot-script", opt.plot_script, "also write a gnuplot script");

  auto* simulate = app.add_subcommand("simulate", "run seeded Monte Carlo trials over a sweep");
  add_common(simulate);
  simulate->add_option("--sweep", opt.sweep, "FIELD=v1,v2,... (default memory_pct=0)");
  simulate->add_option("--out", opt.out_path, "output CSV (stdout if omitted)");
  simulate->add_flag("--resume", opt.resume, "skip sweep values already in --out and append");
  simulate->add_option("--trace", opt.trace, "record handshakes of node pair U,V in trial 0");
  simulate->add_option("--transcript", opt.transcript_path, "transcript CSV path for --trace");
  simulate->add_option("--dump-pool", opt.dump_pool, "write trial 0's key pool as CSV");
  simulate->add_option("--dump-rings", opt.dump_rings, "write trial 0's key rings as CSV");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (validate->parsed()) return cmd_validate(opt, out, err);
    if (analyze->parsed()) return cmd_analyze(opt, out, err);
    return cmd_simulate(opt, out, err);
  } catch (const ExitWith& e) {
    return e.code;
  } catch (const InvalidConfig& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace keysim
