// bls: train, run, verify, bench and convert from the command line.
//
// Exit codes: 0 success, 2 parse or configuration error, 3 numerical failure
// (including a verify deviation above tolerance).

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <optional>
#include <string>

#include "bls/bench.hpp"
#include "bls/error.hpp"
#include "bls/experiment.hpp"
#include "bls/persist.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInputFailure = 2;
constexpr int kNumericalFailure = 3;

struct DataArgs {
  std::string path;
  std::string labels;
  std::string format = "synthetic";
};

bls::Dataset read_data(const DataArgs& d) {
  switch (bls::parse_data_format(d.format)) {
    case bls::DataFormat::csv: return bls::load_csv(d.path);
    case bls::DataFormat::idx: return bls::load_idx(d.path, d.labels);
    case bls::DataFormat::synthetic: break;
  }
  throw bls::InvalidConfig("this command needs csv or idx data");
}

bls::Track track_for(const std::string& form) {
  if (form == "node") return bls::Track::proposed;
  if (form == "q") return bls::Track::alg1;
  if (form == "f") return bls::Track::alg2;
  throw bls::InvalidConfig("--form must be node, q or f");
}

void print_reports(const std::vector<bls::UpdateReport>& reports, const std::string& format) {
  if (format == "csv") std::cout << bls::format_csv(reports);
  else if (format == "table") std::cout << bls::format_table(reports);
  else throw bls::InvalidConfig("--format must be table or csv");
}

int check_deviations(const std::vector<bls::UpdateReport>& reports, double tolerance) {
  for (const auto& r : reports) {
    if (r.verified && r.max_deviation() > tolerance) {
      std::cerr << "verify failed at '" << r.step << "': deviation " << r.max_deviation()
                << " > " << tolerance << '\n';
      return kNumericalFailure;
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Broad learning system with exact incremental and decremental updates"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Train a network and save its state");
  DataArgs train_data;
  std::string train_config, train_state, train_out, train_form = "node";
  std::optional<double> lambda;
  std::optional<std::uint64_t> seed;
  std::optional<bls::Index> enhancement, groups, per_group, samples;
  train->add_option("--config", train_config, "Experiment config to take defaults from");
  train->add_option("--data", train_data.path, "Training data (csv file or IDX images)");
  train->add_option("--labels", train_data.labels, "IDX label file");
  train->add_option("--format", train_data.format, "Data format: csv, idx or synthetic");
  train->add_option("--lambda", lambda, "Ridge parameter");
  train->add_option("--seed", seed, "Network seed");
  train->add_option("--enhancement", enhancement, "Enhancement nodes");
  train->add_option("--feature-groups", groups, "Feature node groups");
  train->add_option("--nodes-per-group", per_group, "Feature nodes per group");
  train->add_option("--samples", samples, "Cap on training rows (synthetic: rows to draw)");
  train->add_option("--form", train_form, "State to save: node, q or f");
  train->add_option("--state", train_state, "Where to write the state")->required();
  train->add_option("--out", train_out, "Report path (a .csv sidecar is written next to it)");

  // run
  auto* run = app.add_subcommand("run", "Execute an experiment schedule");
  std::string run_config, run_out, run_state, run_format = "table";
  run->add_option("schedule", run_config, "Schedule file (flat key = value)")->required();
  run->add_option("--lambda", lambda, "Override the config's lambda");
  run->add_option("--seed", seed, "Override the config's seed");
  run->add_option("--out", run_out, "Report path (a .csv sidecar is written next to it)");
  run->add_option("--state", run_state, "Save the final state of the first stateful track");
  run->add_option("--format", run_format, "Console output: table or csv");

  // verify
  auto* verify = app.add_subcommand("verify", "Check a saved state against a fresh solve");
  DataArgs verify_data;
  verify_data.format = "csv";
  std::string verify_state;
  double tolerance = 1e-8;
  verify->add_option("--state", verify_state, "State file")->required();
  verify->add_option("--data", verify_data.path, "Training data, required for input states");
  verify->add_option("--labels", verify_data.labels, "IDX label file");
  verify->add_option("--format", verify_data.format, "Data format: csv or idx");
  verify->add_option("--tol", tolerance, "Largest acceptable relative deviation");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Time decremental updates against retraining");
  bls::BenchConfig bench_cfg;
  std::string bench_format = "table";
  bench_cmd->add_option("--l", bench_cfg.samples, "Samples");
  bench_cmd->add_option("--k", bench_cfg.nodes, "Nodes");
  bench_cmd->add_option("--c", bench_cfg.outputs, "Outputs");
  bench_cmd->add_option("--delta", bench_cfg.delta, "Rows removed");
  bench_cmd->add_option("--rho", bench_cfg.rho, "Nodes removed");
  bench_cmd->add_option("--lambda", bench_cfg.lambda, "Ridge parameter");
  bench_cmd->add_option("--seed", bench_cfg.seed, "Data seed");
  bench_cmd->add_option("--repeats", bench_cfg.repeats, "Timing repeats (best kept)");
  bench_cmd->add_option("--format", bench_format, "Output: table or csv");

  // convert
  auto* convert = app.add_subcommand("convert", "Inspect data or convert between csv and IDX");
  DataArgs convert_in;
  convert_in.format = "csv";
  std::string convert_out, convert_out_labels, shape;
  convert->add_option("input", convert_in.path, "Input data file")->required();
  convert->add_option("--labels", convert_in.labels, "IDX label file of the input");
  convert->add_option("--format", convert_in.format, "Input format: csv or idx");
  convert->add_option("--out", convert_out, "Output file (idx input -> csv; csv input -> IDX images)");
  convert->add_option("--out-labels", convert_out_labels, "IDX label output for csv input");
  convert->add_option("--shape", shape, "Image shape RxC for IDX output (default 1xD)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputFailure;
  }

  try {
    if (*train) {
      bls::ExperimentConfig cfg;
      if (!train_config.empty()) cfg = bls::load_config(train_config);
      if (train->count("--format")) cfg.format = bls::parse_data_format(train_data.format);
      if (!train_data.path.empty()) cfg.train_path = train_data.path;
      if (!train_data.labels.empty()) cfg.train_labels = train_data.labels;
      if (lambda) cfg.lambda = *lambda;
      if (seed) cfg.seed = cfg.synthetic.seed = *seed;
      if (enhancement) cfg.enhancement_nodes = *enhancement;
      if (groups) cfg.feature_groups = *groups;
      if (per_group) cfg.nodes_per_group = *per_group;
      if (samples) cfg.train_samples = *samples;
      if (!(cfg.lambda > 0.0)) throw bls::InvalidConfig("lambda must be positive");
      if (cfg.format != bls::DataFormat::synthetic && cfg.train_path.empty()) {
        throw bls::InvalidConfig("--data is required for csv and idx input");
      }
      const bls::Track track = track_for(train_form);
      cfg.tracks = {bls::Track::standard, track};
      bls::Step step;
      step.text = "train";
      cfg.schedule = {step};
      cfg.initial_samples = 0;
      cfg.verify_each = true;
      const auto result = bls::run_schedule(cfg);
      std::cout << bls::format_table(result.reports);
      if (!train_out.empty()) bls::write_report(result.reports, train_out);
      bls::save_state(result.states.at(track), train_state);
      return check_deviations(result.reports, cfg.tolerance);
    }

    if (*run) {
      bls::ExperimentConfig cfg = bls::load_config(run_config);
      if (lambda) {
        if (!(*lambda > 0.0)) throw bls::InvalidConfig("lambda must be positive");
        cfg.lambda = *lambda;
      }
      if (seed) cfg.seed = cfg.synthetic.seed = *seed;
      const auto result = bls::run_schedule(cfg);
      print_reports(result.reports, run_format);
      const std::string out = run_out.empty() ? cfg.report_path : run_out;
      if (!out.empty()) bls::write_report(result.reports, out);
      if (!run_state.empty()) {
        if (result.states.empty()) throw bls::InvalidConfig("no stateful track to save");
        bls::save_state(result.states.begin()->second, run_state);
      }
      return check_deviations(result.reports, cfg.tolerance);
    }

    if (*verify) {
      const bls::SavedState saved = bls::load_state(verify_state);
      std::optional<bls::Dataset> data;
      if (!verify_data.path.empty()) data = read_data(verify_data);
      const bls::StateCheck check = bls::verify_state(saved, data ? &*data : nullptr);
      std::cout << "deviation " << check.deviation << "\nfactor "
                << (check.factor_ok ? "ok" : "BROKEN") << '\n';
      const bool pass = check.factor_ok && std::isfinite(check.deviation) && check.deviation <= tolerance;
      std::cout << (pass ? "PASS" : "FAIL") << '\n';
      return pass ? kOk : kNumericalFailure;
    }

    if (*bench_cmd) {
      const auto rows = bls::bench(bench_cfg);
      if (bench_format == "csv") {
        std::cout << "method,removed,update_ms,retrain_ms,speedup,deviation\n";
        for (const auto& r : rows) {
          std::cout << r.method << ',' << r.amount << ',' << r.update_ms << ',' << r.retrain_ms
                    << ',' << r.speedup() << ',' << r.deviation << '\n';
        }
      } else if (bench_format == "table") {
        std::cout << bls::format_bench(rows);
      } else {
        throw bls::InvalidConfig("--format must be table or csv");
      }
      return kOk;
    }

    if (*convert) {
      const bls::Dataset data = read_data(convert_in);
      if (convert_out.empty()) {
        std::cout << "samples  " << data.samples() << "\nfeatures " << data.features()
                  << "\nclasses  " << data.classes.size() << " (";
        for (std::size_t i = 0; i < data.classes.size(); ++i) std::cout << (i ? " " : "") << data.classes[i];
        std::cout << ")\nrange    [" << (data.samples() ? data.x.minCoeff() : 0.0) << ", "
                  << (data.samples() ? data.x.maxCoeff() : 0.0) << "]\n";
        return kOk;
      }
      if (bls::parse_data_format(convert_in.format) == bls::DataFormat::idx) {
        bls::write_csv(data, convert_out);
        return kOk;
      }
      if (convert_out_labels.empty()) throw bls::InvalidConfig("IDX output needs --out-labels");
      std::uint32_t rows = 1;
      auto cols = static_cast<std::uint32_t>(data.features());
      if (!shape.empty()) {
        const auto x = shape.find('x');
        if (x == std::string::npos) throw bls::InvalidConfig("--shape must look like 28x28");
        rows = static_cast<std::uint32_t>(std::stoul(shape.substr(0, x)));
        cols = static_cast<std::uint32_t>(std::stoul(shape.substr(x + 1)));
      }
      bls::write_idx(data, convert_out, convert_out_labels, rows, cols);
      return kOk;
    }
  } catch (const bls::NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const bls::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputFailure;
  } catch (const std::logic_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
