#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bls/dataset.hpp"
#include "bls/decremental.hpp"
#include "bls/persist.hpp"

namespace bls {

enum class StepKind { train, add_nodes, add_inputs, remove_nodes, remove_inputs, verify, evaluate };

/// Which nodes or rows a removal step takes. `last` takes the newest
/// enhancement nodes / trained rows, `random` a seeded uniform choice,
/// `listed` the explicit state-local indices in `indices`.
enum class Pick { last, random, listed };

struct Step {
  StepKind kind = StepKind::train;
  Index amount = 0;  // q, p, rho or delta
  Pick pick = Pick::last;
  std::vector<Index> indices;
  std::string text;
};

/// A way of carrying the solution through the schedule.
///   standard: ridge_solve from scratch after every step (the oracle)
///   proposed: node-dimension state (F, W, A)
///   alg1:     sample-dimension state holding Q
///   alg2:     sample-dimension state holding the inverse Cholesky factor
/// A track without a native update for a step is re-initialized from the
/// current data and the row is flagged as rebuilt.
enum class Track { standard, proposed, alg1, alg2 };

std::string to_string(Track track);
std::string to_string(StepKind kind);

struct ExperimentConfig {
  DataFormat format = DataFormat::synthetic;
  std::string train_path;    // csv file, or IDX images
  std::string train_labels;  // IDX labels
  std::string test_path;
  std::string test_labels;
  SyntheticSpec synthetic;
  Index synthetic_test = 1000;

  Index train_samples = 0;    // cap on the training pool, 0 = all
  Index initial_samples = 0;  // rows used by train, 0 = the whole pool

  double lambda = 1e-3;
  std::uint64_t seed = 0;
  Index feature_groups = 10;
  Index nodes_per_group = 10;
  Index enhancement_nodes = 1100;
  bool calibrate = true;

  std::vector<Track> tracks{Track::standard, Track::proposed};
  bool verify_each = false;
  bool evaluate_each = true;
  double tolerance = 1e-8;

  std::vector<Step> schedule;
  std::string report_path;
};

/// Flat `key = value` text; `#` starts a comment. Each `step = ...` line
/// appends to the schedule, e.g.
///   step = train
///   step = remove-nodes 100 x4       (random enhancement nodes, 4 times)
///   step = remove-nodes idx:3,17
///   step = remove-inputs last:1000 x5
///   step = add-nodes 50
///   step = add-inputs 200
///   step = verify
/// Throws ParseError for malformed lines, InvalidConfig for bad values and
/// ScheduleInvalid when the schedule does not start with train.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

struct TrackResult {
  Track track = Track::standard;
  double ms = 0.0;         // wall time of this track's update
  bool rebuilt = false;    // re-initialized instead of updated
  double train_accuracy = -1.0;  // percent, -1 when not evaluated
  double test_accuracy = -1.0;
  double deviation = -1.0;  // relative Frobenius distance to the oracle W, -1 when not verified
};

struct UpdateReport {
  std::string step;
  StepKind kind = StepKind::train;
  Index nodes_before = 0;
  Index nodes_after = 0;
  Index samples_before = 0;
  Index samples_after = 0;
  std::vector<TrackResult> tracks;
  bool verified = false;
  bool evaluated = false;

  double max_deviation() const;
  const TrackResult* find(Track track) const;
};

struct ExperimentResult {
  std::vector<UpdateReport> reports;
  std::map<Track, SavedState> states;  // final state of every stateful track
};

/// Loads (or synthesizes) the train/test data described by the config, with
/// the test labels encoded over the training classes.
SplitDataset load_experiment_data(const ExperimentConfig& config);

/// Checks that every step keeps the node and sample counts positive and
/// that add-inputs never asks for more rows than the pool holds.
void validate_schedule(const ExperimentConfig& config, Index pool_samples, Index initial_samples);

/// Runs the schedule. Verify and evaluate steps (and the *_each options)
/// annotate the row of the preceding mutating step.
ExperimentResult run_schedule(const ExperimentConfig& config);
ExperimentResult run_schedule(const ExperimentConfig& config, const SplitDataset& data);

/// Percentage of rows whose argmax of A W matches the argmax of the one-hot
/// Y; ties go to the lowest class index.
double accuracy(const Matrix& a, const Matrix& w, const Matrix& y);

/// Aligned text table, two decimals throughout.
std::string format_table(const std::vector<UpdateReport>& reports);
/// One line per (step, track).
std::string format_csv(const std::vector<UpdateReport>& reports);
void write_report(const std::vector<UpdateReport>& reports, const std::filesystem::path& path);

/// Deviation of a stored state from a from-scratch solve. Node states carry
/// their own A and A^T Y; input states need the training data, expanded
/// through the stored network.
struct StateCheck {
  double deviation = 0.0;
  bool factor_ok = true;  // triangular with a nonzero diagonal, all finite
};
StateCheck verify_state(const SavedState& saved, const Dataset* data);

}  // namespace bls
