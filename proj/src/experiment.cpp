#include "bls/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "bls/error.hpp"

namespace bls {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

template <typename T>
T number(const std::string& text, const std::string& where) {
  T value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
    throw InvalidConfig(where + ": '" + text + "' is not a valid number");
  }
  return value;
}

Index positive(const std::string& text, const std::string& where) {
  const Index v = number<Index>(text, where);
  if (v < 1) throw InvalidConfig(where + ": expected a positive count, got " + text);
  return v;
}

bool boolean(const std::string& text, const std::string& where) {
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  throw InvalidConfig(where + ": expected true or false, got '" + text + "'");
}

Track parse_track(const std::string& name, const std::string& where) {
  if (name == "standard") return Track::standard;
  if (name == "proposed") return Track::proposed;
  if (name == "alg1") return Track::alg1;
  if (name == "alg2") return Track::alg2;
  throw InvalidConfig(where + ": unknown track '" + name + "'");
}

// "each" annotates every mutating row; "steps" only where a step asks.
bool each_or_steps(const std::string& text, const std::string& where) {
  if (text == "each") return true;
  if (text == "steps") return false;
  throw InvalidConfig(where + ": expected 'each' or 'steps', got '" + text + "'");
}

std::vector<Step> parse_step(const std::string& text, const std::string& where) {
  std::istringstream in(text);
  std::vector<std::string> tok;
  for (std::string t; in >> t;) tok.push_back(t);
  if (tok.empty()) throw ParseError(where + ": empty step");

  Step step;
  step.text = text;
  const std::string& verb = tok[0];
  std::size_t next = 1;
  const bool bare = verb == "train" || verb == "verify" || verb == "evaluate";
  if (verb == "train") step.kind = StepKind::train;
  else if (verb == "verify") step.kind = StepKind::verify;
  else if (verb == "evaluate") step.kind = StepKind::evaluate;
  else if (verb == "add-nodes") step.kind = StepKind::add_nodes;
  else if (verb == "add-inputs") step.kind = StepKind::add_inputs;
  else if (verb == "remove-nodes") step.kind = StepKind::remove_nodes;
  else if (verb == "remove-inputs") step.kind = StepKind::remove_inputs;
  else throw ParseError(where + ": unknown step '" + verb + "'");

  if (!bare) {
    if (tok.size() < 2) throw ParseError(where + ": '" + verb + "' needs an amount");
    const std::string& arg = tok[1];
    next = 2;
    const bool removal = step.kind == StepKind::remove_nodes || step.kind == StepKind::remove_inputs;
    const auto colon = arg.find(':');
    if (colon == std::string::npos) {
      step.amount = positive(arg, where);
      step.pick = step.kind == StepKind::remove_nodes ? Pick::random : Pick::last;
    } else {
      if (!removal) throw ParseError(where + ": only removals take a selector");
      const std::string how = arg.substr(0, colon);
      const std::string what = arg.substr(colon + 1);
      if (how == "last" || how == "random") {
        step.pick = how == "last" ? Pick::last : Pick::random;
        step.amount = positive(what, where);
      } else if (how == "idx") {
        step.pick = Pick::listed;
        for (const auto& item : split(what, ',')) step.indices.push_back(number<Index>(item, where));
        std::sort(step.indices.begin(), step.indices.end());
        if (step.indices.empty() ||
            std::adjacent_find(step.indices.begin(), step.indices.end()) != step.indices.end() ||
            step.indices.front() < 0) {
          throw ScheduleInvalid(where + ": idx: needs distinct non-negative indices");
        }
        step.amount = static_cast<Index>(step.indices.size());
      } else {
        throw ParseError(where + ": unknown selector '" + how + "'");
      }
    }
  }

  Index repeat = 1;
  if (next < tok.size()) {
    const std::string& r = tok[next];
    if (r.size() < 2 || r[0] != 'x') throw ParseError(where + ": unexpected '" + r + "'");
    repeat = positive(r.substr(1), where);
    ++next;
  }
  if (next != tok.size()) throw ParseError(where + ": trailing tokens in step");
  if (repeat > 1 && (step.kind == StepKind::train || step.pick == Pick::listed)) {
    throw ScheduleInvalid(where + ": this step cannot repeat");
  }
  return std::vector<Step>(static_cast<std::size_t>(repeat), step);
}

std::string fixed2(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << v;
  return s.str();
}

std::string sci2(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(2) << v;
  return s.str();
}

std::string arrow(Index before, Index after) {
  return before == after ? std::to_string(after)
                         : std::to_string(before) + " -> " + std::to_string(after);
}

std::vector<Index> complement(Index n, const std::vector<Index>& drop) {
  std::vector<Index> keep;
  keep.reserve(static_cast<std::size_t>(n));
  std::size_t d = 0;
  for (Index i = 0; i < n; ++i) {
    if (d < drop.size() && drop[d] == i) {
      ++d;
    } else {
      keep.push_back(i);
    }
  }
  return keep;
}

Matrix rows_of(const Matrix& m, const std::vector<Index>& rows) {
  return m(rows, Eigen::all);
}

Matrix cols_of(const Matrix& m, const std::vector<Index>& cols) {
  return m(Eigen::all, cols);
}

class Session {
 public:
  Session(const ExperimentConfig& config, const SplitDataset& data)
      : cfg_(config), data_(data) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                      static_cast<std::uint32_t>(config.seed >> 32), std::uint32_t{3}};
    picker_.seed(seq);
  }

  ExperimentResult run() {
    const Index pool = pool_size();
    const Index initial = cfg_.initial_samples > 0 ? cfg_.initial_samples : pool;
    validate_schedule(cfg_, pool, initial);
    for (const Step& step : cfg_.schedule) apply(step, initial);

    ExperimentResult result;
    result.reports = std::move(reports_);
    const auto record = NetworkRecord::capture(net_, active_);
    if (node_) result.states[Track::proposed] = {*node_, record};
    if (q_) result.states[Track::alg1] = {*q_, record};
    if (f_) result.states[Track::alg2] = {*f_, record};
    return result;
  }

 private:
  Index pool_size() const {
    const Index n = data_.train.samples();
    return cfg_.train_samples > 0 ? std::min(n, cfg_.train_samples) : n;
  }

  bool has(Track t) const {
    return std::find(cfg_.tracks.begin(), cfg_.tracks.end(), t) != cfg_.tracks.end();
  }

  void apply(const Step& step, Index initial) {
    switch (step.kind) {
      case StepKind::verify:
        verify(reports_.back());
        return;
      case StepKind::evaluate:
        evaluate(reports_.back());
        return;
      default:
        break;
    }
    UpdateReport row;
    row.step = step.text;
    row.kind = step.kind;
    row.nodes_before = a_.cols();
    row.samples_before = a_.rows();
    switch (step.kind) {
      case StepKind::train: train(row, initial); break;
      case StepKind::add_nodes: add_nodes_step(row, step); break;
      case StepKind::add_inputs: add_inputs_step(row, step); break;
      case StepKind::remove_nodes: remove_nodes_step(row, step); break;
      case StepKind::remove_inputs: remove_inputs_step(row, step); break;
      default: break;
    }
    row.nodes_after = a_.cols();
    row.samples_after = a_.rows();
    if (cfg_.verify_each) verify(row);
    if (cfg_.evaluate_each) evaluate(row);
    reports_.push_back(std::move(row));
  }

  // Runs `body` for every configured track, timing each one.
  template <typename F>
  void for_tracks(UpdateReport& row, F&& body) {
    oracle_.reset();
    for (Track t : cfg_.tracks) {
      TrackResult r;
      r.track = t;
      const auto start = Clock::now();
      r.rebuilt = body(t);
      r.ms = elapsed_ms(start);
      row.tracks.push_back(r);
    }
  }

  bool standard() {
    oracle_ = ridge_solve(a_, y_, cfg_.lambda).weights;
    return false;
  }

  void rebuild_node() { node_ = init_node_state(a_, y_, cfg_.lambda); }
  void rebuild_input(Track t) {
    auto& slot = t == Track::alg1 ? q_ : f_;
    slot = init_input_state(a_, y_, cfg_.lambda,
                            t == Track::alg1 ? InputForm::q_form : InputForm::f_form);
  }

  void train(UpdateReport& row, Index initial) {
    net_ = BlsNetwork::build({.input_dim = data_.train.features(),
                              .feature_groups = cfg_.feature_groups,
                              .nodes_per_group = cfg_.nodes_per_group,
                              .enhancement_nodes = cfg_.enhancement_nodes,
                              .seed = cfg_.seed});
    x_ = data_.train.x.topRows(initial);
    y_ = data_.train.y.topRows(initial);
    next_pool_ = initial;
    if (cfg_.calibrate) net_.calibrate(x_);
    active_.resize(static_cast<std::size_t>(net_.node_count()));
    std::iota(active_.begin(), active_.end(), Index{0});
    a_ = net_.expand(x_).values;
    for_tracks(row, [&](Track t) {
      switch (t) {
        case Track::standard: return standard();
        case Track::proposed: rebuild_node(); return false;
        default: rebuild_input(t); return false;
      }
    });
  }

  void add_nodes_step(UpdateReport& row, const Step& step) {
    const Index first = net_.node_count();
    net_.add_enhancement_group(step.amount);
    const Matrix h = net_.expand_group(x_, net_.enhancement_groups().size() - 1);
    for (Index j = 0; j < step.amount; ++j) active_.push_back(first + j);
    Matrix grown(a_.rows(), a_.cols() + h.cols());
    grown << a_, h;
    a_ = std::move(grown);
    for_tracks(row, [&](Track t) {
      switch (t) {
        case Track::standard: return standard();
        case Track::proposed: node_ = add_nodes(std::move(*node_), h, y_); return false;
        default: rebuild_input(t); return true;
      }
    });
  }

  void add_inputs_step(UpdateReport& row, const Step& step) {
    const Dataset fresh = data_.train.take_rows(next_pool_, step.amount);
    next_pool_ += step.amount;
    const Matrix ax = net_.expand(fresh.x).select_columns(active_).values;
    x_ = stack(x_, fresh.x);
    a_ = stack(a_, ax);
    y_ = stack(y_, fresh.y);
    for_tracks(row, [&](Track t) {
      switch (t) {
        case Track::standard: return standard();
        case Track::proposed: rebuild_node(); return true;
        case Track::alg1: q_ = add_inputs_q(std::move(*q_), ax, fresh.y); return false;
        case Track::alg2: f_ = add_inputs_f(std::move(*f_), ax, fresh.y); return false;
      }
      return false;
    });
  }

  void remove_nodes_step(UpdateReport& row, const Step& step) {
    std::vector<Index> drop;
    if (step.pick == Pick::listed) {
      drop = step.indices;
    } else {
      std::vector<Index> candidates;
      for (Index p = 0; p < static_cast<Index>(active_.size()); ++p) {
        if (active_[static_cast<std::size_t>(p)] >= net_.feature_count()) candidates.push_back(p);
      }
      if (step.pick == Pick::random) std::shuffle(candidates.begin(), candidates.end(), picker_);
      else std::reverse(candidates.begin(), candidates.end());
      drop.assign(candidates.begin(), candidates.begin() + step.amount);
      std::sort(drop.begin(), drop.end());
    }
    const NodeRemovalPlan plan(drop, a_.cols());
    const std::vector<Index> keep = complement(a_.cols(), drop);
    a_ = cols_of(a_, keep);
    std::vector<Index> still;
    for (Index p : keep) still.push_back(active_[static_cast<std::size_t>(p)]);
    active_ = std::move(still);
    for_tracks(row, [&](Track t) {
      switch (t) {
        case Track::standard: return standard();
        case Track::proposed: node_ = remove_nodes(std::move(*node_), plan); return false;
        default: rebuild_input(t); return true;
      }
    });
  }

  void remove_inputs_step(UpdateReport& row, const Step& step) {
    const Index l = a_.rows();
    std::vector<Index> drop;
    if (step.pick == Pick::listed) {
      drop = step.indices;
    } else if (step.pick == Pick::last) {
      for (Index i = l - step.amount; i < l; ++i) drop.push_back(i);
    } else {
      std::vector<Index> all(static_cast<std::size_t>(l));
      std::iota(all.begin(), all.end(), Index{0});
      std::shuffle(all.begin(), all.end(), picker_);
      drop.assign(all.begin(), all.begin() + step.amount);
      std::sort(drop.begin(), drop.end());
    }
    const InputRemovalBatch batch{rows_of(a_, drop), rows_of(y_, drop)};
    const std::vector<Index> keep = complement(l, drop);
    a_ = rows_of(a_, keep);
    x_ = rows_of(x_, keep);
    y_ = rows_of(y_, keep);
    for_tracks(row, [&](Track t) {
      switch (t) {
        case Track::standard: return standard();
        case Track::proposed: rebuild_node(); return true;
        case Track::alg1: q_ = remove_inputs_q(std::move(*q_), batch); return false;
        case Track::alg2: f_ = remove_inputs_f(std::move(*f_), batch); return false;
      }
      return false;
    });
  }

  const Matrix& weights(Track t) {
    switch (t) {
      case Track::proposed: return node_->w;
      case Track::alg1: return q_->w;
      case Track::alg2: return f_->w;
      case Track::standard: break;
    }
    return oracle();
  }

  const Matrix& oracle() {
    if (!oracle_) oracle_ = ridge_solve(a_, y_, cfg_.lambda).weights;
    return *oracle_;
  }

  void verify(UpdateReport& row) {
    const Matrix& ref = oracle();
    for (auto& r : row.tracks) r.deviation = relative_deviation(weights(r.track), ref);
    row.verified = true;
  }

  void evaluate(UpdateReport& row) {
    const bool has_test = data_.test.samples() > 0;
    Matrix test_a;
    if (has_test) test_a = net_.expand(data_.test.x).select_columns(active_).values;
    for (auto& r : row.tracks) {
      const Matrix& w = weights(r.track);
      r.train_accuracy = accuracy(a_, w, y_);
      if (has_test) r.test_accuracy = accuracy(test_a, w, data_.test.y);
    }
    row.evaluated = true;
  }

  static Matrix stack(const Matrix& top, const Matrix& bottom) {
    Matrix out(top.rows() + bottom.rows(), top.cols());
    out << top, bottom;
    return out;
  }

  const ExperimentConfig& cfg_;
  const SplitDataset& data_;
  std::mt19937_64 picker_;
  BlsNetwork net_;
  std::vector<Index> active_;
  Matrix x_, a_, y_;
  Index next_pool_ = 0;
  std::optional<Matrix> oracle_;
  std::optional<NodeState> node_;
  std::optional<InputState> q_, f_;
  std::vector<UpdateReport> reports_;
};

}  // namespace

std::string to_string(Track track) {
  switch (track) {
    case Track::standard: return "standard";
    case Track::proposed: return "proposed";
    case Track::alg1: return "alg1";
    case Track::alg2: return "alg2";
  }
  return "?";
}

std::string to_string(StepKind kind) {
  switch (kind) {
    case StepKind::train: return "train";
    case StepKind::add_nodes: return "add-nodes";
    case StepKind::add_inputs: return "add-inputs";
    case StepKind::remove_nodes: return "remove-nodes";
    case StepKind::remove_inputs: return "remove-inputs";
    case StepKind::verify: return "verify";
    case StepKind::evaluate: return "evaluate";
  }
  return "?";
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  std::optional<std::uint64_t> data_seed;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) throw ParseError(where + ": empty value for '" + key + "'");

    if (key == "format") cfg.format = parse_data_format(value);
    else if (key == "train") cfg.train_path = value;
    else if (key == "train_labels") cfg.train_labels = value;
    else if (key == "test") cfg.test_path = value;
    else if (key == "test_labels") cfg.test_labels = value;
    else if (key == "synthetic_samples") cfg.synthetic.samples = positive(value, where);
    else if (key == "synthetic_test") cfg.synthetic_test = number<Index>(value, where);
    else if (key == "synthetic_dim") cfg.synthetic.dim = positive(value, where);
    else if (key == "synthetic_classes") cfg.synthetic.classes = static_cast<int>(positive(value, where));
    else if (key == "synthetic_noise") cfg.synthetic.noise = number<double>(value, where);
    else if (key == "data_seed") data_seed = number<std::uint64_t>(value, where);
    else if (key == "train_samples") cfg.train_samples = positive(value, where);
    else if (key == "initial_samples") cfg.initial_samples = positive(value, where);
    else if (key == "lambda") cfg.lambda = number<double>(value, where);
    else if (key == "seed") cfg.seed = number<std::uint64_t>(value, where);
    else if (key == "feature_groups") cfg.feature_groups = positive(value, where);
    else if (key == "nodes_per_group") cfg.nodes_per_group = positive(value, where);
    else if (key == "enhancement_nodes") cfg.enhancement_nodes = positive(value, where);
    else if (key == "calibrate") cfg.calibrate = boolean(value, where);
    else if (key == "verify") cfg.verify_each = each_or_steps(value, where);
    else if (key == "evaluate") cfg.evaluate_each = each_or_steps(value, where);
    else if (key == "tolerance") cfg.tolerance = number<double>(value, where);
    else if (key == "report") cfg.report_path = value;
    else if (key == "tracks") {
      cfg.tracks.clear();
      for (const auto& name : split(value, ',')) {
        const Track t = parse_track(name, where);
        if (std::find(cfg.tracks.begin(), cfg.tracks.end(), t) != cfg.tracks.end()) {
          throw InvalidConfig(where + ": track '" + name + "' listed twice");
        }
        cfg.tracks.push_back(t);
      }
    } else if (key == "step") {
      const auto steps = parse_step(value, where);
      cfg.schedule.insert(cfg.schedule.end(), steps.begin(), steps.end());
    } else {
      throw InvalidConfig(where + ": unknown key '" + key + "'");
    }
  }
  cfg.synthetic.seed = data_seed.value_or(cfg.seed);

  if (!(cfg.lambda > 0.0) || !std::isfinite(cfg.lambda)) {
    throw InvalidConfig(origin + ": lambda must be positive");
  }
  if (!(cfg.tolerance > 0.0)) throw InvalidConfig(origin + ": tolerance must be positive");
  if (cfg.tracks.empty()) throw InvalidConfig(origin + ": no tracks");
  if (cfg.format != DataFormat::synthetic && cfg.train_path.empty()) {
    throw InvalidConfig(origin + ": format " + to_string(cfg.format) + " needs a train path");
  }
  if (cfg.format == DataFormat::idx && cfg.train_labels.empty()) {
    throw InvalidConfig(origin + ": idx data needs train_labels");
  }
  if (cfg.schedule.empty() || cfg.schedule.front().kind != StepKind::train) {
    throw ScheduleInvalid(origin + ": the schedule must begin with train");
  }
  for (std::size_t i = 1; i < cfg.schedule.size(); ++i) {
    if (cfg.schedule[i].kind == StepKind::train) {
      throw ScheduleInvalid(origin + ": train may only appear once");
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  ExperimentConfig cfg = parse_config(text.str(), path.string());
  // Relative data paths are resolved against the config's directory.
  const auto base = path.parent_path();
  for (std::string* p : {&cfg.train_path, &cfg.train_labels, &cfg.test_path, &cfg.test_labels}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).string();
  }
  return cfg;
}

SplitDataset load_experiment_data(const ExperimentConfig& config) {
  if (config.format == DataFormat::synthetic) {
    SyntheticSpec spec = config.synthetic;
    if (config.train_samples > 0) spec.samples = std::max(spec.samples, config.train_samples);
    return make_synthetic(spec, config.synthetic_test);
  }
  const auto read = [&](const std::string& path, const std::string& labels) {
    return config.format == DataFormat::csv ? load_csv(path) : load_idx(path, labels);
  };
  SplitDataset out;
  out.train = read(config.train_path, config.train_labels);
  if (!config.test_path.empty()) {
    out.test = with_classes(read(config.test_path, config.test_labels), out.train.classes);
    if (out.test.features() != out.train.features()) {
      throw DimensionMismatch("test data has " + std::to_string(out.test.features()) +
                              " features, train has " + std::to_string(out.train.features()));
    }
  }
  return out;
}

void validate_schedule(const ExperimentConfig& config, Index pool_samples, Index initial_samples) {
  if (initial_samples < 1 || initial_samples > pool_samples) {
    throw ScheduleInvalid("initial_samples " + std::to_string(initial_samples) + " outside [1, " +
                          std::to_string(pool_samples) + "]");
  }
  if (config.schedule.empty() || config.schedule.front().kind != StepKind::train) {
    throw ScheduleInvalid("the schedule must begin with train");
  }
  const Index features = config.feature_groups * config.nodes_per_group;
  Index enhancement = config.enhancement_nodes;
  Index samples = initial_samples;
  Index pool = pool_samples - initial_samples;
  for (std::size_t i = 1; i < config.schedule.size(); ++i) {
    const Step& s = config.schedule[i];
    const std::string where = "step " + std::to_string(i + 1) + " (" + s.text + ")";
    const Index k = features + enhancement;
    switch (s.kind) {
      case StepKind::add_nodes:
        enhancement += s.amount;
        break;
      case StepKind::add_inputs:
        if (s.amount > pool) {
          throw ScheduleInvalid(where + ": only " + std::to_string(pool) + " unused rows left");
        }
        pool -= s.amount;
        samples += s.amount;
        break;
      case StepKind::remove_nodes:
        if (s.pick == Pick::listed) {
          if (s.indices.back() >= k) throw ScheduleInvalid(where + ": index beyond " + std::to_string(k) + " nodes");
          if (s.amount >= k) throw ScheduleInvalid(where + ": would remove every node");
          // Listed indices may hit feature nodes; only the total matters here.
          enhancement -= std::min(enhancement, s.amount);
        } else {
          if (s.amount > enhancement) {
            throw ScheduleInvalid(where + ": only " + std::to_string(enhancement) +
                                  " enhancement nodes remain");
          }
          if (s.amount >= k) throw ScheduleInvalid(where + ": would remove every node");
          enhancement -= s.amount;
        }
        break;
      case StepKind::remove_inputs:
        if (s.amount >= samples || (s.pick == Pick::listed && s.indices.back() >= samples)) {
          throw ScheduleInvalid(where + ": " + std::to_string(samples) + " rows cannot lose " +
                                std::to_string(s.amount));
        }
        samples -= s.amount;
        break;
      default:
        break;
    }
  }
}

ExperimentResult run_schedule(const ExperimentConfig& config, const SplitDataset& data) {
  return Session(config, data).run();
}

ExperimentResult run_schedule(const ExperimentConfig& config) {
  const SplitDataset data = load_experiment_data(config);
  return run_schedule(config, data);
}

double accuracy(const Matrix& a, const Matrix& w, const Matrix& y) {
  if (a.rows() == 0) return 0.0;
  const Matrix scores = a * w;
  Index hits = 0;
  for (Index i = 0; i < scores.rows(); ++i) {
    Index predicted = 0;
    Index truth = 0;
    scores.row(i).maxCoeff(&predicted);  // first maximum wins
    y.row(i).maxCoeff(&truth);
    if (predicted == truth) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(a.rows());
}

double UpdateReport::max_deviation() const {
  double m = -1.0;
  for (const auto& t : tracks) m = std::max(m, t.deviation);
  return m;
}

const TrackResult* UpdateReport::find(Track track) const {
  for (const auto& t : tracks)
    if (t.track == track) return &t;
  return nullptr;
}

std::string format_table(const std::vector<UpdateReport>& reports) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> head{"step", "nodes", "samples"};
  const std::vector<TrackResult> tracks = reports.empty() ? std::vector<TrackResult>{}
                                                          : reports.front().tracks;
  for (const auto& t : tracks) {
    const std::string n = to_string(t.track);
    head.insert(head.end(), {n + " train%", n + " test%", n + " ms"});
  }
  head.push_back("max dev");
  rows.push_back(head);
  bool any_rebuilt = false;
  for (const auto& r : reports) {
    std::vector<std::string> cells{r.step, arrow(r.nodes_before, r.nodes_after),
                                   arrow(r.samples_before, r.samples_after)};
    if (r.kind == StepKind::train) cells[1] = std::to_string(r.nodes_after);
    if (r.kind == StepKind::train) cells[2] = std::to_string(r.samples_after);
    for (const auto& t : r.tracks) {
      cells.push_back(t.train_accuracy >= 0.0 ? fixed2(t.train_accuracy) : "-");
      cells.push_back(t.test_accuracy >= 0.0 ? fixed2(t.test_accuracy) : "-");
      cells.push_back(fixed2(t.ms) + (t.rebuilt ? "*" : ""));
      any_rebuilt = any_rebuilt || t.rebuilt;
    }
    cells.push_back(r.verified ? sci2(r.max_deviation()) : "-");
    rows.push_back(std::move(cells));
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& row : rows)
    for (std::size_t j = 0; j < row.size() && j < width.size(); ++j) width[j] = std::max(width[j], row[j].size());
  std::ostringstream out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      if (j == 0) out << std::left << std::setw(static_cast<int>(width[j])) << rows[i][j];
      else out << "  " << std::right << std::setw(static_cast<int>(width[j])) << rows[i][j];
    }
    out << '\n';
  }
  if (any_rebuilt) out << "* track re-initialized from scratch for this step\n";
  return out.str();
}

std::string format_csv(const std::vector<UpdateReport>& reports) {
  std::ostringstream out;
  out << "row,step,kind,nodes_before,nodes_after,samples_before,samples_after,track,ms,rebuilt,"
         "train_accuracy,test_accuracy,deviation\n";
  out << std::setprecision(10);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    for (const auto& t : r.tracks) {
      out << i << ",\"" << r.step << "\"," << to_string(r.kind) << ',' << r.nodes_before << ','
          << r.nodes_after << ',' << r.samples_before << ',' << r.samples_after << ','
          << to_string(t.track) << ',' << t.ms << ',' << (t.rebuilt ? 1 : 0) << ',';
      if (t.train_accuracy >= 0.0) out << fixed2(t.train_accuracy);
      out << ',';
      if (t.test_accuracy >= 0.0) out << fixed2(t.test_accuracy);
      out << ',';
      if (t.deviation >= 0.0) out << t.deviation;
      out << '\n';
    }
  }
  return out.str();
}

void write_report(const std::vector<UpdateReport>& reports, const std::filesystem::path& path) {
  std::ofstream table(path);
  if (!table) throw InvalidConfig("cannot write " + path.string());
  table << format_table(reports);
  auto sidecar = path;
  sidecar.replace_extension(".csv");
  if (sidecar == path) sidecar += ".csv";
  std::ofstream csv(sidecar);
  if (!csv) throw InvalidConfig("cannot write " + sidecar.string());
  csv << format_csv(reports);
}

StateCheck verify_state(const SavedState& saved, const Dataset* data) {
  StateCheck check;
  const auto factor_ok = [](const UpperTriangular& f) {
    const Matrix& m = f.matrix();
    return all_finite(m) && m.triangularView<Eigen::StrictlyLower>().toDenseMatrix().isZero(0.0) &&
           (m.diagonal().array() != 0.0).all();
  };
  if (const auto* node = std::get_if<NodeState>(&saved.state)) {
    check.factor_ok = factor_ok(node->f);
    const Matrix ref = regularized_gram(node->a, node->lambda).llt().solve(node->aty);
    check.deviation = relative_deviation(node->w, ref);
    return check;
  }
  const auto& in = std::get<InputState>(saved.state);
  check.factor_ok = in.form == InputForm::q_form ? all_finite(in.q) : factor_ok(in.f);
  if (data == nullptr) throw InvalidConfig("verifying an input state needs its training data");
  Matrix a = data->x;
  if (saved.network) {
    a = saved.network->rebuild().expand(data->x).select_columns(saved.network->active).values;
  }
  if (a.cols() != in.nodes() || data->y.cols() != in.outputs()) {
    throw DimensionMismatch("data does not match the stored state");
  }
  check.deviation = relative_deviation(in.w, ridge_solve(a, data->y, in.lambda).weights);
  return check;
}

}  // namespace bls
