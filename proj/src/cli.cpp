#include "dlmtrace/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "dlmtrace/analysis.hpp"
#include "dlmtrace/experiment.hpp"
#include "dlmtrace/serialize.hpp"

namespace dlmtrace {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- CSV

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) line += ',';
    line += csv_field(fields[k]);
  }
  return line + '\n';
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool pending = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
      pending = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      pending = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (pending || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      pending = false;
    } else {
      field += c;
      pending = true;
    }
  }
  if (quoted) throw DataError("CSV: unterminated quoted field");
  if (pending || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

double parse_number(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw DataError("line " + std::to_string(line) + ": '" + s + "' is not a number");
  }
  return v;
}

// ---------------------------------------------------------------- helpers

std::string file_stem(std::string_view id) {
  std::string s;
  for (char c : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    s += ok ? c : '_';
  }
  return s.empty() ? std::string("_") : s;
}

// Output names for per-model files; distinct ids must stay distinct.
std::map<std::string, std::string> model_file_names(const std::vector<std::string>& ids,
                                                    std::string_view prefix,
                                                    std::string_view suffix) {
  std::map<std::string, std::string> out;
  std::set<std::string> used;
  for (const auto& id : ids) {
    std::string name = std::string(prefix) + file_stem(id) + std::string(suffix);
    if (!used.insert(name).second) {
      throw DataError("model ids collide after sanitising: '" + id + "'");
    }
    out[id] = name;
  }
  return out;
}

std::map<std::string, TrajectoryBatch> by_model(const TrajectoryBatch& batch) {
  std::map<std::string, TrajectoryBatch> out;
  for (const auto& t : batch.trajectories) out[t.model_id].trajectories.push_back(t);
  return out;
}

std::vector<std::string> keys(const std::map<std::string, TrajectoryBatch>& m) {
  std::vector<std::string> out;
  for (const auto& [k, v] : m) out.push_back(k);
  return out;
}

TrajectoryBatch load_log(const std::string& path) {
  TrajectoryBatch b = read_log_file(path);
  if (b.empty()) throw DataError(path + ": no records");
  return b;
}

std::string log_text(const TrajectoryBatch& batch) {
  std::ostringstream ss;
  write_log(batch, ss);
  return ss.str();
}

Json model_params_json(const ModelParams& p) {
  Json j;
  j["model_id"] = p.model_id;
  j["seed"] = p.seed;
  j["base_curve"] = p.base_curve;
  j["drift"] = p.drift;
  j["coupling"] = p.coupling;
  j["mix_prob"] = p.mix_prob;
  j["noise_scale"] = p.noise_scale;
  j["tokens_per_step"] = p.tokens_per_step;
  return j;
}

// ---------------------------------------------------------------- flags

struct Globals {
  std::uint64_t seed = 0;
  std::string config;
  std::string out_dir = ".";
  int threads = 1;
};

struct FeatureFlags {
  std::string scheme = "ddm";
  double alpha = EffectValues{}.alpha;
  double beta = EffectValues{}.beta;
  double gamma = EffectValues{}.gamma;
  std::string tie = "plus_beta";
  std::vector<CLI::Option*> options;

  void add(CLI::App* app, bool with_scheme) {
    if (with_scheme) {
      options.push_back(app->add_option("--scheme", scheme,
                                        "Feature scheme: ddm, occupancy, confidence, "
                                        "filtered_confidence")
                            ->capture_default_str());
    }
    options.push_back(app->add_option("--alpha", alpha, "Mixed-sign decode code")->capture_default_str());
    options.push_back(app->add_option("--beta", beta, "One-signed decode code")->capture_default_str());
    options.push_back(app->add_option("--gamma", gamma, "Decoded-position change code")->capture_default_str());
    options.push_back(app->add_option("--tie", tie, "All-zero change rule: plus_beta or zero")
                          ->capture_default_str());
  }

  bool given() const {
    return std::any_of(options.begin(), options.end(), [](const CLI::Option* o) { return o->count() > 0; });
  }

  FeatureConfig resolve() const {
    FeatureConfig c;
    c.scheme = parse_feature_scheme(scheme);
    c.effect_values = {alpha, beta, gamma};
    c.tie = parse_tie_rule(tie);
    check_effect_values(c.effect_values, true);
    return c;
  }
};

struct ExperimentFlags {
  std::string scenario = "CMA";
  std::optional<double> perturbation_scale;
  int n_ref = 200;
  int n_test = 200;
  std::string strategy = "semi_autoregressive";
  int num_tokens = 32;
  int block_size = 16;
  int tokens_per_step = 1;

  void add(CLI::App* app) {
    app->add_option("--scenario", scenario, "CMA, IRA or CCA")->capture_default_str();
    app->add_option("--perturbation-scale", perturbation_scale,
                    "Override the scenario's default scale");
    app->add_option("--n-ref", n_ref, "Reference trajectories per model")->capture_default_str();
    app->add_option("--n-test", n_test, "Test trajectories per model")->capture_default_str();
    app->add_option("--strategy", strategy, "low_confidence or semi_autoregressive")
        ->capture_default_str();
    app->add_option("--num-tokens", num_tokens, "Sequence length L")->capture_default_str();
    app->add_option("--block-size", block_size, "Block size (divides L)")->capture_default_str();
    app->add_option("--tokens-per-step", tokens_per_step, "Tokens decoded per step")
        ->capture_default_str();
  }

  ExperimentConfig resolve(const Globals& g) const {
    ExperimentConfig c;
    c.scenario = default_scenario(parse_scenario(scenario));
    if (perturbation_scale) c.scenario.perturbation_scale = *perturbation_scale;
    c.n_ref = n_ref;
    c.n_test = n_test;
    c.strategy = parse_strategy(strategy);
    c.num_tokens = num_tokens;
    c.block_size = block_size;
    c.tokens_per_step = tokens_per_step;
    c.seed = g.seed;
    c.threads = g.threads;
    if (c.tokens_per_step < 1) throw UsageError("tokens_per_step must be >= 1");
    return c;
  }
};

Json experiment_json(const ExperimentConfig& c) {
  Json j;
  j["scenario"] = to_string(c.scenario.kind);
  j["perturbation_scale"] = c.scenario.perturbation_scale;
  j["n_ref"] = c.n_ref;
  j["n_test"] = c.n_test;
  j["strategy"] = to_string(c.strategy);
  j["num_tokens"] = c.num_tokens;
  j["block_size"] = c.block_size;
  j["tokens_per_step"] = c.tokens_per_step;
  j["seed"] = c.seed;
  return j;
}

struct Context {
  const Globals& globals;
  std::ostream& out;

  fs::path path(const std::string& name) const { return fs::path(globals.out_dir) / name; }

  void write(const std::string& name, std::string_view content) const {
    const fs::path p = path(name);
    write_file_atomic(p, content);
    out << "wrote " << p.string() << '\n';
  }
};

// ---------------------------------------------------------------- simulate

struct SimulateFlags {
  ExperimentFlags experiment;
};

void run_simulate(const Context& ctx, const SimulateFlags& f) {
  const ExperimentConfig cfg = f.experiment.resolve(ctx.globals);
  const Experiment ex = generate_experiment(cfg);

  TrajectoryBatch ref = ex.ref_a;
  ref.trajectories.insert(ref.trajectories.end(), ex.ref_b.trajectories.begin(),
                          ex.ref_b.trajectories.end());
  TrajectoryBatch test = ex.test_a;
  test.trajectories.insert(test.trajectories.end(), ex.test_b.trajectories.begin(),
                           ex.test_b.trajectories.end());

  Json manifest;
  manifest["command"] = "simulate";
  manifest["experiment"] = experiment_json(cfg);
  manifest["files"] = Json{{"ref", "ref.jsonl"}, {"test", "test.jsonl"}};
  manifest["models"] = Json::array({model_params_json(ex.model_a), model_params_json(ex.model_b)});
  manifest["parameter_distance"] = parameter_distance(ex.model_a, ex.model_b);

  ctx.write("ref.jsonl", log_text(ref));
  ctx.write("test.jsonl", log_text(test));
  ctx.write("manifest.json", manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------- build

struct BuildFlags {
  std::string log;
  FeatureFlags features;
};

void run_build(const Context& ctx, const BuildFlags& f) {
  const FeatureConfig fc = f.features.resolve();
  const TrajectoryBatch batch = load_log(f.log);
  std::string text;
  for (const auto& d : batch_ddms(batch, fc.effect_values, fc.tie)) text += to_json(d).dump() + "\n";
  ctx.write("ddms.jsonl", text);
}

// ---------------------------------------------------------------- fit

struct FitFlags {
  std::string log;
  FeatureFlags features;
  std::string granularity = "cell";
  double variance_floor = kDefaultVarianceFloor;
  int rows = 0;
};

void run_fit(const Context& ctx, const FitFlags& f) {
  const FeatureConfig fc = f.features.resolve();
  const Granularity g = parse_granularity(f.granularity);
  if (!(f.variance_floor > 0.0)) throw UsageError("variance floor must be positive");
  const TrajectoryBatch batch = load_log(f.log);
  if (f.rows < 0) throw UsageError("rows must be >= 0");
  if (f.rows > 0 && f.rows < batch.max_steps()) {
    throw DataError("log has trajectories with " + std::to_string(batch.max_steps()) +
                    " steps, more than --rows " + std::to_string(f.rows));
  }
  const Eigen::Index rows = std::max(f.rows, batch.max_steps());

  const auto groups = by_model(batch);
  const auto names = model_file_names(keys(groups), "fingerprint_", ".json");
  for (const auto& [id, b] : groups) {
    Fingerprint fp = fit(featurize_batch(b, fc, rows), id, f.variance_floor, g);
    fp.features = fc;
    const std::string name = names.at(id);
    write_file_atomic(ctx.path(name), to_json(fp).dump(2) + "\n");
    ctx.out << "wrote " << ctx.path(name).string() << " (" << fp.n_samples << " maps)\n";
  }
}

// ---------------------------------------------------------------- score

struct ScoreFlags {
  std::string log;
  std::string method = "gta";
  std::vector<std::string> fingerprints;
  std::string ref_log;
  std::string positive;
  FeatureFlags features;
  std::string granularity = "cell";
  double variance_floor = kDefaultVarianceFloor;
  double epsilon = DbscanParams{}.epsilon;
  int min_points = DbscanParams{}.min_points;
};

std::string score_gta(const ScoreFlags& f, const TrajectoryBatch& targets) {
  if (f.fingerprints.size() < 2) throw UsageError("gta needs at least two --fingerprint files");
  std::vector<Fingerprint> fps;
  for (const auto& p : f.fingerprints) fps.push_back(read_fingerprint_file(p));
  std::sort(fps.begin(), fps.end(),
            [](const Fingerprint& a, const Fingerprint& b) { return a.model_id < b.model_id; });
  const FeatureConfig fc = fps.front().features;
  for (const auto& fp : fps) {
    if (!(fp.features == fc)) {
      throw DataError("fingerprints " + fps.front().model_id + " and " + fp.model_id +
                      " were built with different feature settings");
    }
    if (fp.rows() != fps.front().rows() || fp.cols() != fps.front().cols()) {
      throw DataError("fingerprints " + fps.front().model_id + " and " + fp.model_id +
                      " differ in shape");
    }
  }
  if (f.features.given() && !(f.features.resolve() == fc)) {
    throw UsageError("feature flags differ from the fingerprints' (scheme " +
                     std::string(to_string(fc.scheme)) + ", alpha " + format_number(fc.effect_values.alpha) +
                     ", beta " + format_number(fc.effect_values.beta) + ", gamma " +
                     format_number(fc.effect_values.gamma) + ", tie " + std::string(to_string(fc.tie)) + ")");
  }

  std::vector<std::string> header{"id", "true_model"};
  for (const auto& fp : fps) header.push_back("loglik:" + fp.model_id);
  header.push_back("decision");
  std::string text = csv_line(header);

  const Eigen::Index rows = fps.front().rows();
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const Trajectory& t = targets[k];
    if (t.num_steps() > rows) {
      throw DataError("record " + std::to_string(k + 1) + " has " + std::to_string(t.num_steps()) +
                      " steps, fingerprints cover " + std::to_string(rows));
    }
    const AttributionScore s = attribute(fps, pad_rows(featurize(t, fc), rows));
    std::vector<std::string> line{t.prompt_id, t.model_id};
    for (const auto& fp : fps) line.push_back(format_number(s.loglik.at(fp.model_id)));
    line.push_back(s.decision);
    text += csv_line(line);
  }
  return text;
}

std::string score_baseline(const ScoreFlags& f, Method method, const TrajectoryBatch& targets) {
  if (f.ref_log.empty()) throw UsageError(std::string(to_string(method)) + " needs --ref-log");
  const auto groups = by_model(load_log(f.ref_log));
  if (groups.size() != 2) {
    throw DataError("reference log must hold exactly two models, found " +
                    std::to_string(groups.size()));
  }
  const std::string pos = f.positive.empty() ? groups.begin()->first : f.positive;
  if (!groups.count(pos)) throw UsageError("positive model '" + pos + "' not in the reference log");
  const std::string neg = groups.begin()->first == pos ? std::next(groups.begin())->first
                                                      : groups.begin()->first;

  MethodConfig mc;
  mc.method = method;
  mc.features = f.features.resolve();
  mc.granularity = parse_granularity(f.granularity);
  mc.variance_floor = f.variance_floor;
  mc.dbscan = {f.epsilon, f.min_points};
  if (!(mc.dbscan.epsilon > 0.0) || mc.dbscan.min_points < 1) {
    throw UsageError("epsilon must be positive and min-points >= 1");
  }
  const BinaryScorer scorer(groups.at(pos), groups.at(neg), mc, targets.max_steps());

  std::string text = csv_line({"id", "true_model", "score:" + pos, "decision"});
  for (const auto& t : targets.trajectories) {
    const double s = scorer(t);
    text += csv_line({t.prompt_id, t.model_id, format_number(s), s >= 0.0 ? pos : neg});
  }
  return text;
}

void run_score(const Context& ctx, const ScoreFlags& f) {
  const Method method = parse_method(f.method);
  const TrajectoryBatch targets = load_log(f.log);
  if (method == Method::gta) {
    if (!f.ref_log.empty()) throw UsageError("gta scores against --fingerprint files, not --ref-log");
    ctx.write("scores.csv", score_gta(f, targets));
  } else {
    if (!f.fingerprints.empty()) {
      throw UsageError(std::string(to_string(method)) + " does not use fingerprints");
    }
    ctx.write("scores.csv", score_baseline(f, method, targets));
  }
}

// ---------------------------------------------------------------- evaluate

struct EvaluateFlags {
  std::string scores;
  std::string positive;
};

void run_evaluate(const Context& ctx, const EvaluateFlags& f) {
  const auto rows = parse_csv(read_text_file(f.scores));
  if (rows.size() < 2) throw DataError(f.scores + ": no score rows");
  const auto& header = rows.front();
  if (header.size() < 4 || header[0] != "id" || header[1] != "true_model" ||
      header.back() != "decision") {
    throw DataError(f.scores + ": expected columns id,true_model,...,decision");
  }

  // Candidate models from loglik:<m> columns, or the single score:<m> column.
  std::vector<std::string> models;
  bool gta = false;
  for (std::size_t c = 2; c + 1 < header.size(); ++c) {
    const std::string& h = header[c];
    if (h.rfind("loglik:", 0) == 0) {
      gta = true;
      models.push_back(h.substr(7));
    } else if (h.rfind("score:", 0) == 0 && header.size() == 4) {
      models.push_back(h.substr(6));
    } else {
      throw DataError(f.scores + ": unexpected column '" + h + "'");
    }
  }
  const std::string positive = f.positive.empty() ? models.front() : f.positive;
  const auto pos_it = std::find(models.begin(), models.end(), positive);
  if (gta && pos_it == models.end()) {
    throw UsageError("positive model '" + positive + "' has no loglik column");
  }
  if (!gta && positive != models.front()) {
    throw UsageError("scores favour '" + models.front() + "', not '" + positive + "'");
  }

  std::vector<ScoredSample> samples;
  std::vector<std::pair<std::string, std::string>> attributions;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t line = r + 1;
    if (row.size() != header.size()) {
      throw DataError("line " + std::to_string(line) + ": expected " +
                      std::to_string(header.size()) + " fields");
    }
    double score = 0.0;
    if (gta) {
      const auto p = static_cast<std::size_t>(pos_it - models.begin());
      const double own = parse_number(row[2 + p], line);
      double best_other = -std::numeric_limits<double>::infinity();
      for (std::size_t m = 0; m < models.size(); ++m) {
        if (m != p) best_other = std::max(best_other, parse_number(row[2 + m], line));
      }
      score = own - best_other;
    } else {
      score = parse_number(row[2], line);
    }
    samples.push_back({score, row[1] == positive});
    attributions.emplace_back(row[1], row.back());
    seen.insert(row[1]);
    seen.insert(row.back());
  }

  std::vector<std::string> labels = models;
  for (const auto& m : seen) {
    if (std::find(labels.begin(), labels.end(), m) == labels.end()) labels.push_back(m);
  }
  const Eigen::MatrixXi conf = confusion(attributions, labels);
  const EvalReport rep = evaluate(samples);

  Json report;
  report["scores"] = fs::path(f.scores).filename().string();
  report["positive"] = positive;
  report["n_pos"] = rep.n_pos;
  report["n_neg"] = rep.n_neg;
  report["auc"] = rep.auc;
  report["tpr_at_5pct_fpr"] = rep.tpr_at_5;
  report["tpr_at_1pct_fpr"] = rep.tpr_at_1;
  report["accuracy_zero"] = rep.accuracy_zero;
  report["accuracy_best"] = rep.accuracy_best;
  Json counts = Json::array();
  for (Eigen::Index r = 0; r < conf.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < conf.cols(); ++c) row.push_back(conf(r, c));
    counts.push_back(row);
  }
  report["confusion"] = Json{{"models", labels}, {"counts", counts}};

  std::string roc = csv_line({"fpr", "tpr", "threshold"});
  for (const RocPoint& p : rep.roc_points) {
    roc += csv_line({format_number(p.fpr), format_number(p.tpr), format_number(p.threshold)});
  }

  std::vector<std::string> head{"true\\decided"};
  head.insert(head.end(), labels.begin(), labels.end());
  std::string cm = csv_line(head);
  for (Eigen::Index r = 0; r < conf.rows(); ++r) {
    std::vector<std::string> line{labels[static_cast<std::size_t>(r)]};
    for (Eigen::Index c = 0; c < conf.cols(); ++c) line.push_back(std::to_string(conf(r, c)));
    cm += csv_line(line);
  }

  ctx.write("report.json", report.dump(2) + "\n");
  ctx.write("roc.csv", roc);
  ctx.write("confusion.csv", cm);
  ctx.out << "auc " << format_number(rep.auc) << '\n';
}

// ---------------------------------------------------------------- svd

struct SvdFlags {
  std::string log;
  FeatureFlags features;
  bool center = true;
};

void run_svd(const Context& ctx, const SvdFlags& f) {
  const FeatureConfig fc = f.features.resolve();
  const TrajectoryBatch batch = load_log(f.log);
  const Eigen::Index rows = batch.max_steps();
  const auto groups = by_model(batch);
  const auto names = model_file_names(keys(groups), "spectrum_", ".csv");
  for (const auto& [id, b] : groups) {
    const Eigen::VectorXd sigma = svd_spectrum(featurize_batch(b, fc, rows), f.center);
    std::string text = csv_line({"index", "sigma"});
    for (Eigen::Index k = 0; k < sigma.size(); ++k) {
      text += csv_line({std::to_string(k), format_number(sigma(k))});
    }
    ctx.write(names.at(id), text);
  }
}

// ---------------------------------------------------------------- ablate

struct AblateFlags {
  ExperimentFlags experiment;
  std::string ref_log;
  std::string test_log;
  std::string positive;
  std::string tie = "plus_beta";
  std::string granularity = "cell";
  double variance_floor = kDefaultVarianceFloor;
};

void run_ablate(const Context& ctx, const AblateFlags& f) {
  MethodConfig mc;
  mc.features.tie = parse_tie_rule(f.tie);
  mc.granularity = parse_granularity(f.granularity);
  mc.variance_floor = f.variance_floor;
  if (!(mc.variance_floor > 0.0)) throw UsageError("variance floor must be positive");

  Json source;
  Experiment ex;
  if (f.ref_log.empty() != f.test_log.empty()) {
    throw UsageError("--ref-log and --test-log go together");
  }
  if (!f.ref_log.empty()) {
    const auto ref = by_model(load_log(f.ref_log));
    const auto test = by_model(load_log(f.test_log));
    if (ref.size() != 2) throw DataError("reference log must hold exactly two models");
    const std::string pos = f.positive.empty() ? ref.begin()->first : f.positive;
    if (!ref.count(pos)) throw UsageError("positive model '" + pos + "' not in the reference log");
    const std::string neg = ref.begin()->first == pos ? std::next(ref.begin())->first
                                                     : ref.begin()->first;
    if (!test.count(pos) || !test.count(neg) || test.size() != 2) {
      throw DataError("test log must hold the same two models as the reference log");
    }
    ex.ref_a = ref.at(pos);
    ex.ref_b = ref.at(neg);
    ex.test_a = test.at(pos);
    ex.test_b = test.at(neg);
    source = Json{{"ref_log", fs::path(f.ref_log).filename().string()},
                  {"test_log", fs::path(f.test_log).filename().string()},
                  {"positive", pos}};
  } else {
    const ExperimentConfig cfg = f.experiment.resolve(ctx.globals);
    ex = generate_experiment(cfg);
    source = experiment_json(cfg);
  }

  const AblationReport rep = run_ablation(ex, mc);

  Json report;
  report["source"] = source;
  report["granularity"] = to_string(mc.granularity);
  report["variance_floor"] = mc.variance_floor;
  report["tie"] = to_string(mc.features.tie);
  report["original_auc"] = rep.original_auc;
  report["std"] = Json{{"alpha", rep.std_alpha}, {"beta", rep.std_beta}, {"gamma", rep.std_gamma}};
  Json settings = Json::array();
  std::string csv = csv_line({"name", "group", "alpha", "beta", "gamma", "auc"});
  for (const auto& s : rep.settings) {
    settings.push_back(Json{{"name", s.name},
                            {"group", s.group},
                            {"effect_values", to_json(s.effect_values)},
                            {"auc", s.auc}});
    csv += csv_line({s.name, s.group, format_number(s.effect_values.alpha),
                     format_number(s.effect_values.beta), format_number(s.effect_values.gamma),
                     format_number(s.auc)});
  }
  report["settings"] = settings;

  ctx.write("ablation.json", report.dump(2) + "\n");
  ctx.write("ablation.csv", csv);
}

// ---------------------------------------------------------------- config

bool takes_value(const std::string& flag) {
  return flag == "--seed" || flag == "--config" || flag == "--out-dir" || flag == "--threads";
}

// Index of the subcommand token, or args.size() when absent.
std::size_t subcommand_index(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("-", 0) != 0) return i;
    if (a.find('=') == std::string::npos && takes_value(a)) ++i;
  }
  return args.size();
}

std::optional<std::string> config_path(const std::vector<std::string>& args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  return path;
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == flag || a.rfind(flag + "=", 0) == 0;
  });
}

std::string config_scalar(const Json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  throw UsageError("config key '" + key + "' must be a string, number, boolean or array of them");
}

// Config entries become "--key=value" arguments placed right after the
// subcommand, so flags given explicitly still win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  const auto path = config_path(args);
  if (!path) return args;
  Json cfg;
  try {
    cfg = Json::parse(read_text_file(*path));
  } catch (const Json::exception& e) {
    throw UsageError("config " + *path + ": " + e.what());
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  if (!cfg.is_object()) throw UsageError("config " + *path + " must be a JSON object");

  std::vector<std::string> extra;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "config") throw UsageError("config files cannot include other configs");
    const std::string flag = "--" + key;
    if (given_on_command_line(args, flag)) continue;
    if (value.is_array()) {
      for (const auto& v : value) extra.push_back(flag + "=" + config_scalar(v, key));
    } else {
      extra.push_back(flag + "=" + config_scalar(value, key));
    }
  }
  std::vector<std::string> out = args;
  const std::size_t sub = subcommand_index(args);
  const auto at = sub < out.size() ? out.begin() + static_cast<std::ptrdiff_t>(sub) + 1 : out.end();
  out.insert(at, extra.begin(), extra.end());
  return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trajectory attribution for masked diffusion language models"};
  app.name("dlmtrace");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  Globals globals;
  app.add_option("--seed", globals.seed, "Seed for every random draw")->capture_default_str();
  app.add_option("--config", globals.config, "JSON file of flag values; explicit flags win");
  app.add_option("--out-dir", globals.out_dir, "Directory for output files")->capture_default_str();
  app.add_option("--threads", globals.threads, "Worker threads")->capture_default_str();

  SimulateFlags sim;
  auto* cmd_sim = app.add_subcommand("simulate", "Generate a two-model experiment");
  cmd_sim->fallthrough();
  sim.experiment.add(cmd_sim);

  BuildFlags build;
  auto* cmd_build = app.add_subcommand("build", "Export DDMs of a trajectory log");
  cmd_build->fallthrough();
  cmd_build->add_option("--log", build.log, "Trajectory log")->required();
  build.features.add(cmd_build, false);

  FitFlags fitf;
  auto* cmd_fit = app.add_subcommand("fit", "Fit one fingerprint per model in a log");
  cmd_fit->fallthrough();
  cmd_fit->add_option("--log", fitf.log, "Reference trajectory log")->required();
  fitf.features.add(cmd_fit, true);
  cmd_fit->add_option("--granularity", fitf.granularity, "cell, row or col")->capture_default_str();
  cmd_fit->add_option("--variance-floor", fitf.variance_floor, "Lower bound on variances")
      ->capture_default_str();
  cmd_fit->add_option("--rows", fitf.rows, "Pad maps to this many steps (0: longest)")
      ->capture_default_str();

  ScoreFlags score;
  auto* cmd_score = app.add_subcommand("score", "Score target trajectories");
  cmd_score->fallthrough();
  cmd_score->add_option("--log", score.log, "Target trajectory log")->required();
  cmd_score->add_option("--method", score.method, "gta, distance, clustering or perplexity")
      ->capture_default_str();
  cmd_score->add_option("--fingerprint", score.fingerprints, "Fingerprint file (gta; repeat)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  cmd_score->add_option("--ref-log", score.ref_log, "Reference log of two models (baselines)");
  cmd_score->add_option("--positive", score.positive, "Model favoured by positive scores (baselines)");
  score.features.add(cmd_score, true);
  cmd_score->add_option("--granularity", score.granularity, "cell, row or col")->capture_default_str();
  cmd_score->add_option("--variance-floor", score.variance_floor, "Variance floor (perplexity)")
      ->capture_default_str();
  cmd_score->add_option("--epsilon", score.epsilon, "DBSCAN radius")->capture_default_str();
  cmd_score->add_option("--min-points", score.min_points, "DBSCAN core size")->capture_default_str();

  EvaluateFlags eval;
  auto* cmd_eval = app.add_subcommand("evaluate", "Metrics of a scores file");
  cmd_eval->fallthrough();
  cmd_eval->add_option("--scores", eval.scores, "scores.csv from score")->required();
  cmd_eval->add_option("--positive", eval.positive, "Positive model");

  SvdFlags svd;
  auto* cmd_svd = app.add_subcommand("svd", "Singular spectrum of each model's maps");
  cmd_svd->fallthrough();
  cmd_svd->add_option("--log", svd.log, "Trajectory log")->required();
  svd.features.add(cmd_svd, true);
  cmd_svd->add_flag("--center,!--no-center", svd.center, "Centre columns first")->capture_default_str();

  AblateFlags abl;
  auto* cmd_abl = app.add_subcommand("ablate", "Effect-value sweeps and zeroing variants");
  cmd_abl->fallthrough();
  abl.experiment.add(cmd_abl);
  cmd_abl->add_option("--ref-log", abl.ref_log, "Reference log instead of a simulation");
  cmd_abl->add_option("--test-log", abl.test_log, "Test log instead of a simulation");
  cmd_abl->add_option("--positive", abl.positive, "Positive model of the logs");
  cmd_abl->add_option("--tie", abl.tie, "All-zero change rule")->capture_default_str();
  cmd_abl->add_option("--granularity", abl.granularity, "cell, row or col")->capture_default_str();
  cmd_abl->add_option("--variance-floor", abl.variance_floor, "Variance floor")->capture_default_str();

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (globals.threads < 1) throw UsageError("--threads must be >= 1");
    std::error_code ec;
    fs::create_directories(globals.out_dir, ec);
    if (ec) throw DataError("cannot create output directory " + globals.out_dir);
    const Context ctx{globals, out};
    if (*cmd_sim) run_simulate(ctx, sim);
    if (*cmd_build) run_build(ctx, build);
    if (*cmd_fit) run_fit(ctx, fitf);
    if (*cmd_score) run_score(ctx, score);
    if (*cmd_eval) run_evaluate(ctx, eval);
    if (*cmd_svd) run_svd(ctx, svd);
    if (*cmd_abl) run_ablate(ctx, abl);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace dlmtrace
