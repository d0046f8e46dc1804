#include "rareda/cli.hpp"

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "rareda/checkpoint.hpp"
#include "rareda/csv_text.hpp"
#include "rareda/evalviz.hpp"
#include "rareda/numcore/rng.hpp"

namespace rareda::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// GenSpec JSON

namespace {

template <typename T>
bool read_field(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return false;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw Error(std::string("gen spec field '") + key + "': " + e.what());
  }
  return true;
}

std::vector<std::size_t> geometric_counts(std::size_t k, std::size_t rare, std::size_t rare_count) {
  std::vector<std::size_t> counts(k);
  double c = 1000.0;
  for (std::size_t i = 0; i < k; ++i) {
    counts[i] = std::max<std::size_t>(static_cast<std::size_t>(std::llround(c)), rare_count);
    c *= 0.6;
  }
  counts[rare] = rare_count;
  return counts;
}

}  // namespace

GenSpec gen_spec_from_json(const json& j) {
  if (!j.is_object()) throw Error("gen spec: expected a JSON object");
  static const std::set<std::string> known{
      "class_count",       "feature_dim",     "rare_class_id",    "train_counts",
      "rare_train_count",  "eval_count_per_class", "locations_per_class",
      "trans_locations_per_class", "class_mean_scale", "location_jitter", "noise_scale",
      "synthetic_pool",    "gap",             "gap_matrix",       "gap_offset",
      "gap_extra_noise",   "seed"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw Error("gen spec field '" + key + "': unknown field");
  }

  GenSpec g = GenSpec::defaults();
  const GenSpec base = g;
  read_field(j, "class_count", g.class_count);
  read_field(j, "feature_dim", g.feature_dim);
  read_field(j, "rare_class_id", g.rare_class_id);
  read_field(j, "eval_count_per_class", g.eval_count_per_class);
  read_field(j, "locations_per_class", g.locations_per_class);
  read_field(j, "trans_locations_per_class", g.trans_locations_per_class);
  read_field(j, "class_mean_scale", g.class_mean_scale);
  read_field(j, "location_jitter", g.location_jitter);
  read_field(j, "noise_scale", g.noise_scale);
  read_field(j, "synthetic_pool", g.synthetic_pool);
  read_field(j, "seed", g.seed);
  if (g.class_count < 2) throw Error("gen spec field 'class_count': must be >= 2");
  if (g.feature_dim < 2) throw Error("gen spec field 'feature_dim': must be >= 2");
  if (g.rare_class_id >= g.class_count) {
    throw Error("gen spec field 'rare_class_id': must be < class_count");
  }

  std::size_t rare_count = base.train_counts[base.rare_class_id];
  const bool has_rare_count = read_field(j, "rare_train_count", rare_count);
  if (!read_field(j, "train_counts", g.train_counts)) {
    g.train_counts = geometric_counts(g.class_count, g.rare_class_id, rare_count);
  } else if (has_rare_count) {
    throw Error("gen spec field 'rare_train_count': conflicts with explicit train_counts");
  }

  GapShape shape;
  if (auto it = j.find("gap"); it != j.end()) {
    if (!it->is_object()) throw Error("gen spec field 'gap': expected an object");
    for (const auto& [key, _] : it->items()) {
      if (key != "angle_rad" && key != "condition" && key != "offset_units" &&
          key != "noise_ratio") {
        throw Error("gen spec field 'gap." + key + "': unknown field");
      }
    }
    read_field(*it, "angle_rad", shape.angle_rad);
    read_field(*it, "condition", shape.condition);
    read_field(*it, "offset_units", shape.offset_units);
    read_field(*it, "noise_ratio", shape.noise_ratio);
  }
  try {
    g.set_gap(shape);
  } catch (const Error& e) {
    throw Error(std::string("gen spec field 'gap': ") + e.what());
  }
  if (auto it = j.find("gap_matrix"); it != j.end()) {
    std::vector<std::vector<double>> rows;
    read_field(j, "gap_matrix", rows);
    if (rows.size() != g.feature_dim) {
      throw Error("gen spec field 'gap_matrix': expected " + std::to_string(g.feature_dim) +
                  " rows");
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != g.feature_dim) {
        throw Error("gen spec field 'gap_matrix': row " + std::to_string(r) + " must have " +
                    std::to_string(g.feature_dim) + " entries");
      }
      for (std::size_t c = 0; c < rows[r].size(); ++c) g.gap_matrix(r, c) = rows[r][c];
    }
  }
  read_field(j, "gap_offset", g.gap_offset);
  read_field(j, "gap_extra_noise", g.gap_extra_noise);
  g.validate();
  return g;
}

json to_json(const GenSpec& g) {
  json m = json::array();
  for (std::size_t r = 0; r < g.gap_matrix.rows(); ++r) {
    auto row = g.gap_matrix.row(r);
    m.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return json{{"class_count", g.class_count},
              {"feature_dim", g.feature_dim},
              {"rare_class_id", g.rare_class_id},
              {"train_counts", g.train_counts},
              {"eval_count_per_class", g.eval_count_per_class},
              {"locations_per_class", g.locations_per_class},
              {"trans_locations_per_class", g.trans_locations_per_class},
              {"class_mean_scale", g.class_mean_scale},
              {"location_jitter", g.location_jitter},
              {"noise_scale", g.noise_scale},
              {"synthetic_pool", g.synthetic_pool},
              {"gap_matrix", m},
              {"gap_offset", g.gap_offset},
              {"gap_extra_noise", g.gap_extra_noise},
              {"seed", g.seed}};
}

// ---------------------------------------------------------------------------
// metrics JSON

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
  const json& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

}  // namespace

json to_json(const SplitMetrics& m) {
  json per = json::array();
  for (const auto& a : m.per_class_accuracy) per.push_back(opt(a));
  return json{{"rare_class_id", m.rare_class_id},
              {"rare_accuracy", opt(m.rare_accuracy)},
              {"other_macro", opt(m.other_macro)},
              {"overall", m.overall},
              {"total", m.total},
              {"class_counts", m.class_counts},
              {"per_class_accuracy", per},
              {"confusion", m.confusion}};
}

SplitMetrics split_metrics_from_json(const json& j) {
  try {
    SplitMetrics m;
    m.rare_class_id = j.at("rare_class_id").get<std::size_t>();
    m.rare_accuracy = opt_from(j, "rare_accuracy");
    m.other_macro = opt_from(j, "other_macro");
    m.overall = j.at("overall").get<double>();
    m.total = j.at("total").get<std::size_t>();
    m.class_counts = j.at("class_counts").get<std::vector<std::size_t>>();
    for (const auto& a : j.at("per_class_accuracy")) {
      m.per_class_accuracy.push_back(a.is_null() ? std::nullopt
                                                 : std::optional<double>(a.get<double>()));
    }
    m.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
    return m;
  } catch (const json::exception& e) {
    throw Error(std::string("metrics json: ") + e.what());
  }
}

json to_json(const RunMetrics& m) {
  json j = json::object();
  for (Split s : kAllSplits) {
    if (m.has(s)) j[std::string(to_string(s))] = to_json(m.at(s));
  }
  return j;
}

RunMetrics run_metrics_from_json(const json& j) {
  if (!j.is_object()) throw Error("metrics json: expected an object");
  RunMetrics m;
  for (const auto& [key, value] : j.items()) m.set(parse_split(key), split_metrics_from_json(value));
  return m;
}

// ---------------------------------------------------------------------------
// run directories

std::string epochs_csv(const std::vector<EpochRecord>& history) {
  auto fmt = [](const std::optional<double>& v) { return v ? csv::format_double(*v) : ""; };
  std::ostringstream os;
  os << "epoch,classification_loss,domain_loss,coral_loss,total_loss,discriminator_accuracy,"
        "grl_scale";
  for (Split s : kAllSplits) {
    const std::string p(to_string(s));
    os << ',' << p << "_rare_acc," << p << "_other_avg," << p << "_overall";
  }
  os << '\n';
  for (const auto& r : history) {
    os << r.epoch << ',' << csv::format_double(r.classification_loss) << ','
       << fmt(r.domain_loss) << ',' << fmt(r.coral_loss) << ','
       << csv::format_double(r.total_loss) << ',' << fmt(r.discriminator_accuracy) << ','
       << csv::format_double(r.grl_scale);
    for (Split s : kAllSplits) {
      if (!r.metrics.has(s)) {
        os << ",,,";
        continue;
      }
      const auto& m = r.metrics.at(s);
      os << ',' << fmt(m.rare_accuracy) << ',' << fmt(m.other_macro) << ','
         << csv::format_double(m.overall);
    }
    os << '\n';
  }
  return os.str();
}

std::uint64_t file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return fnv1a64(buf.str());
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error("'" + path.string() + "': " + e.what());
  }
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace

void write_run_dir(const fs::path& dir, const TrainConfig& cfg, const fs::path& data_path,
                   std::uint64_t data_hash, const TrainResult& result) {
  fs::create_directories(dir);
  write_text(dir / "config.json", to_json(cfg).dump(2) + "\n");
  write_text(dir / "run.json", json{{"dataset", fs::absolute(data_path).string()},
                                    {"dataset_hash", hex64(data_hash)},
                                    {"method", to_string(cfg.method)},
                                    {"seed", cfg.seed},
                                    {"config_hash", hex64(cfg.hash())}}
                                       .dump(2) +
                                   "\n");
  save_checkpoint(result.best, dir / "checkpoint.bin");
  write_text(dir / "epochs.csv", epochs_csv(result.history));
  const auto& sel = result.history.at(result.selected_epoch - 1);
  write_text(dir / "selected_metrics.json",
             json{{"method", to_string(cfg.method)},
                  {"selected_epoch", result.selected_epoch},
                  {"metrics", to_json(sel.metrics)}}
                     .dump(2) +
                 "\n");
}

// ---------------------------------------------------------------------------
// subcommands

namespace {

struct Overrides {
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<double> learning_rate;
  std::optional<double> coral_lambda;
  std::optional<double> grl_scale;
  std::optional<std::size_t> synthetic_count;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App* app) {
    app->add_option("--epochs", epochs, "Override config epochs");
    app->add_option("--batch-size", batch_size, "Override config batch_size");
    app->add_option("--lr", learning_rate, "Override config learning_rate");
    app->add_option("--coral-lambda", coral_lambda, "Override config coral_lambda");
    app->add_option("--grl-scale", grl_scale, "Override config grl_scale");
    app->add_option("--synthetic-count", synthetic_count, "Override config synthetic_count");
    app->add_option("--seed", seed, "Override config seed");
  }

  void apply(TrainConfig& c) const {
    if (epochs) c.epochs = *epochs;
    if (batch_size) c.batch_size = *batch_size;
    if (learning_rate) c.learning_rate = *learning_rate;
    if (coral_lambda) c.coral_lambda = *coral_lambda;
    if (grl_scale) c.grl_scale = *grl_scale;
    if (synthetic_count) c.synthetic_count = *synthetic_count;
    if (seed) c.seed = *seed;
  }
};

TrainConfig load_config(const std::string& path, const std::string& method, const Overrides& o) {
  TrainConfig c;
  if (!path.empty()) c = config_from_json(read_json(path));
  c.method = parse_method(method);
  o.apply(c);
  c.validate();
  return c;
}

void print_histogram(std::ostream& out, const Dataset& ds) {
  const auto real = class_histogram(ds, Split::train);
  const auto syn = class_histogram(ds, Split::train, Domain::synthetic);
  out << "train histogram (class: real [+ synthetic])\n";
  for (std::size_t c = 0; c < real.size(); ++c) {
    out << "  " << c << (c == ds.rare_class_id ? " (rare)" : "") << ": " << real[c];
    if (syn[c] > 0) out << " + " << syn[c];
    out << '\n';
  }
}

int cmd_gen_data(const std::string& spec_path, const std::string& out_path,
                 std::optional<std::uint64_t> seed, std::ostream& out) {
  GenSpec g = spec_path.empty() ? GenSpec::defaults() : gen_spec_from_json(read_json(spec_path));
  if (seed) g.seed = *seed;
  const Dataset ds = generate(g);
  save_csv(ds, out_path);
  out << "wrote " << ds.samples.size() << " samples to " << out_path << '\n';
  print_histogram(out, ds);
  return 0;
}

int cmd_train(const std::string& data, const std::string& method, const std::string& config,
              const std::string& out_dir, const Overrides& o, std::ostream& out,
              std::ostream& err) {
  const TrainConfig cfg = load_config(config, method, o);
  const Dataset ds = load_csv(data);
  fs::create_directories(out_dir);
  std::ofstream log(fs::path(out_dir) / "train.log");
  log << "method " << to_string(cfg.method) << ", seed " << cfg.seed << ", " << cfg.epochs
      << " epochs, dataset " << data << '\n';
  TrainResult r;
  try {
    r = train(ds, cfg);
  } catch (const TrainingDiverged& e) {
    log << "aborted: " << e.what() << '\n';
    err << "training diverged: " << e.what() << '\n';
    return 2;
  }
  for (const auto& h : r.history) {
    log << "epoch " << h.epoch << " loss " << h.total_loss << " trans_val rare "
        << h.metrics.at(Split::trans_val).rare_accuracy.value_or(-1.0) << '\n';
  }
  log << "selected epoch " << r.selected_epoch << '\n';
  write_run_dir(out_dir, cfg, data, file_hash(data), r);
  out << "selected epoch " << r.selected_epoch << " of " << cfg.epochs << '\n';
  out << comparison_table({{to_string(cfg.method), r.history[r.selected_epoch - 1].metrics}}).text();
  return 0;
}

int cmd_sweep(const std::string& data, const std::string& method, const std::string& config,
              const std::vector<std::size_t>& counts, const std::vector<std::uint64_t>& seeds,
              const std::string& out_dir, std::size_t jobs, const Overrides& o, std::ostream& out,
              std::ostream& err) {
  const TrainConfig cfg = load_config(config, method, o);
  const Dataset ds = load_csv(data);
  const std::uint64_t data_hash = file_hash(data);
  const SweepResult res = sweep(ds, cfg, cfg.method, counts, seeds, jobs);

  const fs::path root(out_dir);
  fs::create_directories(root);
  std::ostringstream failures;
  failures << "count,seed,error\n";
  std::size_t n_failed = 0;
  for (const auto& cell : res.cells) {
    const fs::path dir = root / ("count_" + std::to_string(cell.synthetic_count) + "_seed_" +
                                 std::to_string(cell.seed));
    if (!cell.ok()) {
      ++n_failed;
      std::string msg = cell.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      failures << cell.synthetic_count << ',' << cell.seed << ',' << msg << '\n';
      err << "cell count=" << cell.synthetic_count << " seed=" << cell.seed
          << " failed: " << cell.error << '\n';
      continue;
    }
    TrainConfig c = cfg;
    c.synthetic_count = cell.synthetic_count;
    c.seed = cell.seed;
    write_run_dir(dir, c, data, data_hash, *cell.result);
  }
  write_text(root / "learning_curve.csv", learning_curve_csv(res));
  write_text(root / "failures.csv", failures.str());
  out << res.cells.size() - n_failed << " of " << res.cells.size() << " cells succeeded\n";
  return 0;
}

int cmd_compare(const std::vector<std::string>& runs, const std::string& out_dir,
                std::ostream& out) {
  std::vector<std::pair<std::string, RunMetrics>> entries;
  std::set<std::string> seen;
  for (const auto& run : runs) {
    const fs::path file = fs::path(run) / "selected_metrics.json";
    if (!fs::exists(file)) throw Error("run dir '" + run + "' has no selected_metrics.json");
    const json j = read_json(file);
    std::string name = j.value("method", fs::path(run).filename().string());
    if (!seen.insert(name).second) name += " (" + fs::path(run).filename().string() + ")";
    entries.emplace_back(name, run_metrics_from_json(j.at("metrics")));
  }
  const ComparisonTable t = comparison_table(entries);
  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "comparison.txt", t.text());
  write_text(fs::path(out_dir) / "comparison.csv", t.csv());
  out << t.text();
  return 0;
}

int cmd_project(const std::string& run, const std::string& data, const std::string& split_name,
                const std::string& out_dir, std::size_t components, std::ostream& out,
                std::ostream& err) {
  const fs::path run_dir(run);
  const fs::path ck = run_dir / "checkpoint.bin";
  if (!fs::exists(ck)) throw Error("run dir '" + run + "' has no checkpoint.bin");
  const Checkpoint cp = load_checkpoint(ck);
  const TrainConfig cfg = config_from_json(read_json(run_dir / "config.json"));
  if (auto w = config_hash_warning(cp, cfg.hash())) err << "warning: " << *w << '\n';
  if (fs::exists(run_dir / "run.json")) {
    const json rj = read_json(run_dir / "run.json");
    if (rj.value("dataset_hash", "") != hex64(file_hash(data))) {
      err << "warning: dataset differs from the one the run was trained on\n";
    }
  }
  const Dataset ds = load_csv(data);
  const Split split = parse_split(split_name);

  // Real samples of the split plus the synthetic samples the run trained on.
  std::vector<std::size_t> idx = ds.indices(split, Domain::real);
  const DomainOrg org =
      build_domains(ds, cfg.method, cfg.synthetic_count, cfg.oversample_factor, cfg.seed);
  std::vector<std::size_t> syn;
  for (std::size_t i : org.source)
    if (ds.samples[i].domain == Domain::synthetic) syn.push_back(i);
  std::sort(syn.begin(), syn.end());
  idx.insert(idx.end(), syn.begin(), syn.end());

  const ProjectedFeatures p = project_features(cp.params, ds, idx, components);
  const fs::path od(out_dir);
  fs::create_directories(od);
  export_scatter(p, od / "scatter.csv", od / "scatter.svg");
  json summary{{"split", split_name},
               {"samples", idx.size()},
               {"explained_variance", p.explained_variance}};
  std::optional<double> score;
  try {
    score = bimodality_score(p, ds.rare_class_id);
  } catch (const Error& e) {
    err << "bimodality: " << e.what() << '\n';
  }
  summary["bimodality_score"] = score ? json(*score) : json(nullptr);
  write_text(od / "projection.json", summary.dump(2) + "\n");
  if (score) {
    out << "bimodality score " << *score << '\n';
  } else {
    out << "bimodality score n/a\n";
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rare-class training with synthetic data and domain adaptation", "rareda"};
  app.require_subcommand(1);

  std::string spec_path, out_path, data, method, config, out_dir, run_dir, split = "trans_test";
  std::optional<std::uint64_t> gen_seed;
  std::vector<std::size_t> counts;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> runs;
  std::size_t jobs = 1, components = 2;
  Overrides overrides;
  const std::set<std::string> method_names{"baseline", "deerdann", "alldann", "deercoral"};

  auto* gen = app.add_subcommand("gen-data", "Generate the toy benchmark as CSV");
  gen->add_option("--spec", spec_path, "GenSpec JSON file (defaults if omitted)")
      ->check(CLI::ExistingFile);
  gen->add_option("--out", out_path, "Output CSV")->required();
  gen->add_option("--seed", gen_seed, "Override the spec seed");

  auto* tr = app.add_subcommand("train", "Train one model and write a run directory");
  tr->add_option("--data", data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  tr->add_option("--method", method, "baseline|deerdann|alldann|deercoral")
      ->required()
      ->check(CLI::IsMember(method_names));
  tr->add_option("--config", config, "TrainConfig JSON file")->check(CLI::ExistingFile);
  tr->add_option("--out", out_dir, "Run directory")->required();
  overrides.add_to(tr);

  auto* sw = app.add_subcommand("sweep", "Sweep synthetic counts and seeds");
  sw->add_option("--data", data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  sw->add_option("--method", method, "baseline|deerdann|alldann|deercoral")
      ->required()
      ->check(CLI::IsMember(method_names));
  sw->add_option("--config", config, "TrainConfig JSON file")->check(CLI::ExistingFile);
  sw->add_option("--counts", counts, "Synthetic counts, e.g. 0,100,400")
      ->required()
      ->delimiter(',');
  sw->add_option("--seeds", seeds, "Seeds, e.g. 1,2,3")->required()->delimiter(',');
  sw->add_option("--out", out_dir, "Output directory")->required();
  sw->add_option("--jobs", jobs, "Cells trained in parallel")->check(CLI::PositiveNumber);
  overrides.add_to(sw);

  auto* cmp = app.add_subcommand("compare", "Comparison table over run directories");
  cmp->add_option("--runs", runs, "Run directories, comma separated")
      ->required()
      ->delimiter(',');
  cmp->add_option("--out", out_dir, "Output directory")->required();

  auto* prj = app.add_subcommand("project", "2-D PCA of pre-logit features");
  prj->add_option("--run", run_dir, "Run directory")->required();
  prj->add_option("--data", data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  prj->add_option("--split", split, "Split whose real samples are projected")
      ->check(CLI::IsMember({"train", "cis_val", "cis_test", "trans_val", "trans_test"}));
  prj->add_option("--out", out_dir, "Output directory")->required();
  prj->add_option("--components", components, "Number of components (>= 2)")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1024}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*gen) return cmd_gen_data(spec_path, out_path, gen_seed, out);
    if (*tr) return cmd_train(data, method, config, out_dir, overrides, out, err);
    if (*sw) {
      return cmd_sweep(data, method, config, counts, seeds, out_dir, jobs, overrides, out, err);
    }
    if (*cmp) return cmd_compare(runs, out_dir, out);
    if (*prj) return cmd_project(run_dir, data, split, out_dir, components, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace rareda::cli
