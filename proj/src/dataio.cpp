#include "rareda/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "rareda/csv_text.hpp"
#include "rareda/numcore/rng.hpp"

namespace rareda {

std::string_view to_string(Domain d) noexcept {
  return d == Domain::real ? "real" : "synthetic";
}

std::string_view to_string(Split s) noexcept {
  switch (s) {
    case Split::train: return "train";
    case Split::cis_val: return "cis_val";
    case Split::cis_test: return "cis_test";
    case Split::trans_val: return "trans_val";
    case Split::trans_test: return "trans_test";
  }
  return "train";
}

Domain parse_domain(std::string_view token) {
  if (token == "real") return Domain::real;
  if (token == "synthetic") return Domain::synthetic;
  throw Error("unknown domain token '" + std::string(token) + "' (expected real or synthetic)");
}

Split parse_split(std::string_view token) {
  for (Split s : kAllSplits) {
    if (token == to_string(s)) return s;
  }
  throw Error("unknown split token '" + std::string(token) +
              "' (expected train, cis_val, cis_test, trans_val or trans_test)");
}

Matrix make_gap_matrix(std::size_t dim, double angle_rad, double condition) {
  if (dim < 2) throw Error("gap matrix needs at least 2 dimensions");
  if (!(condition >= 1.0)) throw Error("gap condition number must be >= 1");
  Matrix a = Matrix::identity(dim);
  const double c = std::cos(angle_rad);
  const double s = std::sin(angle_rad);
  const double sx = std::sqrt(condition);
  const double sy = 1.0 / sx;
  // R(θ)·diag(sx, sy) acting on column vectors
  a(0, 0) = c * sx;
  a(0, 1) = -s * sy;
  a(1, 0) = s * sx;
  a(1, 1) = c * sy;
  return a;
}

GenSpec GenSpec::defaults() {
  GenSpec s;
  s.train_counts.resize(s.class_count);
  double count = 1000.0;
  for (std::size_t c = 0; c < s.class_count; ++c) {
    s.train_counts[c] = static_cast<std::size_t>(std::lround(count));
    count *= 0.6;
  }
  s.train_counts[s.rare_class_id] = 41;
  s.set_gap(GapShape{});
  return s;
}

void GenSpec::set_gap(const GapShape& g) {
  if (!(g.condition > 0.0) || !(g.noise_ratio >= 1.0) || !std::isfinite(g.angle_rad) ||
      !std::isfinite(g.offset_units)) {
    throw Error("gen spec: gap needs condition > 0, noise_ratio >= 1, finite angle and offset");
  }
  gap_matrix = make_gap_matrix(feature_dim, g.angle_rad, g.condition);
  // b along the last axis; E‖μ_a − μ_b‖ ≈ scale·√(2d) is one class-separation unit
  gap_offset.assign(feature_dim, 0.0);
  gap_offset.back() =
      g.offset_units * class_mean_scale * std::sqrt(2.0 * static_cast<double>(feature_dim));
  gap_extra_noise = noise_scale * std::sqrt(g.noise_ratio * g.noise_ratio - 1.0);
}

GenSpec GenSpec::with_zero_gap() const {
  GenSpec s = *this;
  s.gap_matrix = Matrix::identity(feature_dim);
  s.gap_offset.assign(feature_dim, 0.0);
  s.gap_extra_noise = 0.0;
  return s;
}

void GenSpec::validate() const {
  if (class_count < 2) throw Error("gen spec: class_count must be >= 2");
  if (feature_dim < 2) throw Error("gen spec: feature_dim must be >= 2");
  if (rare_class_id >= class_count) throw Error("gen spec: rare_class_id out of range");
  if (train_counts.size() != class_count) {
    throw Error("gen spec: train_counts has " + std::to_string(train_counts.size()) +
                " entries, expected class_count = " + std::to_string(class_count));
  }
  const std::size_t rare = train_counts[rare_class_id];
  for (std::size_t c = 0; c < class_count; ++c) {
    if (train_counts[c] == 0) throw Error("gen spec: train_counts entries must be positive");
    if (train_counts[c] < rare) {
      throw Error("gen spec: rare class must have the minimum train count, class " +
                  std::to_string(c) + " has fewer");
    }
  }
  if (locations_per_class < 2) throw Error("gen spec: locations_per_class must be >= 2");
  if (trans_locations_per_class < 1 || trans_locations_per_class >= locations_per_class) {
    throw Error("gen spec: trans_locations_per_class must be in [1, locations_per_class)");
  }
  if (eval_count_per_class < 1) throw Error("gen spec: eval_count_per_class must be >= 1");
  if (gap_matrix.rows() != feature_dim || gap_matrix.cols() != feature_dim) {
    throw Error("gen spec: gap_matrix must be " + std::to_string(feature_dim) + "x" +
                std::to_string(feature_dim));
  }
  if (gap_offset.size() != feature_dim) {
    throw Error("gen spec: gap_offset must have feature_dim = " + std::to_string(feature_dim) +
                " entries");
  }
  const std::pair<const char*, double> scales[] = {{"class_mean_scale", class_mean_scale},
                                                   {"location_jitter", location_jitter},
                                                   {"noise_scale", noise_scale},
                                                   {"gap_extra_noise", gap_extra_noise}};
  for (const auto& [name, v] : scales) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(std::string("gen spec: ") + name + " must be finite and >= 0");
    }
  }
  if (!gap_matrix.all_finite()) throw Error("gen spec: gap_matrix must be finite");
}

std::uint64_t GenSpec::hash() const {
  std::ostringstream os;
  os.precision(17);
  os << class_count << ',' << feature_dim << ',' << rare_class_id << ';';
  for (auto c : train_counts) os << c << ',';
  os << ';' << eval_count_per_class << ',' << locations_per_class << ','
     << trans_locations_per_class << ',' << class_mean_scale << ',' << location_jitter << ','
     << noise_scale << ',' << synthetic_pool << ';';
  for (double v : gap_matrix.values()) os << v << ',';
  os << ';';
  for (double v : gap_offset) os << v << ',';
  os << ';' << gap_extra_noise << ',' << seed;
  return fnv1a64(os.str());
}

std::vector<std::size_t> Dataset::indices(Split split, std::optional<Domain> domain) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].split == split && (!domain || samples[i].domain == *domain)) out.push_back(i);
  }
  return out;
}

Matrix Dataset::features(std::span<const std::size_t> idx) const {
  Matrix m(idx.size(), feature_dim);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& f = samples.at(idx[r]).features;
    std::copy(f.begin(), f.end(), m.row(r).begin());
  }
  return m;
}

std::vector<std::size_t> Dataset::labels(std::span<const std::size_t> idx) const {
  std::vector<std::size_t> out(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) out[r] = samples.at(idx[r]).class_id;
  return out;
}

void Dataset::validate() const {
  if (rare_class_id >= class_count) throw Error("dataset: rare class id out of range");
  std::vector<bool> seen_loc;
  std::vector<std::size_t> trans_locs;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.features.size() != feature_dim) {
      throw Error("dataset: sample " + std::to_string(i) + " has " +
                  std::to_string(s.features.size()) + " features, expected " +
                  std::to_string(feature_dim));
    }
    if (s.class_id >= class_count) {
      throw Error("dataset: sample " + std::to_string(i) + " class id out of range");
    }
    if (s.domain == Domain::synthetic) {
      if (s.class_id != rare_class_id) {
        throw Error("dataset: synthetic sample " + std::to_string(i) + " has class " +
                    std::to_string(s.class_id) + " but only the rare class " +
                    std::to_string(rare_class_id) + " may be synthetic");
      }
      if (s.split != Split::train) {
        throw Error("dataset: synthetic sample " + std::to_string(i) + " outside the train split");
      }
    }
    if (s.split == Split::trans_val || s.split == Split::trans_test) {
      trans_locs.push_back(s.location_id);
    } else {
      if (s.location_id >= seen_loc.size()) seen_loc.resize(s.location_id + 1, false);
      seen_loc[s.location_id] = true;
    }
  }
  for (std::size_t loc : trans_locs) {
    if (loc < seen_loc.size() && seen_loc[loc]) {
      throw Error("dataset: trans location " + std::to_string(loc) +
                  " also appears in train or cis splits");
    }
  }
}

Dataset generate(const GenSpec& spec) {
  spec.validate();
  const std::size_t d = spec.feature_dim;
  const std::size_t k = spec.class_count;
  const std::size_t n_loc = spec.locations_per_class;
  const std::size_t n_seen = n_loc - spec.trans_locations_per_class;

  RngStream means_rng(derive_seed(spec.seed, "gen.class_means"));
  RngStream loc_rng(derive_seed(spec.seed, "gen.locations"));
  RngStream sample_rng(derive_seed(spec.seed, "gen.samples"));
  RngStream syn_rng(derive_seed(spec.seed, "gen.synthetic"));

  std::vector<std::vector<double>> class_mean(k, std::vector<double>(d));
  for (auto& m : class_mean)
    for (double& v : m) v = means_rng.normal(0.0, spec.class_mean_scale);

  // loc_mean[c * n_loc + j]
  std::vector<std::vector<double>> loc_mean(k * n_loc, std::vector<double>(d));
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < n_loc; ++j) {
      auto& m = loc_mean[c * n_loc + j];
      for (std::size_t t = 0; t < d; ++t) m[t] = class_mean[c][t] + loc_rng.normal(0.0, spec.location_jitter);
    }
  }

  Dataset ds;
  ds.feature_dim = d;
  ds.class_count = k;
  ds.rare_class_id = spec.rare_class_id;
  for (std::size_t c = 0; c < k; ++c) {
    ds.class_names.push_back(c == spec.rare_class_id ? "rare_" + std::to_string(c)
                                                     : "class_" + std::to_string(c));
  }
  ds.provenance = "generated:" + std::to_string(spec.hash());

  auto draw_real = [&](std::size_t c, std::size_t loc_index, Split split) {
    const std::size_t loc = c * n_loc + loc_index;
    Sample s;
    s.features.resize(d);
    for (std::size_t t = 0; t < d; ++t) s.features[t] = loc_mean[loc][t] + sample_rng.normal(0.0, spec.noise_scale);
    s.class_id = c;
    s.domain = Domain::real;
    s.location_id = loc;
    s.split = split;
    ds.samples.push_back(std::move(s));
  };

  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < spec.train_counts[c]; ++i) draw_real(c, sample_rng.index(n_seen), Split::train);
    for (Split split : {Split::cis_val, Split::cis_test}) {
      for (std::size_t i = 0; i < spec.eval_count_per_class; ++i) draw_real(c, sample_rng.index(n_seen), split);
    }
    for (Split split : {Split::trans_val, Split::trans_test}) {
      for (std::size_t i = 0; i < spec.eval_count_per_class; ++i) {
        draw_real(c, n_seen + sample_rng.index(spec.trans_locations_per_class), split);
      }
    }
  }

  // Synthetic samples carry a dedicated location id no real camera uses.
  const std::size_t synthetic_location = k * n_loc;
  const std::size_t rare = spec.rare_class_id;
  std::vector<double> x(d);
  for (std::size_t i = 0; i < spec.synthetic_pool; ++i) {
    const std::size_t loc = rare * n_loc + syn_rng.index(n_loc);
    for (std::size_t t = 0; t < d; ++t) x[t] = loc_mean[loc][t] + syn_rng.normal(0.0, spec.noise_scale);
    Sample s;
    s.features.resize(d);
    for (std::size_t r = 0; r < d; ++r) {
      double acc = spec.gap_offset[r];
      for (std::size_t t = 0; t < d; ++t) acc += spec.gap_matrix(r, t) * x[t];
      if (spec.gap_extra_noise > 0.0) acc += syn_rng.normal(0.0, spec.gap_extra_noise);
      s.features[r] = acc;
    }
    s.class_id = rare;
    s.domain = Domain::synthetic;
    s.location_id = synthetic_location;
    s.split = Split::train;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// CSV

using csv::format_double;
using csv::parse_number;
using csv::split_commas;

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  for (std::size_t j = 0; j < ds.feature_dim; ++j) out << 'f' << j << ',';
  out << "class_id,domain,location_id,split\n";
  for (const auto& s : ds.samples) {
    for (double v : s.features) out << format_double(v) << ',';
    out << s.class_id << ',' << to_string(s.domain) << ',' << s.location_id << ','
        << to_string(s.split) << '\n';
  }
  out.flush();
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

Dataset load_csv(const std::filesystem::path& path, std::optional<std::size_t> rare_class_id,
                 std::optional<std::size_t> class_count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error("csv '" + path.string() + "': missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  // owned copies: `line` is reused for the rows below
  std::vector<std::string> header;
  for (auto tok : split_commas(line)) header.emplace_back(tok);
  if (header.size() < 6) {
    throw Error("csv header: expected f0..f{d-1},class_id,domain,location_id,split with d >= 2");
  }
  const std::size_t d = header.size() - 4;
  for (std::size_t j = 0; j < d; ++j) {
    if (header[j] != "f" + std::to_string(j)) {
      throw Error("csv header: column " + std::to_string(j) + " is '" + header[j] +
                  "', expected 'f" + std::to_string(j) + "'");
    }
  }
  if (header[d] != "class_id" || header[d + 1] != "domain" || header[d + 2] != "location_id" ||
      header[d + 3] != "split") {
    throw Error("csv header: trailing columns must be class_id,domain,location_id,split");
  }

  Dataset ds;
  ds.feature_dim = d;
  ds.provenance = "csv:" + path.string();
  std::size_t line_no = 1;
  std::size_t max_class = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = split_commas(line);
    if (cols.size() != d + 4) {
      throw Error("csv line " + std::to_string(line_no) + ": " + std::to_string(cols.size()) +
                  " columns, expected " + std::to_string(d + 4) + " (d_in = " +
                  std::to_string(d) + ")");
    }
    Sample s;
    s.features.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      s.features[j] = parse_number<double>(cols[j], line_no, header[j]);
      if (!std::isfinite(s.features[j])) {
        throw Error("csv line " + std::to_string(line_no) + ": non-finite feature");
      }
    }
    s.class_id = parse_number<std::size_t>(cols[d], line_no, "class_id");
    try {
      s.domain = parse_domain(cols[d + 1]);
      s.split = parse_split(cols[d + 3]);
    } catch (const Error& e) {
      throw Error("csv line " + std::to_string(line_no) + ": " + e.what());
    }
    s.location_id = parse_number<std::size_t>(cols[d + 2], line_no, "location_id");
    max_class = std::max(max_class, s.class_id);
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw Error("csv '" + path.string() + "': no samples");

  ds.class_count = class_count.value_or(max_class + 1);
  if (ds.class_count <= max_class) {
    throw Error("csv: class id " + std::to_string(max_class) + " exceeds class count " +
                std::to_string(ds.class_count));
  }
  if (rare_class_id) {
    ds.rare_class_id = *rare_class_id;
  } else {
    std::vector<std::size_t> counts(ds.class_count, 0);
    for (const auto& s : ds.samples)
      if (s.split == Split::train && s.domain == Domain::real) ++counts[s.class_id];
    ds.rare_class_id = static_cast<std::size_t>(
        std::min_element(counts.begin(), counts.end()) - counts.begin());
  }
  for (std::size_t c = 0; c < ds.class_count; ++c) {
    ds.class_names.push_back(c == ds.rare_class_id ? "rare_" + std::to_string(c)
                                                   : "class_" + std::to_string(c));
  }
  ds.validate();
  return ds;
}

std::vector<std::size_t> class_histogram(const Dataset& ds, Split split, Domain domain) {
  std::vector<std::size_t> counts(ds.class_count, 0);
  for (const auto& s : ds.samples) {
    if (s.split == split && s.domain == domain) ++counts[s.class_id];
  }
  return counts;
}

}  // namespace rareda
