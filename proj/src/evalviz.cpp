#include "rareda/evalviz.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "rareda/csv_text.hpp"

namespace rareda {

// ---------------------------------------------------------------------------
// sweeps

const RunMetrics& SweepCell::metrics() const {
  if (!result) throw Error("sweep cell (count " + std::to_string(synthetic_count) + ", seed " +
                           std::to_string(seed) + ") failed: " + error);
  return result->history.at(result->selected_epoch - 1).metrics;
}

SweepResult sweep(const Dataset& ds, const TrainConfig& base, Method method,
                  const std::vector<std::size_t>& counts, const std::vector<std::uint64_t>& seeds,
                  std::size_t jobs) {
  const std::size_t pool = ds.indices(Split::train, Domain::synthetic).size();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (i > 0 && counts[i] <= counts[i - 1]) {
      throw Error("sweep: synthetic counts must be strictly increasing");
    }
    if (counts[i] > pool) {
      throw Error("sweep: count " + std::to_string(counts[i]) + " exceeds the synthetic pool of " +
                  std::to_string(pool));
    }
  }

  SweepResult out;
  out.method = method;
  for (std::size_t c : counts) {
    for (std::uint64_t s : seeds) {
      SweepCell cell;
      cell.synthetic_count = c;
      cell.seed = s;
      out.cells.push_back(std::move(cell));
    }
  }

  auto run_cell = [&](SweepCell& cell) {
    TrainConfig cfg = base;
    cfg.method = method;
    cfg.synthetic_count = cell.synthetic_count;
    cfg.seed = cell.seed;
    try {
      cell.result = train(ds, cfg);
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  };

  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(out.cells.size(), 1));
  if (jobs == 1) {
    for (auto& cell : out.cells) run_cell(cell);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < out.cells.size(); i = next++) run_cell(out.cells[i]);
    });
  }
  workers.clear();
  return out;
}

std::string learning_curve_csv(const SweepResult& r) {
  std::ostringstream os;
  os << "count,seed,trans_rare_acc,trans_other_avg,cis_rare_acc,cis_other_avg\n";
  for (const auto& cell : r.cells) {
    if (!cell.ok()) continue;
    const ComparisonRow row = comparison_row("", cell.metrics());
    os << cell.synthetic_count << ',' << cell.seed << ',' << csv::format_double(row.trans_rare)
       << ',' << csv::format_double(row.trans_other) << ',' << csv::format_double(row.cis_rare)
       << ',' << csv::format_double(row.cis_other) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// comparison table

ComparisonRow comparison_row(const std::string& name, const RunMetrics& m) {
  auto need = [](const std::optional<double>& v, const char* what) {
    if (!v) throw Error(std::string("comparison: ") + what + " undefined");
    return *v;
  };
  const SplitMetrics& trans = m.at(Split::trans_test);
  const SplitMetrics& cis = m.at(Split::cis_test);
  return {name, need(trans.rare_accuracy, "trans rare accuracy"),
          need(cis.rare_accuracy, "cis rare accuracy"),
          need(trans.other_macro, "trans other-class accuracy"),
          need(cis.other_macro, "cis other-class accuracy")};
}

ComparisonTable comparison_table(const std::vector<std::pair<std::string, RunMetrics>>& entries) {
  ComparisonTable t;
  for (const auto& [name, m] : entries) t.rows.push_back(comparison_row(name, m));
  return t;
}

std::string ComparisonTable::text() const {
  const std::vector<std::string> head{"method", "trans rare", "cis rare", "trans other (avg.)",
                                      "cis other (avg.)"};
  std::size_t name_w = head[0].size();
  for (const auto& r : rows) name_w = std::max(name_w, r.name.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(name_w)) << head[0];
  for (std::size_t i = 1; i < head.size(); ++i) os << "  " << std::right << std::setw(18) << head[i];
  os << '\n';
  os << std::fixed << std::setprecision(1);
  for (const auto& r : rows) {
    os << std::left << std::setw(static_cast<int>(name_w)) << r.name << std::right;
    for (double v : {r.trans_rare, r.cis_rare, r.trans_other, r.cis_other}) {
      os << "  " << std::setw(18) << 100.0 * v;
    }
    os << '\n';
  }
  return os.str();
}

std::string ComparisonTable::csv() const {
  std::ostringstream os;
  os << "method,trans_rare,cis_rare,trans_other_avg,cis_other_avg\n";
  for (const auto& r : rows) {
    if (r.name.find_first_of(",\n") != std::string::npos) {
      throw Error("comparison: method name '" + r.name + "' contains a comma or newline");
    }
    os << r.name << ',' << csv::format_double(r.trans_rare) << ','
       << csv::format_double(r.cis_rare) << ',' << csv::format_double(r.trans_other) << ','
       << csv::format_double(r.cis_other) << '\n';
  }
  return os.str();
}

ComparisonTable parse_comparison_csv(const std::string& text) {
  const auto ls = csv::lines(text);
  if (ls.empty() || ls[0] != "method,trans_rare,cis_rare,trans_other_avg,cis_other_avg") {
    throw Error("comparison csv: unexpected header");
  }
  ComparisonTable t;
  for (std::size_t i = 1; i < ls.size(); ++i) {
    const auto cols = csv::split_commas(ls[i]);
    if (cols.size() != 5) {
      throw Error("comparison csv line " + std::to_string(i + 1) + ": expected 5 columns");
    }
    ComparisonRow r;
    r.name = std::string(cols[0]);
    r.trans_rare = csv::parse_number<double>(cols[1], i + 1, "trans_rare");
    r.cis_rare = csv::parse_number<double>(cols[2], i + 1, "cis_rare");
    r.trans_other = csv::parse_number<double>(cols[3], i + 1, "trans_other_avg");
    r.cis_other = csv::parse_number<double>(cols[4], i + 1, "cis_other_avg");
    t.rows.push_back(std::move(r));
  }
  return t;
}

// ---------------------------------------------------------------------------
// PCA

Pca fit_pca(const Matrix& x, std::size_t k) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (k < 1 || k > d) throw Error("pca: n_components must be in [1, " + std::to_string(d) + "]");
  if (n <= k) {
    throw Error("pca: need more samples (" + std::to_string(n) + ") than components (" +
                std::to_string(k) + ")");
  }
  x.require_finite("pca input");

  Pca p;
  const Matrix mu = column_means(x);
  p.mean.assign(mu.values().begin(), mu.values().end());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x(i, j) - p.mean[j];
  const Eigen::MatrixXd cov = (c.transpose() * c) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw Error("pca: eigendecomposition failed");

  // Eigen returns ascending eigenvalues.
  const Eigen::VectorXd& vals = eig.eigenvalues();
  const double top = std::max(vals(static_cast<Eigen::Index>(d) - 1), 0.0);
  const double tol = top * 1e-10 * static_cast<double>(d);
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < vals.size(); ++i)
    if (vals(i) > tol && vals(i) > 0.0) ++rank;
  if (rank < k) {
    throw Error("pca: covariance has rank " + std::to_string(rank) + ", fewer than the " +
                std::to_string(k) + " requested components");
  }

  p.components = Matrix(k, d);
  for (std::size_t r = 0; r < k; ++r) {
    const auto col = static_cast<Eigen::Index>(d - 1 - r);
    p.explained_variance.push_back(vals(col));
    std::size_t arg = 0;
    for (std::size_t j = 1; j < d; ++j) {
      if (std::abs(eig.eigenvectors()(static_cast<Eigen::Index>(j), col)) >
          std::abs(eig.eigenvectors()(static_cast<Eigen::Index>(arg), col)))
        arg = j;
    }
    const double sign = eig.eigenvectors()(static_cast<Eigen::Index>(arg), col) < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      p.components(r, j) = sign * eig.eigenvectors()(static_cast<Eigen::Index>(j), col);
    }
  }
  return p;
}

Matrix pca_project(const Pca& pca, const Matrix& x) {
  if (x.cols() != pca.mean.size()) throw Error("pca_project: dimension mismatch");
  Matrix c = x;
  for (std::size_t i = 0; i < c.rows(); ++i) {
    auto r = c.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] -= pca.mean[j];
  }
  return matmul_nt(c, pca.components);
}

Matrix pca_reconstruct(const Pca& pca, const Matrix& coords) {
  if (coords.cols() != pca.components.rows()) throw Error("pca_reconstruct: dimension mismatch");
  Matrix x = matmul(coords, pca.components);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += pca.mean[j];
  }
  return x;
}

Matrix pre_logit_features(const ModelParams& params, const Matrix& x) {
  const MlpTrace f = forward_features(params, x);
  const MlpTrace c = forward_mlp(params.classifier, f.output);
  return c.inputs.back();
}

ProjectedFeatures project_features(const ModelParams& params, const Dataset& ds,
                                   const std::vector<std::size_t>& idx, std::size_t k) {
  const Matrix x = ds.features(idx);
  const Matrix feats = pre_logit_features(params, x);
  const Pca pca = fit_pca(feats, k);
  ProjectedFeatures p;
  p.coords = pca_project(pca, feats);
  p.components = pca.components;
  p.explained_variance = pca.explained_variance;
  const auto pred = predict(params, x);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const Sample& s = ds.samples.at(idx[i]);
    p.class_ids.push_back(s.class_id);
    p.domains.push_back(s.domain);
    p.splits.push_back(s.split);
    p.correct.push_back(pred[i] == s.class_id);
  }
  return p;
}

// ---------------------------------------------------------------------------
// scatter export

namespace {

constexpr const char* kScatterHeader = "x,y,class_id,domain,split,correct";

// Tableau-like categorical palette, cycled for K > 10.
constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2",
                                    "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

void export_scatter(const ProjectedFeatures& proj, const std::filesystem::path& csv_path,
                    const std::filesystem::path& svg_path) {
  const std::size_t n = proj.coords.rows();
  if (n > 0 && proj.coords.cols() < 2) throw Error("export_scatter: need 2-D coordinates");
  {
    std::ofstream out = open_out(csv_path);
    out << kScatterHeader << '\n';
    for (std::size_t i = 0; i < n; ++i) {
      out << csv::format_double(proj.coords(i, 0)) << ',' << csv::format_double(proj.coords(i, 1))
          << ',' << proj.class_ids[i] << ',' << to_string(proj.domains[i]) << ','
          << to_string(proj.splits[i]) << ',' << (proj.correct[i] ? 1 : 0) << '\n';
    }
    if (!out) throw Error("write failed for '" + csv_path.string() + "'");
  }

  constexpr double size = 600.0, margin = 30.0;
  double x0 = -1.0, x1 = 1.0, y0 = -1.0, y1 = 1.0;
  if (n > 0) {
    x0 = x1 = proj.coords(0, 0);
    y0 = y1 = proj.coords(0, 1);
    for (std::size_t i = 1; i < n; ++i) {
      x0 = std::min(x0, proj.coords(i, 0));
      x1 = std::max(x1, proj.coords(i, 0));
      y0 = std::min(y0, proj.coords(i, 1));
      y1 = std::max(y1, proj.coords(i, 1));
    }
  }
  const double sx = (size - 2 * margin) / std::max(x1 - x0, 1e-12);
  const double sy = (size - 2 * margin) / std::max(y1 - y0, 1e-12);

  std::ofstream out = open_out(svg_path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
      << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << size << "\" height=\"" << size
      << "\" fill=\"white\" stroke=\"black\"/>\n";
  out << std::fixed << std::setprecision(2);
  for (std::size_t i = 0; i < n; ++i) {
    const double px = margin + (proj.coords(i, 0) - x0) * sx;
    const double py = size - margin - (proj.coords(i, 1) - y0) * sy;
    const char* fill = kPalette[proj.class_ids[i] % std::size(kPalette)];
    const char* stroke = proj.correct[i] ? "none" : "#d00000";
    if (proj.domains[i] == Domain::real) {
      out << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"3\" fill=\"" << fill
          << "\" stroke=\"" << stroke << "\"/>\n";
    } else {
      out << "<rect x=\"" << px - 3 << "\" y=\"" << py - 3
          << "\" width=\"6\" height=\"6\" fill=\"" << fill << "\" stroke=\"" << stroke
          << "\"/>\n";
    }
  }
  out << "</svg>\n";
  if (!out) throw Error("write failed for '" + svg_path.string() + "'");
}

std::vector<ScatterRow> read_scatter_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto ls = csv::lines(text);
  if (ls.empty() || ls[0] != kScatterHeader) {
    throw Error("scatter csv '" + path.string() + "': expected header " + kScatterHeader);
  }
  std::vector<ScatterRow> rows;
  for (std::size_t i = 1; i < ls.size(); ++i) {
    const std::size_t line = i + 1;
    const auto cols = csv::split_commas(ls[i]);
    if (cols.size() != 6) throw Error("scatter csv line " + std::to_string(line) + ": expected 6 columns");
    ScatterRow r;
    r.x = csv::parse_number<double>(cols[0], line, "x");
    r.y = csv::parse_number<double>(cols[1], line, "y");
    r.class_id = csv::parse_number<std::size_t>(cols[2], line, "class_id");
    r.domain = parse_domain(cols[3]);
    r.split = parse_split(cols[4]);
    r.correct = csv::parse_number<int>(cols[5], line, "correct") != 0;
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// bimodality

double bimodality_score(const Matrix& pts, const std::vector<Domain>& domains) {
  const std::size_t n = pts.rows();
  if (domains.size() != n) throw Error("bimodality: label count mismatch");
  std::size_t n_real = 0;
  for (Domain d : domains) n_real += d == Domain::real ? 1 : 0;
  if (n_real == 0 || n_real == n) {
    throw Error("bimodality: needs both real and synthetic samples");
  }
  auto dist2 = [&](std::size_t i, std::span<const double> c) {
    double s = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) s += (pts(i, j) - c[j]) * (pts(i, j) - c[j]);
    return s;
  };

  // Seeds: the point farthest from the centroid, then the point farthest from
  // it. Both choices depend only on distances, so the result is invariant
  // under isometries of the point cloud.
  const Matrix mean_m = column_means(pts);
  const auto mean = mean_m.row(0);
  std::size_t a = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (dist2(i, mean) > dist2(a, mean)) a = i;
  std::size_t b = a == 0 ? 1 : 0;
  for (std::size_t i = 0; i < n; ++i)
    if (dist2(i, pts.row(a)) > dist2(b, pts.row(a))) b = i;

  std::vector<std::vector<double>> centers{
      {pts.row(a).begin(), pts.row(a).end()}, {pts.row(b).begin(), pts.row(b).end()}};
  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < 200; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int c = dist2(i, centers[1]) < dist2(i, centers[0]) ? 1 : 0;
      if (c != assign[i]) {
        assign[i] = c;
        changed = true;
      }
    }
    if (!changed) break;
    for (int c = 0; c < 2; ++c) {
      std::vector<double> sum(pts.cols(), 0.0);
      std::size_t cnt = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (assign[i] != c) continue;
        ++cnt;
        for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += pts(i, j);
      }
      if (cnt == 0) continue;
      for (double& v : sum) v /= static_cast<double>(cnt);
      centers[static_cast<std::size_t>(c)] = std::move(sum);
    }
  }

  // Balanced accuracy of "cluster 0 = real".
  std::size_t real_in_0 = 0, syn_in_1 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (domains[i] == Domain::real && assign[i] == 0) ++real_in_0;
    if (domains[i] == Domain::synthetic && assign[i] == 1) ++syn_in_1;
  }
  const double bal = 0.5 * (static_cast<double>(real_in_0) / static_cast<double>(n_real) +
                            static_cast<double>(syn_in_1) / static_cast<double>(n - n_real));
  return std::max(bal, 1.0 - bal);
}

double bimodality_score(const ProjectedFeatures& proj, std::size_t rare_class_id) {
  std::vector<std::size_t> rows;
  std::vector<Domain> doms;
  for (std::size_t i = 0; i < proj.class_ids.size(); ++i) {
    if (proj.class_ids[i] != rare_class_id) continue;
    rows.push_back(i);
    doms.push_back(proj.domains[i]);
  }
  if (rows.empty()) throw Error("bimodality: no samples of the rare class");
  Matrix pts = gather_rows(proj.coords, rows);
  if (pts.cols() > 2) {
    Matrix two(pts.rows(), 2);
    for (std::size_t i = 0; i < pts.rows(); ++i) {
      two(i, 0) = pts(i, 0);
      two(i, 1) = pts(i, 1);
    }
    pts = std::move(two);
  }
  return bimodality_score(pts, doms);
}

}  // namespace rareda
