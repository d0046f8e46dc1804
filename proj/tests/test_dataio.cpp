#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "rareda/dataio.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

using namespace rareda;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

const Dataset& default_dataset() {
  static const Dataset ds = generate(GenSpec::defaults());
  return ds;
}

}  // namespace

TEST_CASE("default benchmark has 41 real rare train samples") {
  const Dataset& ds = default_dataset();
  const auto h = class_histogram(ds, Split::train);
  CHECK(h[ds.rare_class_id] == 41);
  CHECK(ds.rare_class_id == 7);
  CHECK(*std::min_element(h.begin(), h.end()) == 41);
  std::size_t total = 0;
  for (auto c : h) total += c;
  CHECK(total == ds.indices(Split::train, Domain::real).size());
  CHECK(class_histogram(ds, Split::train, Domain::synthetic)[ds.rare_class_id] == 4000);
}

TEST_CASE("generated counts equal the spec exactly") {
  const GenSpec spec = GenSpec::defaults();
  const Dataset& ds = default_dataset();
  std::map<std::tuple<Split, Domain, std::size_t>, std::size_t> count;
  for (const auto& s : ds.samples) ++count[{s.split, s.domain, s.class_id}];
  for (std::size_t c = 0; c < spec.class_count; ++c) {
    CHECK(count[{Split::train, Domain::real, c}] == spec.train_counts[c]);
    for (Split s : {Split::cis_val, Split::cis_test, Split::trans_val, Split::trans_test}) {
      CHECK(count[{s, Domain::real, c}] == spec.eval_count_per_class);
      CHECK(count[{s, Domain::synthetic, c}] == 0);
    }
    if (c != spec.rare_class_id) CHECK(count[{Split::train, Domain::synthetic, c}] == 0);
  }
  CHECK(count[{Split::train, Domain::synthetic, spec.rare_class_id}] == spec.synthetic_pool);
  CHECK(ds.samples.size() == [&] {
    std::size_t n = spec.synthetic_pool;
    for (auto c : spec.train_counts) n += c;
    return n + 4 * spec.eval_count_per_class * spec.class_count;
  }());
}

TEST_CASE("trans locations never appear in train or cis splits") {
  const Dataset& ds = default_dataset();
  std::set<std::size_t> trans, seen;
  for (const auto& s : ds.samples) {
    if (s.domain == Domain::synthetic) continue;
    if (s.split == Split::trans_val || s.split == Split::trans_test) {
      trans.insert(s.location_id);
    } else {
      seen.insert(s.location_id);
    }
  }
  for (auto l : trans) CHECK(seen.count(l) == 0);
  CHECK_FALSE(trans.empty());
  for (const auto& s : ds.samples) {
    if (s.domain == Domain::synthetic) {
      CHECK(s.class_id == ds.rare_class_id);
      CHECK(s.split == Split::train);
    }
  }
}

TEST_CASE("generation is bit-deterministic under a seed") {
  const GenSpec spec = oracle::small_spec(5);
  CHECK(generate(spec).samples == generate(spec).samples);
  GenSpec other = spec;
  other.seed = 6;
  CHECK_FALSE(generate(other).samples == generate(spec).samples);
  CHECK(spec.hash() != other.hash());
}

TEST_CASE("zero-gap control: synthetic and real rare populations share their mean") {
  // Real rare samples are spread unevenly over locations (seen locations also
  // host train and cis samples), so the reference is the location-balanced
  // mean: the average of the per-location sample means.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GenSpec spec = GenSpec::defaults().with_zero_gap();
    spec.seed = seed;
    const Dataset ds = generate(spec);
    const std::size_t d = ds.feature_dim;
    std::map<std::size_t, std::vector<std::vector<double>>> by_loc;
    std::vector<std::vector<double>> syn;
    for (const auto& s : ds.samples) {
      if (s.class_id != ds.rare_class_id) continue;
      if (s.domain == Domain::synthetic) {
        syn.push_back(s.features);
      } else {
        by_loc[s.location_id].push_back(s.features);
      }
    }
    CHECK(by_loc.size() == spec.locations_per_class);
    for (std::size_t j = 0; j < d; ++j) {
      double real_mean = 0.0;
      for (const auto& [loc, rows] : by_loc) {
        double m = 0.0;
        for (const auto& r : rows) m += r[j];
        real_mean += m / static_cast<double>(rows.size());
      }
      real_mean /= static_cast<double>(by_loc.size());
      double sm = 0.0, sq = 0.0;
      for (const auto& r : syn) sm += r[j];
      sm /= static_cast<double>(syn.size());
      for (const auto& r : syn) sq += (r[j] - sm) * (r[j] - sm);
      const double sigma = std::sqrt(sq / static_cast<double>(syn.size() - 1));
      CHECK(std::abs(sm - real_mean) < 3.0 * sigma / std::sqrt(static_cast<double>(syn.size())) +
                                           3.0 * sigma / std::sqrt(static_cast<double>(spec.eval_count_per_class)));
    }
  }
}

TEST_CASE("default gap moves the synthetic rare mean away from the real one") {
  const Dataset& ds = default_dataset();
  std::vector<double> real(ds.feature_dim, 0.0), syn(ds.feature_dim, 0.0);
  std::size_t nr = 0, ns = 0;
  for (const auto& s : ds.samples) {
    if (s.class_id != ds.rare_class_id) continue;
    auto& acc = s.domain == Domain::real ? real : syn;
    (s.domain == Domain::real ? nr : ns)++;
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += s.features[j];
  }
  double dist2 = 0.0;
  for (std::size_t j = 0; j < real.size(); ++j) {
    const double diff = real[j] / static_cast<double>(nr) - syn[j] / static_cast<double>(ns);
    dist2 += diff * diff;
  }
  CHECK(std::sqrt(dist2) > 1.0);
}

TEST_CASE("spec validation rejects infeasible specs") {
  GenSpec g = oracle::small_spec();
  g.train_counts = {60, 10, 12};  // rare class not minimal
  CHECK_THROWS_AS(g.validate(), Error);
  g = oracle::small_spec();
  g.trans_locations_per_class = g.locations_per_class;
  CHECK_THROWS_AS(generate(g), Error);
  g = oracle::small_spec();
  g.class_count = 1;
  CHECK_THROWS_AS(g.validate(), Error);
  g = oracle::small_spec();
  g.gap_offset.pop_back();
  CHECK_THROWS_AS(g.validate(), Error);
  g = oracle::small_spec();
  g.noise_scale = -1.0;
  CHECK_THROWS_WITH_AS(g.validate(), doctest::Contains("noise_scale"), Error);
}

TEST_CASE("class_histogram of an empty split is all zeros") {
  Dataset ds = generate(oracle::small_spec());
  std::erase_if(ds.samples, [](const Sample& s) { return s.split == Split::cis_val; });
  const auto h = class_histogram(ds, Split::cis_val);
  CHECK(h == std::vector<std::size_t>(ds.class_count, 0));
}

TEST_CASE("CSV save then load reproduces the dataset exactly") {
  test::TempDir dir;
  const Dataset ds = generate(oracle::small_spec(9));
  save_csv(ds, dir / "ds.csv");
  const Dataset back = load_csv(dir / "ds.csv");
  CHECK(back.samples == ds.samples);
  CHECK(back.feature_dim == ds.feature_dim);
  CHECK(back.class_count == ds.class_count);
  CHECK(back.rare_class_id == ds.rare_class_id);
  CHECK(back.class_names == ds.class_names);

  // saving the loaded copy gives the same bytes
  save_csv(back, dir / "again.csv");
  CHECK(slurp(dir / "ds.csv") == slurp(dir / "again.csv"));
}

TEST_CASE("CSV loader diagnostics") {
  test::TempDir dir;
  const auto p = dir / "bad.csv";
  const std::string header = "f0,f1,class_id,domain,location_id,split\n";

  spit(p, header + "0.5,1.5,0,real,0,train\n1.0,2.0,1,real,1,train\n0.1,0.2,1,synthetic,9,train\n");
  CHECK_THROWS_WITH_AS(load_csv(p), doctest::Contains("synthetic"), Error);

  spit(p, header + "0.5,1.5,0,real,0,train\n0.5,1.5,0,real\n");
  CHECK_THROWS_WITH_AS(load_csv(p), doctest::Contains("d_in = 2"), Error);
  CHECK_THROWS_WITH_AS(load_csv(p), doctest::Contains("line 3"), Error);

  spit(p, header + "0.5,1.5,0,real,0,train\n0.5,1.5,1,real,1,test\n");
  CHECK_THROWS_WITH_AS(load_csv(p), doctest::Contains("line 3"), Error);

  spit(p, header + "0.5,1.5,0,fake,0,train\n");
  CHECK_THROWS_WITH_AS(load_csv(p), doctest::Contains("line 2"), Error);

  spit(p, header + "abc,1.5,0,real,0,train\n");
  CHECK_THROWS_WITH_AS(load_csv(p), doctest::Contains("f0"), Error);

  spit(p, "x0,f1,class_id,domain,location_id,split\n");
  CHECK_THROWS_AS(load_csv(p), Error);

  CHECK_THROWS_AS(load_csv(dir / "missing.csv"), Error);
}

TEST_CASE("split and domain tokens round-trip") {
  for (Split s : kAllSplits) CHECK(parse_split(to_string(s)) == s);
  CHECK(parse_domain("real") == Domain::real);
  CHECK(parse_domain("synthetic") == Domain::synthetic);
  CHECK_THROWS_AS(parse_split("validation"), Error);
}

TEST_CASE("gap matrix has the requested condition number") {
  const Matrix a = make_gap_matrix(4, 0.3, 2.25);
  // rows 0-1 hold R·diag(1.5, 1/1.5); AᵀA restricted to the plane has eigenvalues 2.25 and 1/2.25
  const double t = a(0, 0) * a(0, 0) + a(1, 0) * a(1, 0) + a(0, 1) * a(0, 1) + a(1, 1) * a(1, 1);
  const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  CHECK(det == doctest::Approx(1.0));
  CHECK(t == doctest::Approx(2.25 + 1 / 2.25));
  CHECK(a(2, 2) == 1.0);
  CHECK(a(3, 3) == 1.0);
  CHECK(a(2, 0) == 0.0);
}
