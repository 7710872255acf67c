#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "opforge/campaign.hpp"
#include "opforge/dataset_io.hpp"

using namespace opforge;

namespace {

GridSpec fast_grid() {
  GridSpec g;
  g.nx = 48;
  g.nz = 12;
  g.dx = 0.1;
  g.dz = 0.1;
  return g;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

// =============================================================================
// lhs_sample
// =============================================================================

TEST_CASE("lhs places exactly one sample per stratum") {
  LhsDesign design;
  design.n_samples = 4;
  for (auto& r : design.bounds.ranges) r = Range{1.0, 2.0};  // strictly positive
  design.seed = 9;
  auto samples = lhs_sample(design);
  REQUIRE(samples.size() == 4);

  for (std::size_t col = 0; col < 5; ++col) {
    std::vector<double> vals;
    for (const auto& s : samples) vals.push_back(params_to_array(s)[col]);
    std::sort(vals.begin(), vals.end());
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(vals[i] >= 1.0 + 0.25 * static_cast<double>(i));
      CHECK(vals[i] < 1.0 + 0.25 * static_cast<double>(i + 1));
    }
  }
}

TEST_CASE("lhs with Table-1 bounds keeps all 500 samples inside the bounds") {
  LhsDesign design;
  design.n_samples = 500;
  design.seed = 31;
  auto samples = lhs_sample(design);
  REQUIRE(samples.size() == 500);
  for (const auto& s : samples) {
    CHECK((s.power >= 250.0 && s.power <= 400.0));
    CHECK((s.speed >= 0.004 && s.speed <= 0.020));
    CHECK((s.radius >= 0.25 && s.radius <= 0.40));
    CHECK((s.efficiency >= 0.3 && s.efficiency <= 0.4));
    CHECK((s.scaling >= 1.0 && s.scaling <= 2.0));
  }
}

TEST_CASE("lhs marginal histograms have one sample per stratum at n=500") {
  LhsDesign design;
  design.n_samples = 500;
  design.seed = 77;
  auto samples = lhs_sample(design);
  for (std::size_t col = 0; col < 5; ++col) {
    const auto [lo, hi] = design.bounds[col];
    std::vector<int> histogram(design.n_samples, 0);
    for (const auto& s : samples) {
      const double u = (params_to_array(s)[col] - lo) / (hi - lo);
      auto bin = static_cast<std::size_t>(u * static_cast<double>(design.n_samples));
      if (bin >= design.n_samples) bin = design.n_samples - 1;
      histogram[bin] += 1;
    }
    for (int count : histogram) REQUIRE(count == 1);
  }
}

TEST_CASE("lhs is deterministic in the seed") {
  LhsDesign design;
  design.n_samples = 32;
  design.seed = 123;
  auto a = lhs_sample(design);
  auto b = lhs_sample(design);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(params_to_array(a[i]) == params_to_array(b[i]));
}

TEST_CASE("lhs rejects invalid designs") {
  LhsDesign empty;
  empty.n_samples = 0;
  CHECK_THROWS_AS(lhs_sample(empty), std::invalid_argument);
  LhsDesign inverted;
  inverted.bounds[0] = Range{5.0, 2.0};
  CHECK_THROWS_AS(lhs_sample(inverted), std::invalid_argument);
}

// =============================================================================
// run_campaign
// =============================================================================

TEST_CASE("campaign records are identical across worker counts") {
  LhsDesign design;
  design.n_samples = 6;
  design.seed = 5;
  auto samples = lhs_sample(design);
  auto serial = run_campaign(samples, MaterialProps{}, fast_grid(), 1);
  auto parallel = run_campaign(samples, MaterialProps{}, fast_grid(), 8);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].v_bead == parallel[i].v_bead);
    CHECK(serial[i].t_mp == parallel[i].t_mp);
    CHECK(serial[i].melted == parallel[i].melted);
  }
}

TEST_CASE("campaign keeps a forced non-melting sample in order") {
  LhsDesign design;
  design.n_samples = 9;
  design.seed = 6;
  auto samples = lhs_sample(design);
  ProcessParams cold;
  cold.power = 1.0;  // cannot melt
  samples.insert(samples.begin() + 4, cold);
  auto records = run_campaign(samples, MaterialProps{}, fast_grid(), 4);
  REQUIRE(records.size() == 10);
  CHECK_FALSE(records[4].melted);
  std::size_t melted = 0;
  for (const auto& r : records) melted += r.melted ? 1 : 0;
  CHECK(melted == 9);
}

TEST_CASE("empty campaign yields an empty record list") {
  CHECK(run_campaign({}, MaterialProps{}, fast_grid(), 4).empty());
}

// =============================================================================
// filter_non_melting
// =============================================================================

TEST_CASE("filter retains exactly the melted records") {
  std::vector<SimulationRecord> records(5);
  for (auto& r : records) r.melted = true;
  auto all = filter_non_melting(records);
  CHECK(all.removed == 0);
  CHECK(all.retained.size() == 5);

  records[1].melted = false;
  records[4].melted = false;
  auto mixed = filter_non_melting(records);
  CHECK(mixed.removed == 2);
  CHECK(mixed.retained.size() == 3);

  // recount oracle: removed equals the brute-force count of non-melted flags
  std::size_t recount = 0;
  for (const auto& r : records)
    if (!r.melted) ++recount;
  CHECK(mixed.removed == recount);

  for (auto& r : records) r.melted = false;
  auto none = filter_non_melting(records);
  CHECK(none.retained.empty());
  CHECK(none.removed == 5);
}

// =============================================================================
// scaler
// =============================================================================

TEST_CASE("scaler on the toy set {1,3} gives mean 2, std 1") {
  auto sc = fit_channels({{1.0, 3.0}});
  CHECK(sc.mean[0] == 2.0);
  CHECK(sc.stddev[0] == 1.0);  // population convention
  CHECK(sc.transform(1.0, 0) == -1.0);
  CHECK(sc.transform(3.0, 0) == 1.0);
}

TEST_CASE("scaler rejects constant channels") {
  CHECK_THROWS_AS(fit_channels({{2.0, 2.0, 2.0}}), std::invalid_argument);
}

TEST_CASE("scaler transform then invert is identity within 1e-12") {
  auto sc = fit_channels({{0.3, 1.9, -4.2, 0.01}, {100.0, 250.0, 175.0, 400.0}});
  for (std::size_t ch = 0; ch < 2; ++ch)
    for (double x : {-3.7, 0.0, 55.5, 1e6})
      CHECK(sc.invert(sc.transform(x, ch), ch) ==
            Catch::Approx(x).margin(1e-12 * std::max(1.0, std::abs(x))));
}

TEST_CASE("fitted training channels standardize to mean 0, std 1") {
  std::vector<SimulationRecord> records(4);
  std::mt19937_64 rng(17);
  for (auto& r : records) {
    r.melted = true;
    for (int i = 0; i < 10; ++i) {
      r.v_bead.push_back(uniform_in(rng, 0.0, 2.0));
      r.t_mp.push_back(uniform_in(rng, 300.0, 5000.0));
    }
  }
  auto sc = fit_scaler_series(records, {0, 1, 2, 3});
  for (std::size_t ch = 0; ch < 2; ++ch) {
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (const auto& r : records)
      for (double x : (ch == 0 ? r.v_bead : r.t_mp)) {
        const double y = sc.transform(x, ch);
        sum += y;
        sq += y * y;
        ++n;
      }
    const double m = sum / static_cast<double>(n);
    const double sd = std::sqrt(sq / static_cast<double>(n) - m * m);
    CHECK(std::abs(m) <= 1e-10);
    CHECK(std::abs(sd - 1.0) <= 1e-10);
  }
}

// =============================================================================
// split
// =============================================================================

TEST_CASE("482 records split 385/48/49") {
  auto s = split_indices(482, {0.8, 0.1, 0.1}, 99);
  CHECK(s.train.size() == 385);
  CHECK(s.val.size() == 48);
  CHECK(s.test.size() == 49);

  std::vector<char> seen(482, 0);
  for (auto i : s.train) seen[i] += 1;
  for (auto i : s.val) seen[i] += 1;
  for (auto i : s.test) seen[i] += 1;
  for (char c : seen) REQUIRE(c == 1);  // disjoint and covering
}

TEST_CASE("degenerate split ratios are rejected") {
  CHECK_THROWS_AS(split_indices(100, {1.0, 0.0, 0.0}, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_indices(100, {0.5, 0.2, 0.2}, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_indices(2, {0.8, 0.1, 0.1}, 1), std::invalid_argument);
}

TEST_CASE("split is deterministic in the seed") {
  auto a = split_indices(100, {0.8, 0.1, 0.1}, 7);
  auto b = split_indices(100, {0.8, 0.1, 0.1}, 7);
  CHECK(a.train == b.train);
  CHECK(a.val == b.val);
  CHECK(a.test == b.test);
  auto c = split_indices(100, {0.8, 0.1, 0.1}, 8);
  CHECK(a.train != c.train);
}

// =============================================================================
// dataset persistence
// =============================================================================

TEST_CASE("dataset round-trips through the file bit-exactly") {
  LhsDesign design;
  design.n_samples = 8;
  design.seed = 404;
  auto samples = lhs_sample(design);
  auto records = run_campaign(samples, MaterialProps{}, fast_grid(), 2);
  auto filtered = filter_non_melting(records);
  REQUIRE(filtered.retained.size() >= 4);

  Dataset ds = split_dataset(std::move(filtered.retained), {0.5, 0.25, 0.25}, 11);
  ds.removed_count = filtered.removed;
  ds.grid = fast_grid();

  const auto path = temp_path("opforge_ds_roundtrip.jsonl");
  save_dataset(path, ds);
  Dataset back = load_dataset(path);

  REQUIRE(back.records.size() == ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    CHECK(back.records[i].v_bead == ds.records[i].v_bead);      // bitwise
    CHECK(back.records[i].t_mp == ds.records[i].t_mp);          // bitwise
    CHECK(back.records[i].time_grid == ds.records[i].time_grid);
    CHECK(params_to_array(back.records[i].params) ==
          params_to_array(ds.records[i].params));
  }
  CHECK(back.scaler.mean == ds.scaler.mean);
  CHECK(back.scaler.stddev == ds.scaler.stddev);
  CHECK(back.split.train == ds.split.train);
  CHECK(back.split.val == ds.split.val);
  CHECK(back.split.test == ds.split.test);
  CHECK(back.removed_count == ds.removed_count);

  // saving the loaded dataset reproduces the file byte-for-byte
  const auto path2 = temp_path("opforge_ds_roundtrip2.jsonl");
  save_dataset(path2, back);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  std::remove(path.c_str());
  std::remove(path2.c_str());
}
