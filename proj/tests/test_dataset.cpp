#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "tcrom/trajectory.hpp"
#include "test_util.hpp"

using namespace tcrom;
using testutil::random_matrix;

namespace {

Trajectory small_trajectory(int n = 12, std::uint64_t seed = 5) {
  Rng rng(seed);
  Trajectory t;
  t.snapshots = random_matrix(n, 10, rng);
  t.blocks = {{"q", 3}, {"v", 3}, {"sigma", 4}};
  t.dt = 0.25;
  t.seed = seed;
  t.nodes = 1;
  t.meta = {{"generator", "test"}};
  return t;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("split partitions the index range", "[dataset]") {
  for (std::uint64_t seed : {1ull, 7ull, 99ull}) {
    const SplitIndex s = split(150, 0.8, seed);
    REQUIRE(s.train.size() == 120);
    REQUIRE(s.test.size() == 30);
    std::set<int> seen(s.train.begin(), s.train.end());
    seen.insert(s.test.begin(), s.test.end());
    REQUIRE(seen.size() == 150);
    REQUIRE(*seen.begin() == 0);
    REQUIRE(*seen.rbegin() == 149);
    REQUIRE(std::is_sorted(s.train.begin(), s.train.end()));
    REQUIRE(std::is_sorted(s.test.begin(), s.test.end()));
  }
}

TEST_CASE("split is deterministic per seed and varies across seeds", "[dataset]") {
  const SplitIndex a = split(149, 0.8, 42);
  const SplitIndex b = split(149, 0.8, 42);
  const SplitIndex c = split(149, 0.8, 43);
  REQUIRE(a.train == b.train);
  REQUIRE(a.test == b.test);
  REQUIRE(a.train != c.train);
}

TEST_CASE("split keeps at least one item on each side", "[dataset]") {
  const SplitIndex lo = split(2, 0.01, 3);
  REQUIRE(lo.train.size() == 1);
  REQUIRE(lo.test.size() == 1);
  const SplitIndex hi = split(5, 0.999, 3);
  REQUIRE(hi.train.size() == 4);
  REQUIRE(hi.test.size() == 1);
  REQUIRE_THROWS_AS(split(1, 0.8, 0), ValidationError);
  REQUIRE_THROWS_AS(split(10, 0.0, 0), ValidationError);
  REQUIRE_THROWS_AS(split(10, 1.0, 0), ValidationError);
}

TEST_CASE("normalization gives pooled zero mean and unit variance per block", "[dataset]") {
  Trajectory t = small_trajectory(40);
  // Spread the blocks over very different scales.
  for (int i = 0; i < t.n_snapshots(); ++i) {
    double* row = t.snapshots.row_ptr(i);
    for (int j = 0; j < 3; ++j) row[j] = row[j] * 1e-4 + 7.0;
    for (int j = 6; j < 10; ++j) row[j] *= 300.0;
  }
  normalize(t);
  for (std::size_t b = 0; b < t.blocks.size(); ++b) {
    const int off = t.block_offset(b), w = t.blocks[b].width;
    double mean = 0.0, var = 0.0;
    const double cnt = double(t.n_snapshots()) * w;
    for (int i = 0; i < t.n_snapshots(); ++i)
      for (int j = 0; j < w; ++j) mean += t.snapshots(i, off + j);
    mean /= cnt;
    for (int i = 0; i < t.n_snapshots(); ++i)
      for (int j = 0; j < w; ++j) {
        const double d = t.snapshots(i, off + j) - mean;
        var += d * d;
      }
    var /= cnt;
    REQUIRE(std::fabs(mean) < 1e-10);
    REQUIRE(std::fabs(var - 1.0) < 1e-10);
  }
}

TEST_CASE("normalize and denormalize round-trip the raw data", "[dataset]") {
  Trajectory t = small_trajectory(25, 9);
  const Matrix raw = t.snapshots;
  normalize(t);
  REQUIRE(t.norm.active());
  denormalize(t);
  REQUIRE(!t.norm.active());
  for (std::size_t i = 0; i < raw.size(); ++i)
    REQUIRE(t.snapshots.data()[i] == Catch::Approx(raw.data()[i]).margin(1e-12));
}

TEST_CASE("repeated normalization composes into a single mapping", "[dataset]") {
  Trajectory t = small_trajectory(30, 11);
  const Matrix raw = t.snapshots;
  normalize(t);
  // Perturb scale then normalize again: stored shift/scale must still map
  // back to the original raw data.
  for (std::size_t i = 0; i < t.snapshots.size(); ++i) t.snapshots.data()[i] *= 1.0;
  normalize(t);
  denormalize(t);
  for (std::size_t i = 0; i < raw.size(); ++i)
    REQUIRE(t.snapshots.data()[i] == Catch::Approx(raw.data()[i]).margin(1e-10));
}

TEST_CASE("a constant block normalizes to zero with unit scale", "[dataset]") {
  Trajectory t = small_trajectory(15);
  for (int i = 0; i < t.n_snapshots(); ++i)
    for (int j = 0; j < 3; ++j) t.snapshots(i, j) = 4.5;
  normalize(t);
  REQUIRE(t.norm.scale[0] == 1.0);
  REQUIRE(t.norm.shift[0] == 4.5);
  for (int i = 0; i < t.n_snapshots(); ++i)
    for (int j = 0; j < 3; ++j) REQUIRE(t.snapshots(i, j) == 0.0);
}

TEST_CASE("trajectory files round-trip bitwise", "[dataset]") {
  Trajectory t = small_trajectory(17, 3);
  normalize(t);
  const std::string path = temp_path("tcrom_roundtrip.traj");
  write_trajectory(path, t);
  const Trajectory r = read_trajectory(path);
  REQUIRE(r.n_snapshots() == t.n_snapshots());
  REQUIRE(r.dim() == t.dim());
  REQUIRE(r.dt == t.dt);
  REQUIRE(r.seed == t.seed);
  REQUIRE(r.nodes == t.nodes);
  REQUIRE(r.blocks.size() == t.blocks.size());
  for (std::size_t b = 0; b < t.blocks.size(); ++b) {
    REQUIRE(r.blocks[b].name == t.blocks[b].name);
    REQUIRE(r.blocks[b].width == t.blocks[b].width);
  }
  REQUIRE(r.norm.shift == t.norm.shift);
  REQUIRE(r.norm.scale == t.norm.scale);
  REQUIRE(r.meta.at("generator") == "test");
  for (std::size_t i = 0; i < t.snapshots.size(); ++i)
    REQUIRE(r.snapshots.data()[i] == t.snapshots.data()[i]);
  std::remove(path.c_str());
}

TEST_CASE("header scan validates without reading the payload", "[dataset]") {
  // Sized like a full tire-scale state: 4140 nodes x 12 components.
  const int nodes = 4140, dim = 4140 * 12;
  Trajectory t;
  t.snapshots = Matrix(3, dim);
  for (std::size_t i = 0; i < t.snapshots.size(); ++i)
    t.snapshots.data()[i] = double(i % 97) * 0.25;
  t.blocks = {{"q", 3 * nodes}, {"v", 3 * nodes}, {"sigma", 6 * nodes}};
  t.nodes = nodes;
  t.dt = 0.01;
  const std::string path = temp_path("tcrom_scan.traj");
  write_trajectory(path, t);

  const TrajectoryInfo info = scan_trajectory(path);
  REQUIRE(info.dim == 49680);
  REQUIRE(info.n_snapshots == 3);
  REQUIRE(info.payload_bytes == 8ull * 3 * 49680);
  REQUIRE(info.header.at("nodes") == nodes);
  REQUIRE(info.header.at("blocks").size() == 3);

  // Truncate the payload: the scan must notice the size mismatch.
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
  REQUIRE_THROWS_WITH(scan_trajectory(path), Catch::Matchers::ContainsSubstring("payload"));
  std::remove(path.c_str());
}

TEST_CASE("csv ingestion honours the layout declaration", "[dataset]") {
  const std::string path = temp_path("tcrom_ingest.csv");
  {
    std::ofstream os(path);
    os << "q0,q1,v0,v1,s0,s1,s2,s3\n";  // header row is tolerated
    for (int r = 0; r < 6; ++r) {
      for (int c = 0; c < 8; ++c) os << (c ? "," : "") << r * 10 + c;
      os << "\n";
    }
  }
  const auto layout = parse_layout("q:1,v:1,sigma:2");
  const Trajectory t = ingest_csv(path, layout, 2, 0.5);
  REQUIRE(t.n_snapshots() == 6);
  REQUIRE(t.dim() == 8);
  REQUIRE(t.blocks[0].width == 2);
  REQUIRE(t.blocks[1].width == 2);
  REQUIRE(t.blocks[2].width == 4);
  REQUIRE(t.dt == 0.5);
  REQUIRE(t.snapshots(3, 5) == 35.0);
  std::remove(path.c_str());
}

TEST_CASE("csv errors carry the offending row and column", "[dataset]") {
  const std::string path = temp_path("tcrom_badcell.csv");
  {
    std::ofstream os(path);
    os << "1,2,3,4\n";
    os << "5,oops,7,8\n";
  }
  const auto layout = parse_layout("u:2");
  REQUIRE_THROWS_WITH(ingest_csv(path, layout, 2, 1.0),
                      Catch::Matchers::ContainsSubstring("row 2") &&
                          Catch::Matchers::ContainsSubstring("column 2"));
  {
    std::ofstream os(path);
    os << "1,2,3\n";
  }
  REQUIRE_THROWS_WITH(ingest_csv(path, layout, 2, 1.0),
                      Catch::Matchers::ContainsSubstring("row 1") &&
                          Catch::Matchers::ContainsSubstring("layout implies 4"));
  std::remove(path.c_str());
}

TEST_CASE("layout parsing rejects malformed specifications", "[dataset]") {
  REQUIRE(parse_layout("q:3,v:3,sigma:6").size() == 3);
  REQUIRE(parse_layout("a:1")[0].per_node_width == 1);
  REQUIRE_THROWS_AS(parse_layout(""), ValidationError);
  REQUIRE_THROWS_AS(parse_layout("q3"), ValidationError);
  REQUIRE_THROWS_AS(parse_layout("q:"), ValidationError);
  REQUIRE_THROWS_AS(parse_layout(":3"), ValidationError);
  REQUIRE_THROWS_AS(parse_layout("q:0"), ValidationError);
  REQUIRE_THROWS_AS(parse_layout("q:x"), ValidationError);
}

TEST_CASE("external loader dispatches on the file content", "[dataset]") {
  const std::string tpath = temp_path("tcrom_ext.traj");
  write_trajectory(tpath, small_trajectory(5));
  const Trajectory t = ingest_external(tpath, {}, 0, 1.0);
  REQUIRE(t.dim() == 10);
  std::remove(tpath.c_str());

  const std::string cpath = temp_path("tcrom_ext.csv");
  {
    std::ofstream os(cpath);
    os << "1,2\n3,4\n";
  }
  REQUIRE_THROWS_WITH(ingest_external(cpath, {}, 0, 1.0),
                      Catch::Matchers::ContainsSubstring("layout"));
  const Trajectory c = ingest_external(cpath, parse_layout("u:2"), 1, 1.0);
  REQUIRE(c.n_snapshots() == 2);
  std::remove(cpath.c_str());
}

TEST_CASE("block mse averages squared error over block entries and rows", "[dataset]") {
  Trajectory t = small_trajectory(4);
  Matrix approx = t.snapshots;
  // Shift block v by 2 on rows 1 and 3 only.
  approx(1, 3) += 2.0;
  approx(3, 5) += 2.0;
  const auto mse = block_mse(t, approx, {1, 3});
  REQUIRE(mse.size() == 3);
  REQUIRE(mse[0].first == "q");
  REQUIRE(mse[0].second == 0.0);
  // Two entries of 4.0 over 2 rows x 3 cols.
  REQUIRE(mse[1].second == Catch::Approx(8.0 / 6.0));
  REQUIRE(mse[2].second == 0.0);
}
