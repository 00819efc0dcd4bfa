#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dirpoly/dataset.hpp"
#include "dirpoly/error.hpp"
#include "test_util.hpp"

namespace dirpoly {
namespace {

namespace fs = std::filesystem;

using testing::scratch;
using testing::slurp;

void write(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

void write_minimal(const fs::path& dir) {
  write(dir / "manifest.json",
        R"({"num_nodes": 3, "num_edges": 2, "feature_dim": 2, "num_classes": 2,
            "task": "multiclass-accuracy", "num_splits": 1})");
  write(dir / "edges.csv", "0,1\n1,2\n");
  write(dir / "features.csv", "0.5,1\n-1,2.25\n3,0\n");
  write(dir / "labels.csv", "0\n1\n0\n");
  write(dir / "splits.csv", "0,0,train\n0,1,val\n0,2,test\n");
}

Dataset random_dataset(Rng& rng) {
  Dataset ds;
  const std::size_t n = 1 + rng() % 25;
  ds.graph = testing::random_graph(n, rng() % (3 * n), rng);
  const std::size_t d = 1 + rng() % 4;
  ds.features = Matrix(n, d);
  for (double& v : ds.features.values()) v = uniform(rng, -1e3, 1e3) * std::pow(10.0, int(rng() % 20) - 10);
  ds.num_classes = 2 + static_cast<int>(rng() % 3);
  ds.labels = testing::random_labels(n, ds.num_classes, rng);
  ds.task = ds.num_classes == 2 && rng() % 2 ? Task::kBinaryRocAuc : Task::kMulticlassAccuracy;
  const std::size_t splits = rng() % 3;
  for (std::size_t s = 0; s < splits; ++s) {
    Split sp{Mask(n), Mask(n), Mask(n)};
    for (std::size_t v = 0; v < n; ++v) {
      switch (rng() % 4) {
        case 0: sp.train[v] = 1; break;
        case 1: sp.val[v] = 1; break;
        case 2: sp.test[v] = 1; break;
        default: break;
      }
    }
    ds.splits.push_back(sp);
  }
  return ds;
}

TEST(DatasetTest, LoadsMinimalDirectory) {
  auto dir = scratch("minimal");
  write_minimal(dir);
  Dataset ds = load_dataset(dir);
  EXPECT_EQ(ds.num_nodes(), 3u);
  EXPECT_EQ(ds.graph.num_edges(), 2u);
  EXPECT_EQ(ds.features(1, 1), 2.25);
  EXPECT_EQ(ds.labels, (std::vector<int>{0, 1, 0}));
  ASSERT_EQ(ds.splits.size(), 1u);
  EXPECT_EQ(ds.splits[0].train, (Mask{1, 0, 0}));
  EXPECT_EQ(ds.splits[0].test, (Mask{0, 0, 1}));
}

TEST(DatasetTest, RowCountMismatch) {
  auto dir = scratch("rowcount");
  write_minimal(dir);
  write(dir / "manifest.json",
        R"({"num_nodes": 5, "num_edges": 2, "feature_dim": 2, "num_classes": 2,
            "task": "multiclass-accuracy", "num_splits": 1})");
  write(dir / "features.csv", "0,0\n0,0\n0,0\n0,0\n");
  try {
    load_dataset(dir);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("features.csv has 4 rows"), std::string::npos) << e.what();
  }
}

TEST(DatasetTest, DistinctErrors) {
  auto dir = scratch("errors");
  write_minimal(dir);
  fs::remove(dir / "labels.csv");
  try {
    load_dataset(dir);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("missing file"), std::string::npos);
  }
  write(dir / "labels.csv", "0\n7\n0\n");
  try {
    load_dataset(dir);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("out of class range"), std::string::npos);
  }
}

TEST(DatasetTest, OverlappingSplitRejected) {
  auto dir = scratch("overlap");
  write_minimal(dir);
  write(dir / "splits.csv", "0,0,train\n0,0,test\n");
  EXPECT_THROW(load_dataset(dir), FormatError);
}

TEST(DatasetTest, BinaryTaskNeedsTwoClasses) {
  Rng rng(1);
  Dataset ds = random_dataset(rng);
  ds.num_classes = 3;
  ds.task = Task::kBinaryRocAuc;
  EXPECT_THROW(ds.validate(), FormatError);
}

TEST(DatasetTest, RoundTripIsBitExact) {
  Rng rng(42);
  for (int i = 0; i < 10; ++i) {
    Dataset ds = random_dataset(rng);
    auto a = scratch("rt_a");
    save_dataset(ds, a);
    Dataset back = load_dataset(a);
    EXPECT_EQ(back, ds);
    auto b = scratch("rt_b");
    save_dataset(back, b);
    for (const char* f : {"manifest.json", "edges.csv", "features.csv", "labels.csv", "splits.csv"}) {
      EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
  }
}

TEST(DatasetTest, DoubleFormattingRoundTrips) {
  for (double v : {0.1, -1e-300, 1.0 / 3.0, 6.02214076e23, 5e-324}) {
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_THROW(parse_double("1.5x"), FormatError);
}

TEST(DatasetTest, PermutationMovesEverything) {
  Rng rng(9);
  Dataset ds = random_dataset(rng);
  auto perm = testing::random_permutation(ds.num_nodes(), rng);
  Dataset p = permute_dataset(ds, perm);
  for (std::size_t v = 0; v < ds.num_nodes(); ++v) {
    EXPECT_EQ(p.labels[perm[v]], ds.labels[v]);
    EXPECT_EQ(p.features(perm[v], 0), ds.features(v, 0));
  }
  EXPECT_EQ(p.graph.num_edges(), ds.graph.num_edges());
}

}  // namespace
}  // namespace dirpoly
