#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sys/wait.h>

#include "test_util.hpp"

namespace {

namespace fs = std::filesystem;
using dirpoly::testing::scratch;
using dirpoly::testing::slurp;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(const std::string& args, const fs::path& dir) {
  const fs::path err_file = dir / "stderr.txt";
  const std::string cmd = "cd '" + dir.string() + "' && '" DIRPOLY_CLI "' " + args + " 2>'" +
                          err_file.string() + "'";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out, slurp(err_file)};
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

const char* kSpec = R"({"num_nodes": 300, "num_classes": 3, "feature_dim": 6, "feature_noise": 0.8,
 "affinity": [[0.1, 1, 0.2], [0.2, 0.1, 1], [1, 0.2, 0.1]], "expected_out_degree": 4,
 "label_mode": "in_neighbor_majority", "num_splits": 2, "seed": 3})";

const char* kRun = "model=dir-poly\ndataset=ds\nmax_epochs=15\npatience=5\nseeds=0,1,2\nhidden=8\nlayers=2\n";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = scratch(::testing::UnitTest::GetInstance()->current_test_info()->name());
    write(dir_ / "spec.json", kSpec);
    write(dir_ / "run.cfg", kRun);
    ASSERT_EQ(cli("dataset gen --spec spec.json --out ds", dir_).code, 0);
  }
  fs::path dir_;
};

TEST_F(Cli, InspectPrintsManifestAndHomophily) {
  Result r = cli("dataset inspect ds", dir_);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("num_nodes=300\n"), std::string::npos);
  EXPECT_NE(r.out.find("matrix,homophily\nA,"), std::string::npos);
  EXPECT_NE(r.out.find("\nA_AT,"), std::string::npos);
}

TEST_F(Cli, TrainWritesReportsAndIsDeterministic) {
  Result a = cli("train --config run.cfg --out a", dir_);
  ASSERT_EQ(a.code, 0) << a.err;
  Result b = cli("train --config run.cfg --out b --parallel-seeds", dir_);
  ASSERT_EQ(b.code, 0) << b.err;
  for (const char* f : {"report.json", "report.csv", "checkpoint.json", "checkpoint.json.bin"}) {
    ASSERT_TRUE(fs::exists(dir_ / "a" / f)) << f;
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
  EXPECT_NE(slurp(dir_ / "a" / "config.resolved").find("out=a\n"), std::string::npos);
  EXPECT_NE(slurp(dir_ / "a" / "report.csv").find("dir-poly,ds,accuracy,"), std::string::npos);
}

TEST_F(Cli, ResolvedConfigRerunsIdentically) {
  ASSERT_EQ(cli("train --config run.cfg --out a", dir_).code, 0);
  ASSERT_EQ(cli("train --config a/config.resolved --out b", dir_).code, 0);
  EXPECT_EQ(slurp(dir_ / "a" / "report.json"), slurp(dir_ / "b" / "report.json"));
}

TEST_F(Cli, SeedOverrideTrainsOneSeed) {
  Result r = cli("train --config run.cfg --out s --seed-override 7", dir_);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp(dir_ / "s" / "report.csv").find(",1\n"), std::string::npos);
  EXPECT_NE(slurp(dir_ / "s" / "config.resolved").find("seeds=7\n"), std::string::npos);
}

TEST_F(Cli, EvalReproducesFirstSeedTest) {
  ASSERT_EQ(cli("train --config run.cfg --out a --seed-override 0", dir_).code, 0);
  Result r = cli("eval --checkpoint a/checkpoint.json --data ds --split 0", dir_);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("accuracy=", 0), 0u);
  const std::string report = slurp(dir_ / "a" / "report.json");
  const std::string value = r.out.substr(9, r.out.size() - 10);
  EXPECT_NE(report.find("\"test\": " + value), std::string::npos) << value;
}

TEST_F(Cli, EvalRejectsMismatchedDataset) {
  ASSERT_EQ(cli("train --config run.cfg --out a --seed-override 0", dir_).code, 0);
  std::string other = kSpec;
  other.replace(other.find("\"feature_dim\": 6"), 16, "\"feature_dim\": 7");
  write(dir_ / "other.json", other);
  ASSERT_EQ(cli("dataset gen --spec other.json --out other", dir_).code, 0);
  Result r = cli("eval --checkpoint a/checkpoint.json --data other", dir_);
  EXPECT_NE(r.code, 0);
  EXPECT_EQ(r.err.rfind("error[config]: ", 0), 0u) << r.err;
}

TEST_F(Cli, ErrorsAreOneLineOnStderr) {
  write(dir_ / "bad.cfg", std::string(kRun) + "colour=blue\n");
  Result r = cli("train --config bad.cfg", dir_);
  EXPECT_NE(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(r.err, "error[config]: unknown config key 'colour'\n");
  Result missing = cli("dataset inspect nowhere", dir_);
  EXPECT_NE(missing.code, 0);
  EXPECT_EQ(std::count(missing.err.begin(), missing.err.end(), '\n'), 1);
}

TEST_F(Cli, PolycheckTable) {
  Result r = cli("polycheck --config run.cfg", dir_);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("gcn,1,1,true\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("poly L=1,2,2,true\n"), std::string::npos) << r.out;
}

TEST_F(Cli, GradcheckDefaultConfigPasses) {
  write(dir_ / "empty.cfg", "");
  Result r = cli("gradcheck --config empty.cfg", dir_);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("\nmax,"), std::string::npos);
}

}  // namespace
