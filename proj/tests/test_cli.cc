#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ccn/codeblock.h"
#include "ccn/model.h"
#include "ccn/synthetic.h"

namespace ccn {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run(const std::string& args) {
  const std::string cmd = std::string(CCN_BINARY) + " " + args + " 2>&1";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ccn_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, Dop) {
  CliResult r = run("dop --m 8 --h 32 --w 32");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("4096/35"), std::string::npos) << r.out;
  r = run("dop --m 8 --h 32 --w 32 --r 2");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("4096/19"), std::string::npos) << r.out;  // 8192 / (8 + 16 + 16 - 2)
}

TEST_F(Cli, Masks) {
  const CliResult r = run("masks --order zigzag3d --s 3 --m 2 --layer input --schedule-h 2 --schedule-w 3");
  EXPECT_EQ(r.code, 0);
  EXPECT_FALSE(r.out.empty());
  EXPECT_EQ(run("masks --order nonsense").code, 1);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("dop --m 8").code, 1);
  EXPECT_EQ(run("encode --model x").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, TrainEncodeDecodeEval) {
  ASSERT_EQ(run("synth --out " + path("") + " --count 3 --size 12 --seed 4").code, 0);
  ASSERT_TRUE(fs::exists(path("img0000.pgm")));
  const std::string model = path("m.ccnm");
  CliResult r = run("train-lossless --data " + path("") + " --out " + model +
              " --light --epochs 2 --batch 2 --lr 1e-3");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(load_model(model).mode, ModelMode::kBernoulli);

  for (int grid : {1, 2}) {
    const std::string coded = path("a.ccnb");
    const std::string back = path("back.pgm");
    r = run("encode --model " + model + " --in " + path("img0001.pgm") + " --out " + coded +
            " --r " + std::to_string(grid));
    ASSERT_EQ(r.code, 0) << r.out;
    r = run("decode --model " + model + " --in " + coded + " --out " + back);
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(read_pgm(back), read_pgm(path("img0001.pgm")));
  }

  const std::string report = path("report.txt");
  fs::remove(path("a.ccnb"));
  fs::remove(path("back.pgm"));
  r = run("eval --model " + model + " --data " + path("") + " --report " + report);
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream in(report);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_NE(ss.str().find("mismatches=0"), std::string::npos) << ss.str();
}

TEST_F(Cli, TrainAndEvalMog) {
  const std::string model = path("mog.ccnm");
  CliResult r = run("train-mog --m 2 --l 4 --c 2 --n 2 --s 3 --count 4 --height 8 --width 8 "
              "--epochs 2 --batch 2 --out " + model);
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(load_model(model).mode, ModelMode::kMog);
  r = run("eval --model " + model + " --count 2 --height 8 --width 8 --report " + path("r.txt"));
  EXPECT_EQ(r.code, 0) << r.out;
}

TEST_F(Cli, FormatErrors) {
  {
    std::ofstream(path("junk.ccnm")) << "not a model";
  }
  GrayImage img(4, 4);
  write_pgm(path("x.pgm"), img);
  EXPECT_EQ(run("encode --model " + path("junk.ccnm") + " --in " + path("x.pgm") +
                " --out " + path("y")).code, 2);
  {
    std::ofstream(path("bad.pgm")) << "P2\n1 1\n255\n0\n";
  }
  ASSERT_EQ(run("synth --out " + path("") + " --count 1 --size 8").code, 0);
  ASSERT_EQ(run("train-lossless --data " + path("") + " --out " + path("m.ccnm") +
                " --light --epochs 1").code, 2);  // bad.pgm sits in the corpus
  fs::remove(path("bad.pgm"));
  ASSERT_EQ(run("train-lossless --data " + path("") + " --out " + path("m.ccnm") +
                " --light --epochs 1").code, 0);
  ASSERT_EQ(run("encode --model " + path("m.ccnm") + " --in " + path("x.pgm") + " --out " +
                path("x.ccnb")).code, 0);
  // Corrupt body: flip the magic.
  std::fstream f(path("x.ccnb"), std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(0);
  f.put('X');
  f.close();
  EXPECT_EQ(run("decode --model " + path("m.ccnm") + " --in " + path("x.ccnb") + " --out " +
                path("z.pgm")).code, 2);
  EXPECT_EQ(run("decode --model " + path("m.ccnm") + " --in " + path("missing") + " --out " +
                path("z.pgm")).code, 1);
}

}  // namespace
}  // namespace ccn
