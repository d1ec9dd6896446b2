#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sdqi/cli.hpp"

namespace fs = std::filesystem;
using namespace sdqi;

namespace {

int call(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "sdqi");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("sdqi_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                       "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "rect.ini") << "; comment\n[domain]\nrectangle = 0 0 2 1\ndelta = 0.25\n"
                                       "[marks]\na = 0 0.5\nb = 2 0.5\n[run]\nseed = 7\nsamples = 500\n";
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string domain() const { return (dir / "rect.ini").string(); }
  fs::path dir;
};

}  // namespace

TEST(DomainFile, PolygonAndMarks) {
  std::istringstream in("[domain]\npolygon = 0 0; 3 0; 3 1; 0 1\ndelta = 0.5\n[marks]\na = 0 0.5\nb = 3 0.5\n"
                        "[model]\nform = loop\n");
  const DomainSpec s = parse_domain(in);
  ASSERT_EQ(s.polygon.size(), 4u);
  EXPECT_DOUBLE_EQ(s.delta, 0.5);
  ASSERT_TRUE(s.marked());
  EXPECT_DOUBLE_EQ(s.b->x, 3);
  EXPECT_EQ(s.params(0.5).form, WeightForm::loop_sqrt2l);
  EXPECT_EQ(s.params(0.5).bc, Bc::wired_on_arc);
  EXPECT_TRUE(s.build().has_marks());
}

TEST(DomainFile, Rejects) {
  std::istringstream no_shape("[domain]\ndelta = 1\n");
  EXPECT_THROW(parse_domain(no_shape), Error);
  std::istringstream one_mark("[domain]\nrectangle = 0 0 1 1\n[marks]\na = 0 0.5\n");
  EXPECT_THROW(parse_domain(one_mark), Error);
  std::istringstream bad_number("[domain]\nrectangle = 0 0 1 x\n");
  EXPECT_THROW(parse_domain(bad_number), Error);
  std::istringstream bad_form("[domain]\nrectangle = 0 0 1 1\n[model]\nform = ising\n");
  EXPECT_THROW(parse_domain(bad_form).params(1), Error);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(call({"--version"}), 0);
  EXPECT_EQ(call({}), 1);
  EXPECT_EQ(call({"observable"}), 1);
  EXPECT_EQ(call({"observable", "--domain", (dir / "missing.ini").string()}), 1);
  EXPECT_EQ(call({"observable", "--domain", domain(), "--sampler", "exact"}), 1);
}

TEST_F(Cli, ResiduesWritesExactRationals) {
  ASSERT_EQ(call({"residues", "--kmax", "5", "--mmax", "1", "--out-dir", dir.string()}), 0);
  const std::string csv = slurp(dir / "residues.csv");
  EXPECT_EQ(csv.rfind("# sdqi ", 0), 0u);
  EXPECT_NE(csv.find("k,m,res_plus,res_minus\n"), std::string::npos);
  EXPECT_NE(csv.find('/'), std::string::npos);  // some residues are proper fractions
}

TEST_F(Cli, TraceIsDeterministic) {
  ASSERT_EQ(call({"trace", "--domain", domain(), "--out-dir", dir.string(), "--out", "a.svg"}), 0);
  ASSERT_EQ(call({"trace", "--domain", domain(), "--out-dir", dir.string(), "--out", "b.svg"}), 0);
  EXPECT_EQ(slurp(dir / "a.svg"), slurp(dir / "b.svg"));
  ASSERT_EQ(call({"trace", "--domain", domain(), "--seed", "8", "--out-dir", dir.string(), "--out", "c.svg"}), 0);
  EXPECT_NE(slurp(dir / "a.svg"), slurp(dir / "c.svg"));
}

TEST_F(Cli, RunSectionSuppliesDefaults) {
  ASSERT_EQ(call({"observable", "--domain", domain(), "--threads", "1", "--out-dir", dir.string()}), 0);
  const std::string a = slurp(dir / "observable.csv");
  EXPECT_NE(a.find("seed=7\n"), std::string::npos);
  EXPECT_NE(a.find(",500\n"), std::string::npos);
  ASSERT_EQ(call({"observable", "--domain", domain(), "--seed", "9", "--threads", "1", "--out", "b.csv", "--out-dir",
                  dir.string()}),
            0);
  const std::string b = slurp(dir / "b.csv");
  EXPECT_NE(b.find("seed=9\n"), std::string::npos);
  EXPECT_NE(a.substr(0, a.find('\n')), b.substr(0, b.find('\n')));  // config hash differs
}

TEST_F(Cli, DirichletPolynomial) {
  std::ofstream(dir / "bc.ini") << "[bc]\ntype = polynomial\nc20 = 1\nc02 = -1\n";
  ASSERT_EQ(call({"dirichlet", "--domain", domain(), "--bc", (dir / "bc.ini").string(), "--out-dir", dir.string()}), 0);
  std::ofstream(dir / "bad.ini") << "[bc]\ntype = polynomial\nx = 1\n";
  EXPECT_EQ(call({"dirichlet", "--domain", domain(), "--bc", (dir / "bad.ini").string(), "--out-dir", dir.string()}), 1);
}
