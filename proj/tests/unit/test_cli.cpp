#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "kpsec/cli.hpp"
#include "kpsec/netmodel.hpp"

namespace fs = std::filesystem;
using kpsec::cli::run;

namespace {

struct Result {
  int status;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = run(args, out, err);
  return {status, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> v;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("kpsec-cli-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "-" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string make_net(std::size_t n = 100, std::size_t k = 10, std::uint64_t seed = 1) {
    const auto file = path("net.txt");
    const auto r = invoke({"topo", "--n", std::to_string(n), "--k", std::to_string(k), "--seed",
                           std::to_string(seed), "--out", file});
    EXPECT_EQ(r.status, 0) << r.err;
    return file;
  }

  fs::path dir_;
};

}  // namespace

TEST(CliLists, RealLists) {
  using kpsec::cli::parse_real_list;
  EXPECT_EQ(parse_real_list("0.1,0.2"), (std::vector<double>{0.1, 0.2}));
  const auto r = parse_real_list("0.05:0.6:0.05");
  ASSERT_EQ(r.size(), 12u);
  EXPECT_DOUBLE_EQ(r.front(), 0.05);
  EXPECT_DOUBLE_EQ(r.back(), 0.6);
  EXPECT_DOUBLE_EQ(r[2], 0.15);
  EXPECT_EQ(parse_real_list("0:1:0.5,2"), (std::vector<double>{0, 0.5, 1, 2}));
  EXPECT_THROW(parse_real_list("0.1,x"), std::invalid_argument);
  EXPECT_THROW(parse_real_list("0:1"), std::invalid_argument);
  EXPECT_THROW(parse_real_list("0:1:0"), std::invalid_argument);
}

TEST(CliLists, CountLists) {
  using kpsec::cli::parse_count_list;
  EXPECT_EQ(parse_count_list("1-4"), (std::vector<std::size_t>{1, 2, 3, 4}));
  EXPECT_EQ(parse_count_list("5,1-2"), (std::vector<std::size_t>{5, 1, 2}));
  EXPECT_THROW(parse_count_list("4-1"), std::invalid_argument);
  EXPECT_THROW(parse_count_list("-1"), std::invalid_argument);
  EXPECT_THROW(parse_count_list("1.5"), std::invalid_argument);
}

TEST_F(CliTest, TopoDefaultsWriteOneRowPerNode) {
  const auto r = invoke({"topo"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 102u);
  EXPECT_EQ(ls[0], "# kpsec-sim v" + std::string(kpsec::cli::version()) + " cmd=topo seed=1");
  EXPECT_EQ(ls[1], "100 10 300.000000 100.000000 1");
  std::istringstream in(r.out);
  const auto net = kpsec::read_network(in);
  EXPECT_EQ(net.params.n, 100u);
}

TEST_F(CliTest, RerunsAreByteIdentical) {
  const auto a = invoke({"topo", "--seed", "5", "--out", path("a.txt")});
  const auto b = invoke({"topo", "--seed", "5", "--out", path("b.txt")});
  ASSERT_EQ(a.status, 0);
  ASSERT_EQ(b.status, 0);
  EXPECT_TRUE(a.out.empty());
  EXPECT_EQ(slurp(path("a.txt")), slurp(path("b.txt")));
  const auto net = path("a.txt");
  const auto p1 = invoke({"paths", "--net", net, "--random-pairs", "50"});
  const auto p2 = invoke({"paths", "--net", net, "--random-pairs", "50"});
  ASSERT_EQ(p1.status, 0) << p1.err;
  EXPECT_EQ(p1.out, p2.out);
  EXPECT_EQ(lines(p1.out).size(), 52u);
}

TEST_F(CliTest, InvalidTopologyIsAnError) {
  const auto r = invoke({"topo", "--n", "1"});
  EXPECT_NE(r.status, 0);
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(r.err.rfind("kpsec-sim: error: ", 0), 0u) << r.err;
  EXPECT_EQ(lines(r.err).size(), 1u);
}

TEST_F(CliTest, UnknownCommandAndMissingFlags) {
  EXPECT_EQ(invoke({"frobnicate"}).status, 2);
  EXPECT_EQ(invoke({"paths"}).status, 2);
  EXPECT_EQ(invoke({"topo", "--n", "abc"}).status, 2);
  EXPECT_EQ(invoke({"--help"}).status, 0);
  EXPECT_EQ(invoke({"--version"}).status, 0);
}

TEST_F(CliTest, PathsReportsUnreachablePairs) {
  const auto net = make_net(30, 1);
  const auto r = invoke({"paths", "--net", net, "--pairs", "0:1,2:3"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 4u);
  EXPECT_EQ(ls[1], "pair_id,s,d,n_paths,lengths");
  EXPECT_EQ(ls[2].rfind("0,0,1,", 0), 0u);
  EXPECT_EQ(invoke({"paths", "--net", net, "--pairs", "0:0"}).status, 1);
  EXPECT_EQ(invoke({"paths", "--net", net, "--pairs", "0:99"}).status, 1);
}

TEST_F(CliTest, PathsWithMissingFileFails) {
  const auto r = invoke({"paths", "--net", path("missing.txt")});
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("missing.txt"), std::string::npos);
}

TEST_F(CliTest, ReliabilityAnalyticOnly) {
  const auto r = invoke({"reliability", "--p", "0.1", "--de", "3", "--rho", "1-2", "--trials", "0"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 4u);
  EXPECT_EQ(ls[1], "p,de,rho,R_analytic");
  EXPECT_EQ(ls[2], "0.1,3,1,0.729");
  EXPECT_EQ(ls[3], "0.1,3,2,0.926559");
}

TEST_F(CliTest, ReliabilityWithMonteCarlo) {
  const auto r = invoke({"reliability", "--p", "0.05,0.1", "--de", "1-2", "--rho", "2",
                         "--trials", "2000", "--jobs", "2"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 6u);
  EXPECT_EQ(ls[1], "p,de,rho,R_analytic,R_mc,stderr,trials");
  EXPECT_EQ(ls[2].substr(ls[2].rfind(',')), ",2000");
  const auto again = invoke({"reliability", "--p", "0.05,0.1", "--de", "1-2", "--rho", "2",
                             "--trials", "2000", "--jobs", "1"});
  EXPECT_EQ(r.out.substr(r.out.find('\n')), again.out.substr(again.out.find('\n')));
}

TEST_F(CliTest, ReliabilityRejectsBadProbability) {
  const auto r = invoke({"reliability", "--p", "1.5", "--trials", "0"});
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("kpsec-sim: error:"), std::string::npos);
}

TEST_F(CliTest, SimulateHonestSessions) {
  const auto net = make_net();
  const auto r = invoke({"simulate", "--net", net, "--group", "toy", "--sessions", "100",
                         "--rho", "3", "--theta", "2"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 102u);
  EXPECT_EQ(ls[1], "seed,n,k,rho,theta,success,reason,de_total,kx_bytes,kx_rounds,data_hops");
  for (std::size_t i = 2; i < ls.size(); ++i) {
    EXPECT_NE(ls[i].find(",100,10,3,2,1,none,"), std::string::npos) << ls[i];
  }
}

TEST_F(CliTest, SimulateWithSubstitutingAdversary) {
  const auto net = make_net();
  const auto r = invoke({"simulate", "--net", net, "--group", "toy", "--sessions", "20",
                         "--adversary", "fraction", "--adversary-fraction", "0.5", "--capability",
                         "substitute"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(lines(r.out).size(), 22u);
  EXPECT_EQ(invoke({"simulate", "--net", net, "--adversary", "count", "--adversary-count", "99"})
                .status,
            1);
  EXPECT_EQ(invoke({"simulate", "--net", net, "--capability", "x"}).status, 1);
  EXPECT_EQ(invoke({"simulate", "--net", net, "--group", "rsa"}).status, 1);
  EXPECT_EQ(invoke({"simulate", "--net", net, "--rho", "2", "--theta", "3"}).status, 1);
}

TEST_F(CliTest, AttackSweepWritesCrossing) {
  const auto r = invoke({"attack-sweep", "--n", "80", "--k", "6", "--fractions", "0:0.6:0.2",
                         "--trials", "50", "--theta-ratio", "0.5", "--jobs", "2"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 7u);
  EXPECT_EQ(ls[1], "fraction,trials,mean_secure_paths,std_secure_paths,attack_success_rate");
  EXPECT_EQ(ls[2].rfind("0,50,", 0), 0u);
  EXPECT_EQ(ls[6].rfind("# crossing_fraction=", 0), 0u);
  EXPECT_EQ(invoke({"attack-sweep", "--rho", "4", "--theta", "5"}).status, 1);
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
  const auto cfg = path("run.cfg");
  std::ofstream(cfg) << "# comment\nn = 40\nk=4\n\nseed=9\n";
  const auto from_file = invoke({"topo", "--config", cfg});
  ASSERT_EQ(from_file.status, 0) << from_file.err;
  EXPECT_EQ(lines(from_file.out)[1], "40 4 300.000000 100.000000 9");
  const auto override_ = invoke({"topo", "--config", cfg, "--n", "50"});
  ASSERT_EQ(override_.status, 0) << override_.err;
  EXPECT_EQ(lines(override_.out)[1], "50 4 300.000000 100.000000 9");
  std::ofstream(path("bad.cfg")) << "just words\n";
  EXPECT_NE(invoke({"topo", "--config", path("bad.cfg")}).status, 0);
  EXPECT_NE(invoke({"topo", "--config", path("nope.cfg")}).status, 0);
}

TEST_F(CliTest, UnwritableOutputFails) {
  const auto r = invoke({"topo", "--out", path("no/such/dir/net.txt")});
  EXPECT_EQ(r.status, 1);
  EXPECT_FALSE(r.err.empty());
}
