#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "nbe_cli_test";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

// Runs the CLI with stdout and stderr captured to files; returns the exit status.
int nbe(const std::string& args, std::string* out = nullptr, std::string* err = nullptr) {
    const auto o = kWork / "stdout.txt", e = kWork / "stderr.txt";
    const std::string cmd = std::string(NBE_CLI) + " " + args + " >" + o.string() + " 2>" + e.string();
    const int rc = std::system(cmd.c_str());
    if (out) *out = slurp(o);
    if (err) *err = slurp(e);
    return WEXITSTATUS(rc);
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
    }
};

} // namespace

TEST_F(CliTest, TransformWritesSortedTriplets) {
    spit(kWork / "c4.txt", "0 1\n1 2\n2 3\n3 0\n");
    ASSERT_EQ(nbe("transform " + (kWork / "c4.txt").string() + " a1+a2 " + (kWork / "k4.txt").string()), 0);
    EXPECT_EQ(slurp(kWork / "k4.txt"), "0 1 1\n0 2 1\n0 3 1\n1 0 1\n1 2 1\n1 3 1\n2 0 1\n2 1 1\n2 3 1\n3 0 1\n3 1 1\n3 2 1\n");
    spit(kWork / "p3.txt", "0 1\n1 2\n");
    std::string out;
    ASSERT_EQ(nbe("transform " + (kWork / "p3.txt").string() + " 'a^2'", &out), 0);
    EXPECT_EQ(out, "0 2 1\n2 0 1\n");
}

TEST_F(CliTest, TransformErrorsNameTheProblem) {
    std::string err;
    EXPECT_NE(nbe("transform " + (kWork / "missing.txt").string() + " a1", nullptr, &err), 0);
    EXPECT_NE(err.find("missing.txt"), std::string::npos) << err;
    spit(kWork / "bad.txt", "0 1\n1 x\n");
    EXPECT_NE(nbe("transform " + (kWork / "bad.txt").string() + " a1", nullptr, &err), 0);
    EXPECT_NE(err.find(":2"), std::string::npos) << err;
}

TEST_F(CliTest, RunIsByteReproducibleAndComparesToZero) {
    const auto cfg = kWork / "tri.cfg";
    spit(cfg, "task = graph-classification\ndataset = has-triangle\nmodel = gin-eps\ntransform = a1+a2\n"
              "hidden_dim = 8\nnum_layers = 2\nfolds = 5\nepochs = 20\nseed = 4\n");
    ASSERT_EQ(nbe("run --config " + cfg.string() + " --single-thread --out-dir " + (kWork / "r1").string()), 0);
    ASSERT_EQ(nbe("run --config " + cfg.string() + " --single-thread --out-dir " + (kWork / "r2").string()), 0);
    const auto a = slurp(kWork / "r1" / "tri.csv");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(kWork / "r2" / "tri.csv"));
    std::string out;
    ASSERT_EQ(nbe("compare " + (kWork / "r1" / "tri.json").string() + " " + (kWork / "r2" / "tri.json").string() +
                      " --csv " + (kWork / "cmp.csv").string(),
                  &out),
              0);
    std::istringstream rows(slurp(kWork / "cmp.csv"));
    std::string line;
    std::getline(rows, line);
    int n = 0;
    while (std::getline(rows, line)) {
        EXPECT_EQ(line.substr(line.rfind(',') + 1), "0") << line;
        ++n;
    }
    EXPECT_EQ(n, 2);
    // --seed overrides the config and changes the fingerprint.
    ASSERT_EQ(nbe("run --config " + cfg.string() + " --seed 5 --single-thread --out-dir " + (kWork / "r3").string()),
              0);
    EXPECT_NE(slurp(kWork / "r3" / "tri.json").find("\"seed\": \"5\""), std::string::npos);
}

TEST_F(CliTest, InvalidConfigExitsNonzeroWithField) {
    const auto cfg = kWork / "bad.cfg";
    spit(cfg, "task = link-prediction\ndataset = two-block\nmodel = vgae\nfolds = 3\n");
    std::string err;
    EXPECT_NE(nbe("run --config " + cfg.string() + " --out-dir " + kWork.string(), nullptr, &err), 0);
    EXPECT_NE(err.find("bad.cfg:4"), std::string::npos) << err;
    EXPECT_NE(err.find("folds"), std::string::npos) << err;
    EXPECT_NE(nbe("run", nullptr, &err), 0);
}

TEST_F(CliTest, CompareRejectsMismatchedTasks) {
    const auto gc = kWork / "gc.cfg", lp = kWork / "lp.cfg";
    spit(gc, "task = graph-classification\ndataset = triangles\nhidden_dim = 4\nnum_layers = 1\nfolds = 3\nepochs = 2\n");
    spit(lp, "task = link-prediction\ndataset = two-block\nepochs = 2\n");
    ASSERT_EQ(nbe("run --config " + gc.string() + " --out-dir " + kWork.string()), 0);
    ASSERT_EQ(nbe("run --config " + lp.string() + " --out-dir " + kWork.string()), 0);
    std::string err;
    EXPECT_NE(nbe("compare " + (kWork / "gc.json").string() + " " + (kWork / "lp.json").string(), nullptr, &err), 0);
    EXPECT_NE(err.find("cannot compare"), std::string::npos) << err;
}
