#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string err;
};

fs::path work_dir() {
    static const fs::path d = [] {
        auto p = fs::temp_directory_path() / "hqcnn_cli_tests";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Result cli(const std::string& args) {
    const auto err = work_dir() / "stderr.txt";
    const std::string cmd = std::string("\"") + HQCNN_CLI_PATH + "\" " + args + " > /dev/null 2> \"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

} // namespace

TEST(Cli, GenDataCountsAndDeterminism) {
    const auto a = work_dir() / "a.txt", b = work_dir() / "b.txt";
    ASSERT_EQ(cli("gen-data --per-class 100 --seed 7 --out " + q(a)).code, 0);
    ASSERT_EQ(cli("gen-data --per-class 100 --seed 7 --out " + q(b)).code, 0);
    const auto text = slurp(a);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 301);
    EXPECT_EQ(text, slurp(b));
    EXPECT_FALSE(fs::exists(work_dir() / "a.txt.partial"));
}

TEST(Cli, GenDataValidation) {
    const auto r = cli("gen-data --per-class 2 --out " + q(work_dir() / "c.txt"));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("at least 5"), std::string::npos) << r.err;
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(cli("").code, 2);
    EXPECT_EQ(cli("frobnicate").code, 2);
    EXPECT_EQ(cli("gen-data").code, 2);
    EXPECT_EQ(cli("--help").code, 0);
}

TEST(Cli, TrainMissingDataset) {
    const auto r = cli("train --data " + q(work_dir() / "nope.txt") + " --out " + q(work_dir() / "run_missing"));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("not found"), std::string::npos) << r.err;
}

TEST(Cli, TrainUnknownKey) {
    EXPECT_EQ(cli("train --set colour=red --out " + q(work_dir() / "run_bad")).code, 2);
}

TEST(Cli, IoFailuresExitThree) {
    const auto blocker = work_dir() / "blocker";
    std::ofstream(blocker) << "x";
    EXPECT_EQ(cli("gen-data --per-class 5 --out " + q(blocker / "d.txt")).code, 3);
    EXPECT_EQ(cli("train --set epochs=1 --set per_class=5 --set n_qubits=2 --set batch=4 --out " + q(blocker / "run")).code, 3);
}

TEST(Cli, TrainAndAnalyze) {
    const auto data = work_dir() / "train_data.txt";
    ASSERT_EQ(cli("gen-data --per-class 5 --seed 1 --out " + q(data)).code, 0);
    const auto cfg = work_dir() / "smoke.cfg";
    std::ofstream(cfg) << "epochs = 2\nn_qubits = 2\nbatch = 4\nfeature_map = family=pauli strings=X,Y,Z reps=1\n";
    const auto run = work_dir() / "run_ok";
    ASSERT_EQ(cli("train --config " + q(cfg) + " --data " + q(data) + " --seed 5 --out " + q(run)).code, 0);
    EXPECT_TRUE(fs::exists(run / "metrics.json"));
    EXPECT_NE(slurp(run / "config.txt").find("seed = 5"), std::string::npos);
    EXPECT_EQ(cli("analyze --run " + q(run)).code, 0);
    EXPECT_EQ(cli("analyze --run " + q(work_dir() / "no_run")).code, 2);
}

TEST(Cli, SweepRejectsStrayField) {
    const auto c1 = work_dir() / "s1.cfg", c2 = work_dir() / "s2.cfg";
    std::ofstream(c1) << "ansatz_reps = 1\nepochs = 1\n";
    std::ofstream(c2) << "ansatz_reps = 2\nepochs = 1\nlr = 0.02\n";
    const auto r = cli("sweep --config " + q(c1) + " --config " + q(c2) + " --field ansatz_reps --out " +
                       q(work_dir() / "sweep_bad"));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("lr"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(work_dir() / "sweep_bad" / "s1"));
}

TEST(Cli, SweepPreset) {
    const auto out = work_dir() / "sweep_ok";
    ASSERT_EQ(cli("sweep --preset ansatz-depth --set epochs=1 --set per_class=5 --set n_qubits=2 --set batch=8 --out " +
                  q(out))
                  .code,
              0);
    const auto summary = slurp(out / "summary.csv");
    EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 4);
    for (const char* d : {"ansatz_reps_1", "ansatz_reps_2", "ansatz_reps_3"}) EXPECT_TRUE(fs::is_directory(out / d));
    EXPECT_EQ(cli("analyze --sweep " + q(out)).code, 0);
    EXPECT_EQ(slurp(out / "summary.csv"), summary);
}
