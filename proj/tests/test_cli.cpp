#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
};

CliResult run(const std::string& args) {
    const std::string cmd = std::string(DENSECODE_CLI) + " " + args + " 2>&1";
    CliResult r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), buf.size(), p)) r.out += buf.data();
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string tmp(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "densecode_cli_test";
    fs::create_directories(dir);
    return (dir / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

}  // namespace

TEST(Cli, SearchFeasibleWritesVerifiableWitness) {
    const std::string out = tmp("pauli.json");
    const CliResult r = run("search --dim 2 --schmidt 0.5,0.5 --messages 4 --mode unitary --out " + out);
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(count_lines(r.out), 1) << r.out;
    EXPECT_NE(r.out.find("verdict=feasible"), std::string::npos);
    const CliResult v = run("verify " + out + " --tol 1e-11");
    EXPECT_EQ(v.code, 0) << v.out;
    EXPECT_NE(v.out.find("pass=true"), std::string::npos);
    const CliResult s = run("simulate " + out + " --trials 10000 --seed 3");
    EXPECT_EQ(s.code, 0) << s.out;
    EXPECT_NE(s.out.find("total,10000,10000,1"), std::string::npos) << s.out;
}

TEST(Cli, SearchInfeasibleExitsTwo) {
    const CliResult r = run("search --dim 2 --schmidt 0.7,0.3 --messages 3 --mode general --restarts 10");
    EXPECT_EQ(r.code, 2) << r.out;
    EXPECT_NE(r.out.find("verdict="), std::string::npos);
    EXPECT_EQ(r.out.find("verdict=feasible"), std::string::npos);
}

TEST(Cli, WindowPointNineGeneral) {
    const CliResult r = run("search --dim 4 --schmidt 0.401,0.401,0.099,0.099 --messages 9 --mode general");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("verdict=feasible"), std::string::npos);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run("search --dim 2 --schmidt 0.6,0.5 --messages 2").code, 1);
    EXPECT_EQ(run("search --dim 2 --schmidt 0.3,0.7 --messages 2").code, 1);
    EXPECT_EQ(run("search --dim 3 --schmidt 0.5,0.5 --messages 2").code, 1);
    EXPECT_EQ(run("search --dim 2 --schmidt 0.5,0.5").code, 1);
    EXPECT_EQ(run("search --dim 2 --schmidt 0.5,0.5 --messages 2 --mode sideways").code, 1);
    EXPECT_EQ(run("search --dim 2 --schmidt 0.5,0.5 --messages 2 --profile 3,3").code, 1);
    EXPECT_EQ(run("frobnicate").code, 1);
    EXPECT_EQ(run("").code, 1);
    EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, VerifyFlagsTamperedFileAndBadVersion) {
    const std::string good = tmp("block.json");
    ASSERT_EQ(run("construct --family blockset --x 0.26 --out " + good).code, 0);
    EXPECT_EQ(run("verify " + good).code, 0);

    auto j = nlohmann::json::parse(slurp(good));
    j["messages"][5]["kraus"][0][0][2][0] = j["messages"][5]["kraus"][0][0][2][0].get<double>() + 1e-3;
    const std::string bad = tmp("block_bad.json");
    std::ofstream(bad) << j.dump();
    const CliResult v = run("verify " + bad);
    EXPECT_EQ(v.code, 2) << v.out;
    EXPECT_NE(v.out.find("violation"), std::string::npos);
    EXPECT_NE(v.out.find("message 5"), std::string::npos) << v.out;

    j = nlohmann::json::parse(slurp(good));
    j["format_version"] = 7;
    const std::string old = tmp("block_v7.json");
    std::ofstream(old) << j.dump();
    EXPECT_EQ(run("verify " + old).code, 1);
    std::ofstream(tmp("garbage.json")) << "{\"format_version\": 1, ";
    EXPECT_EQ(run("verify " + tmp("garbage.json")).code, 1);
    EXPECT_EQ(run("simulate " + tmp("garbage.json")).code, 1);
}

TEST(Cli, Constructions) {
    const std::string nt = tmp("nt.json");
    const CliResult a = run("construct --family ninth-tenth --x 0.26 --out " + nt);
    EXPECT_EQ(a.code, 0) << a.out;
    const CliResult v = run("verify " + nt);
    EXPECT_EQ(v.code, 0) << v.out;
    EXPECT_NE(v.out.find("messages=10"), std::string::npos);

    const CliResult b = run("construct --family ninth-tenth --x 0.24");
    EXPECT_EQ(b.code, 2) << b.out;
    EXPECT_NE(b.out.find("slack=-0.86"), std::string::npos) << b.out;
    const CliResult c = run("construct --family ninth-tenth --x 0.2");
    EXPECT_EQ(c.code, 2);
    const auto at = c.out.find("slack=");
    ASSERT_NE(at, std::string::npos) << c.out;
    EXPECT_NEAR(std::stod(c.out.substr(at + 6)), -6.0, 1e-12);

    const CliResult q = run("construct --family qubit-nogo --lambda0 0.7");
    EXPECT_EQ(q.code, 0);
    EXPECT_NE(q.out.find("gap=1.9047"), std::string::npos) << q.out;
    EXPECT_EQ(run("construct --family qubit-nogo --lambda0 0.5").code, 1);

    EXPECT_EQ(run("construct --family u --x 0.25").code, 0);
    EXPECT_EQ(run("construct --family blockset --x 0.4").code, 1);
    EXPECT_EQ(run("construct --family blockset").code, 1);
}

TEST(Cli, BoundaryWithoutTransitionExitsTwo) {
    const CliResult r = run("boundary --start 0.6,0.4 --end 0.9,0.1 --messages 2 --resolution 0.05 --restarts 4");
    EXPECT_EQ(r.code, 2) << r.out;
    EXPECT_NE(r.out.find("no transition on path"), std::string::npos);
    EXPECT_EQ(run("boundary --messages 2").code, 1);
}

TEST(Cli, BoundaryCsv) {
    const std::string out = tmp("wall.csv");
    const CliResult r = run("boundary --start 0.5,0.5 --end 0.9,0.1 --messages 3 --mode general --resolution 0.05 "
                      "--restarts 5 --out " + out);
    EXPECT_EQ(r.code, 0) << r.out;
    const std::string csv = slurp(out);
    EXPECT_EQ(csv.rfind("t,spectrum,n,mode,verdict,cost,seed,profile\n", 0), 0u);
    EXPECT_NE(r.out.find("location="), std::string::npos);
}

TEST(Cli, SweepIsDeterministic) {
    const std::string a = tmp("sweep_a.csv"), b = tmp("sweep_b.csv");
    ASSERT_EQ(run("sweep --dim 3 --step 0.25 --seed 4 --restarts 4 --out " + a).code, 0);
    ASSERT_EQ(run("sweep --dim 3 --step 0.25 --seed 4 --restarts 4 --jobs 2 --out " + b).code, 0);
    EXPECT_EQ(slurp(a), slurp(b));
    EXPECT_EQ(slurp(a).rfind("spectrum,n,mode,verdict,cost,seed\n", 0), 0u);
}

TEST(Cli, SearchJsonIsDeterministic) {
    const std::string a = tmp("d3_a.json"), b = tmp("d3_b.json");
    ASSERT_EQ(run("search --dim 3 --schmidt 0.5,0.3,0.2 --messages 5 --seed 8 --out " + a).code, 0);
    ASSERT_EQ(run("search --dim 3 --schmidt 0.5,0.3,0.2 --messages 5 --seed 8 --out " + b).code, 0);
    EXPECT_EQ(slurp(a), slurp(b));
}

TEST(Cli, ConfigFileWithFlagPrecedence) {
    const std::string cfg = tmp("cfg.json");
    std::ofstream(cfg) << R"({"dim": 2, "schmidt": [0.7, 0.3], "messages": 3, "mode": "general", "restarts": 3})";
    const CliResult r = run("search --config " + cfg);
    EXPECT_EQ(r.code, 2) << r.out;
    EXPECT_NE(r.out.find("restarts=3"), std::string::npos) << r.out;
    const CliResult o = run("search --config " + cfg + " --messages 2 --restarts 4");
    EXPECT_EQ(o.code, 0) << o.out;
    EXPECT_NE(o.out.find("restarts=4"), std::string::npos) << o.out;
    EXPECT_NE(o.out.find("n=2"), std::string::npos) << o.out;
    std::ofstream(tmp("cfg_bad.json")) << "[";
    EXPECT_EQ(run("search --config " + tmp("cfg_bad.json")).code, 1);
}
