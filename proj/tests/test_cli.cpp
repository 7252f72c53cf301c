// Copyright 2026 The kpsca Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace kpsca::cli {
namespace {

RawTrace raw_file(const std::string& p) { return std::get<RawTrace>(load_trace(p)); }

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("kpsca_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    int cli(std::vector<std::string> args) {
        err_.str("");
        return run(std::move(args), err_);
    }

    static std::string slurp(const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), {}};
    }

    static nlohmann::json json_file(const std::string& p) { return nlohmann::json::parse(slurp(p)); }

    /// Small design1 trace plus its key.
    std::string small_trace(const std::string& name, const std::string& preset = "design1_like") {
        const auto out = path(name);
        EXPECT_EQ(cli({"simulate", "--preset", preset, "--slots", "60", "--cycles", "12", "--samples", "40", "--seed",
                       "3", "-o", out}),
                  0)
            << err_.str();
        return out;
    }

    std::string truth_of(const std::string& trace) {
        return json_file(trace + ".truth.json")["key_hex"].get<std::string>();
    }

    fs::path dir_;
    std::ostringstream err_;
};

TEST_F(CliTest, SimulateReferenceGeometry) {
    const auto out = path("t.kpt");
    ASSERT_EQ(cli({"simulate", "--preset", "design1_like", "--seed", "1", "-o", out}), 0) << err_.str();
    const auto t = raw_file(out);
    EXPECT_EQ(t.geometry(), (TraceGeometry{230, 54, 625}));
    const auto side = json_file(out + ".truth.json");
    EXPECT_EQ(side["key_bits"], 232);
    EXPECT_EQ(side["window"]["start"], 2);
    EXPECT_EQ(side["preset"], "design1_like");
    EXPECT_EQ(side["key_hex"], t.metadata().key_hex.value());
}

TEST_F(CliTest, SimulateIsByteReproducible) {
    const auto a = small_trace("a.kpt");
    const auto b = small_trace("b.kpt");
    EXPECT_EQ(slurp(a), slurp(b));
    EXPECT_EQ(slurp(a + ".truth.json"), slurp(b + ".truth.json"));
}

TEST_F(CliTest, SimulateWithGivenKeyAndModelFile) {
    const auto model = path("model.json");
    nlohmann::ordered_json j = preset("design3_like", {20, 6, 10});
    detail::write_text(model, j.dump());
    ASSERT_EQ(cli({"simulate", "--model", model, "--truth", "0xfabcde", "--key-bits", "22", "-o", path("m.kpt")}), 0)
        << err_.str();
    EXPECT_EQ(raw_file(path("m.kpt")).metadata().key_hex.value(), "3abcde");
    EXPECT_NE(cli({"simulate", "--model", model, "--truth", "abcde", "--key-bits", "22", "-o", path("n.kpt")}), 0);
}

TEST_F(CliTest, UnknownPreset) {
    EXPECT_NE(cli({"simulate", "--preset", "design9", "-o", path("x.kpt")}), 0);
    EXPECT_NE(err_.str().find("design9"), std::string::npos);
    EXPECT_FALSE(fs::exists(path("x.kpt")));
}

TEST_F(CliTest, ParseErrorsExitTwo) {
    EXPECT_EQ(cli({"frobnicate"}), 2);
    EXPECT_EQ(cli({"attack1"}), 2);
    EXPECT_EQ(cli({"attack1", path("none.kpt"), "--method", "svm"}), 2);
}

TEST_F(CliTest, Compress) {
    const auto raw = small_trace("r.kpt");
    ASSERT_EQ(cli({"compress", raw, "-o", path("r.kpc")}), 0) << err_.str();
    const auto c = std::get<CompressedTrace>(load_trace(path("r.kpc")));
    EXPECT_EQ(c.values().size(), 60u * 12u);
    EXPECT_EQ(c, compress(raw_file(raw)));
    EXPECT_EQ(cli({"compress", path("r.kpc"), "-o", path("again.kpc")}), 1);
    EXPECT_NE(err_.str().find("already compressed"), std::string::npos);
}

TEST_F(CliTest, AttackOneReport) {
    const auto raw = small_trace("r.kpt");
    ASSERT_EQ(cli({"compress", raw, "-o", path("r.kpc")}), 0);
    for (const std::string method : {"kmeans", "pca"}) {
        const auto rep = path("a1_" + method + ".json");
        ASSERT_EQ(cli({"attack1", path("r.kpc"), "--method", method, "--truth", truth_of(raw), "-o", rep}), 0)
            << err_.str();
        const auto j = json_file(rep);
        EXPECT_EQ(j["attack"], "attack1");
        EXPECT_EQ(j["method"], method);
        EXPECT_EQ(j["best_delta"], 1.0);
        EXPECT_EQ(j["experiments"].size(), 1u);
    }
}

TEST_F(CliTest, AttackOneRawWithCompressFlagMatchesCompressedInput) {
    const auto raw = small_trace("r.kpt");
    ASSERT_EQ(cli({"compress", raw, "-o", path("r.kpc")}), 0);
    ASSERT_EQ(cli({"attack1", raw, "--compress", "-o", path("x.json")}), 0) << err_.str();
    ASSERT_EQ(cli({"attack1", path("r.kpc"), "-o", path("y.json")}), 0) << err_.str();
    EXPECT_EQ(slurp(path("x.json")), slurp(path("y.json")));
    EXPECT_TRUE(json_file(path("x.json"))["best_delta"].is_null());
}

TEST_F(CliTest, AttackTwoAndThree) {
    const auto raw = small_trace("r.kpt", "design3_like");
    ASSERT_EQ(cli({"compress", raw, "-o", path("r.kpc")}), 0);
    const auto key = truth_of(raw);
    ASSERT_EQ(cli({"attack2", path("r.kpc"), "--truth", key, "-o", path("a2.json")}), 0) << err_.str();
    const auto a2 = json_file(path("a2.json"));
    EXPECT_EQ(a2["experiments"].size(), 12u);
    EXPECT_EQ(a2["ranking"].size(), 12u);

    ASSERT_EQ(cli({"attack3", path("r.kpc"), "--truth", key, "-o", path("a3.json")}), 0) << err_.str();
    const auto a3 = json_file(path("a3.json"));
    EXPECT_EQ(a3["ranking"], a2["ranking"]);
    EXPECT_FALSE(a3["eta"].is_null());

    std::string ranking;
    for (const auto& c : a2["ranking"]) ranking += (ranking.empty() ? "" : ",") + c.dump();
    ASSERT_EQ(cli({"attack3", path("r.kpc"), "--truth", key, "--ranking", ranking, "-o", path("a3b.json")}), 0)
        << err_.str();
    EXPECT_EQ(json_file(path("a3b.json")), a3);

    ASSERT_EQ(cli({"attack3", path("r.kpc"), "--truth", key, "--profile", path("r.kpc"), "--profile-truth", key, "-o",
                   path("a3c.json")}),
              0)
        << err_.str();
    EXPECT_EQ(json_file(path("a3c.json")), a3);
}

TEST_F(CliTest, AttackTwoNeedsTruth) {
    const auto raw = small_trace("r.kpt");
    EXPECT_NE(cli({"attack2", raw, "-o", path("a2.json")}), 0);
    EXPECT_NE(err_.str().find("--truth"), std::string::npos);
    EXPECT_NE(cli({"attack3", raw, "-o", path("a3.json")}), 0);
}

TEST_F(CliTest, PlotWritesOnePointPerSlot) {
    const auto raw = small_trace("r.kpt");
    const auto rep = path("a1.json");
    ASSERT_EQ(cli({"attack1", raw, "--compress", "--method", "pca", "--truth", truth_of(raw), "--plot", "-o", rep}), 0)
        << err_.str();
    const auto svg = slurp(path("a1.svg"));
    std::size_t circles = 0;
    for (auto at = svg.find("<circle"); at != std::string::npos; at = svg.find("<circle", at + 1)) ++circles;
    EXPECT_EQ(circles, 60u);
    std::istringstream csv(slurp(path("a1.csv")));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "slot,pc1,pc2,label,truth_bit");
    std::size_t rows = 0;
    while (std::getline(csv, line)) rows += !line.empty();
    EXPECT_EQ(rows, 60u);
    EXPECT_NE(cli({"attack1", raw, "--plot"}), 0);
}

TEST_F(CliTest, ConfigFileWithOverride) {
    const auto raw = small_trace("r.kpt");
    const auto cfg = path("cfg.json");
    detail::write_text(cfg, nlohmann::json{{"method", "pca"}, {"compress", true}, {"output", path("from_cfg.json")}}.dump());
    ASSERT_EQ(cli({"attack1", raw, "--config", cfg}), 0) << err_.str();
    EXPECT_EQ(json_file(path("from_cfg.json"))["method"], "pca");
    EXPECT_EQ(json_file(path("from_cfg.json"))["compressed"], true);
    ASSERT_EQ(cli({"attack1", raw, "--config", cfg, "--method", "kmeans"}), 0) << err_.str();
    EXPECT_EQ(json_file(path("from_cfg.json"))["method"], "kmeans");
    EXPECT_NE(cli({"attack1", raw, "--config", path("missing.json")}), 0);
}

} // namespace
} // namespace kpsca::cli
