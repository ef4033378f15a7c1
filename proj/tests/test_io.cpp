#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "densecode/analytic.hpp"
#include "densecode/feasibility.hpp"
#include "densecode/io.hpp"

using namespace densecode;

namespace {

MessageSet random_mixed_set(Rng& rng) {
    const SchmidtSpectrum s({0.45, 0.35, 0.2});
    return MessageSet(s, {Message::unitary(haar_unitary(3, rng)),
                          Message::from_isometry(haar_isometry(6, 3, rng), 3)});
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("densecode_io_" + name)).string();
}

}  // namespace

TEST(Io, RoundTripIsBitIdentical) {
    Rng rng(1);
    for (int t = 0; t < 20; ++t) {
        const MessageSet set = random_mixed_set(rng);
        FileMetadata meta;
        meta.seed = 0xfeedfacecafebeefULL;
        meta.cost = orthogonality_cost(set);
        const std::string text = dump_message_set(set, meta);
        const MessageSetFile back = parse_message_set(text);
        ASSERT_EQ(back.set.size(), set.size());
        for (int j = 0; j < set.size(); ++j) {
            ASSERT_EQ(back.set[j].kraus_rank(), set[j].kraus_rank());
            for (int k = 0; k < set[j].kraus_rank(); ++k) EXPECT_EQ(back.set[j][k], set[j][k]);
        }
        EXPECT_EQ(back.set.spectrum().lambdas(), set.spectrum().lambdas());
        EXPECT_EQ(back.metadata.seed, meta.seed);
        EXPECT_EQ(back.metadata.cost, meta.cost);
        EXPECT_EQ(dump_message_set(back.set, back.metadata), text);
        EXPECT_NEAR(orthogonality_cost(back.set), back.metadata.cost, 1e-12);
    }
}

TEST(Io, FileRoundTrip) {
    Rng rng(2);
    const MessageSet set = lambda_star_set(haar_unitary(2, rng), haar_unitary(2, rng));
    const std::string path = temp_path("star.json");
    save_message_set(path, set, {});
    const MessageSetFile f = load_message_set(path);
    EXPECT_EQ(f.set.size(), 10);
    EXPECT_EQ(f.metadata.timestamp, "");
    EXPECT_EQ(f.metadata.tool_version, DENSECODE_VERSION);
    for (int j = 0; j < 10; ++j) EXPECT_EQ(f.set[j][0], set[j][0]);
    std::remove(path.c_str());
}

TEST(Io, RejectsBadInput) {
    Rng rng(3);
    const std::string good = dump_message_set(random_mixed_set(rng), {});
    EXPECT_THROW(parse_message_set("{not json"), Error);
    EXPECT_THROW(parse_message_set("[1,2]"), Error);

    auto edited = [&](auto&& f) {
        auto j = nlohmann::json::parse(good);
        f(j);
        return j.dump();
    };
    try {
        parse_message_set(edited([](auto& j) { j["format_version"] = 99; }));
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("format_version"), std::string::npos);
    }
    EXPECT_THROW(parse_message_set(edited([](auto& j) { j.erase("messages"); })), Error);
    EXPECT_THROW(parse_message_set(edited([](auto& j) { j["dim"] = 4; })), Error);
    EXPECT_THROW(parse_message_set(edited([](auto& j) { j["messages"][0]["kraus"][0][1][2] = "x"; })), Error);
    EXPECT_THROW(parse_message_set(edited([](auto& j) { j["schmidt"] = {0.3, 0.3, 0.3}; })), Error);
    EXPECT_THROW(load_message_set(temp_path("missing.json")), Error);
}
