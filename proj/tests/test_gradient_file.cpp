#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "garpp/gradient_file.hpp"
#include "garpp/rng.hpp"

using garpp::GradientVector;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("garpp_file_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("gradient files round-trip bit for bit") {
    TempDir tmp;
    garpp::Rng rng(64);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng.below(8);
        const std::size_t d = 1 + rng.below(33);
        std::vector<GradientVector> gs(n, GradientVector(d));
        for (auto& g : gs) {
            for (auto& x : g) x = 1e3 * (2.0 * rng.uniform01() - 1.0);
        }
        gs[0][0] = -0.0;  // signed zero must survive
        const std::string path = tmp.file("roundtrip.bin");
        garpp::write_gradient_file(path, gs);
        const auto back = garpp::read_gradient_file(path);
        REQUIRE(back.size() == n);
        for (std::size_t i = 0; i < n; ++i) {
            REQUIRE(back[i].size() == d);
            for (std::size_t j = 0; j < d; ++j) {
                CHECK(std::memcmp(&back[i][j], &gs[i][j], sizeof(double)) == 0);
            }
        }
        CHECK(std::filesystem::file_size(path) == 16 + 8 * n * d);
    }
}

TEST_CASE("truncated payload is rejected with a byte offset") {
    TempDir tmp;
    const std::string path = tmp.file("trunc.bin");
    garpp::write_gradient_file(path, std::vector<GradientVector>{{1.0, 2.0}, {3.0, 4.0}});
    std::filesystem::resize_file(path, 30);  // expected 16 + 32 = 48 bytes
    try {
        garpp::read_gradient_file(path);
        FAIL("expected format_error");
    } catch (const garpp::format_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("48") != std::string::npos);
        CHECK(msg.find("30") != std::string::npos);
    }
}

TEST_CASE("oversized payload and bad magic are rejected") {
    TempDir tmp;
    const std::string path = tmp.file("bad.bin");
    garpp::write_gradient_file(path, std::vector<GradientVector>{{1.0}});
    {
        std::ofstream app(path, std::ios::binary | std::ios::app);
        app.put('\0');
    }
    CHECK_THROWS_AS(garpp::read_gradient_file(path), garpp::format_error);

    const std::string path2 = tmp.file("magic.bin");
    garpp::write_gradient_file(path2, std::vector<GradientVector>{{1.0}});
    {
        std::fstream fix(path2, std::ios::binary | std::ios::in | std::ios::out);
        fix.put('X');
    }
    try {
        garpp::read_gradient_file(path2);
        FAIL("expected format_error");
    } catch (const garpp::format_error& e) {
        CHECK(std::string(e.what()).find("magic") != std::string::npos);
    }
}

TEST_CASE("non-finite payload values are rejected with their offset") {
    TempDir tmp;
    const std::string path = tmp.file("nan.bin");
    garpp::write_gradient_file(path, std::vector<GradientVector>{{1.0, 2.0}});
    {
        // overwrite the second value (byte offset 24) with a NaN pattern
        std::fstream fix(path, std::ios::binary | std::ios::in | std::ios::out);
        fix.seekp(24);
        const unsigned char nan_le[8] = {0, 0, 0, 0, 0, 0, 0xf8, 0x7f};
        fix.write(reinterpret_cast<const char*>(nan_le), 8);
    }
    try {
        garpp::read_gradient_file(path);
        FAIL("expected format_error");
    } catch (const garpp::format_error& e) {
        CHECK(std::string(e.what()).find("24") != std::string::npos);
    }
}

TEST_CASE("writer refuses what the reader would refuse") {
    TempDir tmp;
    CHECK_THROWS_AS(garpp::write_gradient_file(tmp.file("x.bin"), std::vector<GradientVector>{}),
                    garpp::precondition_error);
    const std::vector<GradientVector> nan_grad{{std::nan("")}};
    CHECK_THROWS_AS(garpp::write_gradient_file(tmp.file("y.bin"), nan_grad),
                    garpp::format_error);
}
