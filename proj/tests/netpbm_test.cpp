#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "leafroi/netpbm.hpp"
#include "oracles.hpp"

using namespace leafroi;

TEST(Netpbm, PpmRoundTripPreservesPixels) {
    std::mt19937_64 rng(3);
    RgbImage img(13, 7);
    for (auto& p : img.pixels()) p = Rgb{std::uint8_t(rng()), std::uint8_t(rng()), std::uint8_t(rng())};
    const auto bytes = netpbm::encode_ppm(img);
    EXPECT_EQ(bytes.rfind("P6\n13 7\n255\n", 0), 0u);
    EXPECT_EQ(netpbm::decode_ppm(bytes), img);
}

TEST(Netpbm, MaskRoundTripUsesZeroAnd255) {
    std::mt19937_64 rng(4);
    const auto m = oracle::random_mask(9, 11, 0.5, rng);
    const auto bytes = netpbm::encode_mask(m);
    for (std::size_t i = bytes.size() - m.size(); i < bytes.size(); ++i) {
        const auto v = static_cast<unsigned char>(bytes[i]);
        EXPECT_TRUE(v == 0 || v == 255);
    }
    EXPECT_EQ(netpbm::decode_mask(bytes), m);
}

TEST(Netpbm, HeaderCommentsAndWhitespace) {
    std::string bytes = "P5\n# made by hand\n3  2\n# another\n255\n";
    bytes += std::string("\x00\x01\x02\x03\x04\x05", 6);
    const auto g = netpbm::decode_pgm(bytes);
    EXPECT_EQ(g.width(), 3);
    EXPECT_EQ(g.height(), 2);
    EXPECT_EQ(g.at(2, 1), 5);
}

TEST(Netpbm, Rejections) {
    EXPECT_THROW(netpbm::decode_pgm("P2\n1 1\n255\n0"), FormatError);
    EXPECT_THROW(netpbm::decode_pgm("P5\n2 2\n65535\n"), FormatError);
    EXPECT_THROW(netpbm::decode_pgm("P5\n2 2\n255\n\x01"), FormatError);  // truncated
    EXPECT_THROW(netpbm::decode_ppm(std::string("P5\n1 1\n255\n\x00", 12)), FormatError);
    EXPECT_THROW(netpbm::decode_pgm("P5\n0 2\n255\n"), FormatError);
    std::string grey = "P5\n2 1\n255\n";
    grey += std::string("\x00\x80", 2);
    EXPECT_NO_THROW(netpbm::decode_pgm(grey));
    EXPECT_THROW(netpbm::decode_mask(grey), FormatError);
}

TEST(Netpbm, FileIo) {
    const auto dir = std::filesystem::temp_directory_path() / "leafroi_netpbm_test";
    std::filesystem::create_directories(dir);
    GrayImage g(4, 3, 17);
    netpbm::write_pgm(dir / "g.pgm", g);
    EXPECT_EQ(netpbm::read_pgm(dir / "g.pgm"), g);
    EXPECT_EQ(netpbm::read_kind(dir / "g.pgm"), netpbm::Kind::Pgm);
    EXPECT_THROW(netpbm::read_ppm(dir / "missing.ppm"), IoError);
    std::filesystem::remove_all(dir);
}
