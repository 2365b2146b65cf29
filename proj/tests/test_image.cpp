#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include <zlib.h>

#include "pf/image.hpp"
#include "pf/image_io.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using pf::PixelImage;

namespace {

fs::path tmp_dir() {
    const fs::path p = fs::temp_directory_path() / "pf_image_tests";
    fs::create_directories(p);
    return p;
}

// Hand-assembled PNG from pre-filtered scanlines; lets the tests exercise
// formats the writer never produces (16-bit, RGBA).
std::vector<unsigned char> craft_png(int w, int h, int bit_depth, int color_type,
                                     const std::vector<unsigned char>& raw) {
    uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> z(zlen);
    REQUIRE(compress2(z.data(), &zlen, raw.data(), static_cast<uLong>(raw.size()), 6) == Z_OK);
    z.resize(zlen);

    std::vector<unsigned char> out{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    auto be32 = [](uint32_t v) {
        return std::vector<unsigned char>{static_cast<unsigned char>(v >> 24),
                                          static_cast<unsigned char>(v >> 16),
                                          static_cast<unsigned char>(v >> 8),
                                          static_cast<unsigned char>(v)};
    };
    auto chunk = [&](const char* tag, const std::vector<unsigned char>& payload) {
        auto len = be32(static_cast<uint32_t>(payload.size()));
        out.insert(out.end(), len.begin(), len.end());
        std::vector<unsigned char> body(tag, tag + 4);
        body.insert(body.end(), payload.begin(), payload.end());
        const uint32_t crc =
            static_cast<uint32_t>(crc32(0, body.data(), static_cast<uInt>(body.size())));
        out.insert(out.end(), body.begin(), body.end());
        auto c = be32(crc);
        out.insert(out.end(), c.begin(), c.end());
    };
    std::vector<unsigned char> ihdr;
    for (unsigned char b : be32(static_cast<uint32_t>(w))) ihdr.push_back(b);
    for (unsigned char b : be32(static_cast<uint32_t>(h))) ihdr.push_back(b);
    ihdr.push_back(static_cast<unsigned char>(bit_depth));
    ihdr.push_back(static_cast<unsigned char>(color_type));
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    chunk("IHDR", ihdr);
    chunk("IDAT", z);
    chunk("IEND", {});
    return out;
}

std::vector<unsigned char> png16_bytes(int w, int h) {
    std::vector<unsigned char> raw;
    for (int y = 0; y < h; ++y) {
        raw.push_back(0);  // filter: none
        for (int x = 0; x < w; ++x) {
            raw.push_back(static_cast<unsigned char>(x * 17));
            raw.push_back(static_cast<unsigned char>(y * 31));
        }
    }
    return craft_png(w, h, 16, 0, raw);
}

}  // namespace

TEST_SUITE_BEGIN("image");

TEST_CASE("pixel image shape validation") {
    CHECK_THROWS_WITH_AS(PixelImage(4, 4, 2), "bad image shape", std::invalid_argument);
    CHECK_THROWS_WITH_AS(PixelImage(0, 4, 1), "bad image shape", std::invalid_argument);
    PixelImage ok(4, 3, 3);
    CHECK(ok.sample_count() == 36);
    CHECK(ok.pixel_count() == 12);
}

TEST_CASE("grayscale uses BT.601 weights") {
    PixelImage rgb(1, 1, 3);
    rgb.at(0, 0, 0) = 1.0f;
    PixelImage g = pf::to_grayscale(rgb);
    CHECK(g.channels == 1);
    CHECK(g.at(0, 0, 0) == doctest::Approx(0.299).epsilon(1e-6));

    rgb.at(0, 0, 0) = 0.0f;
    rgb.at(0, 0, 1) = 1.0f;
    CHECK(pf::to_grayscale(rgb).at(0, 0, 0) == doctest::Approx(0.587).epsilon(1e-6));

    rgb.at(0, 0, 1) = 0.0f;
    rgb.at(0, 0, 2) = 1.0f;
    CHECK(pf::to_grayscale(rgb).at(0, 0, 0) == doctest::Approx(0.114).epsilon(1e-6));
}

TEST_CASE("grayscale of single channel is a copy") {
    const PixelImage g = synth::dyadic(1, 7, 5, 1);
    const PixelImage g2 = pf::to_grayscale(g);
    CHECK(g2.data == g.data);
}

TEST_CASE("resize to the same shape is the identity") {
    const PixelImage img = synth::photo(11, 31, 23);
    const PixelImage same = pf::resize(img, 31, 23);
    CHECK(same.data == img.data);
}

TEST_CASE("resize preserves constants") {
    const PixelImage img = synth::constant(17, 9, 3, 0.375f);
    const PixelImage up = pf::resize(img, 64, 40);
    const PixelImage down = pf::resize(img, 5, 3);
    for (float v : up.data) CHECK(v == 0.375f);
    for (float v : down.data) CHECK(v == 0.375f);
}

TEST_CASE("resize samples at half-pixel centers") {
    // 2 -> 4 on one axis: fx = (x + 0.5) / 2 - 0.5 gives -0.25, 0.25, 0.75, 1.25;
    // edge clamp makes the ends pure copies and the middle 25/75 blends.
    PixelImage img(2, 1, 1);
    img.at(0, 0, 0) = 0.0f;
    img.at(1, 0, 0) = 1.0f;
    const PixelImage out = pf::resize(img, 4, 1);
    CHECK(out.at(0, 0, 0) == doctest::Approx(0.0));
    CHECK(out.at(1, 0, 0) == doctest::Approx(0.25));
    CHECK(out.at(2, 0, 0) == doctest::Approx(0.75));
    CHECK(out.at(3, 0, 0) == doctest::Approx(1.0));
}

TEST_CASE("resize rejects empty targets") {
    const PixelImage img = synth::constant(4, 4, 1, 0.5f);
    CHECK_THROWS_WITH_AS(pf::resize(img, 0, 4), "empty target", std::invalid_argument);
}

TEST_CASE("gaussian kernel: radius, normalization, symmetry") {
    const std::vector<double> k = pf::gaussian_kernel(1.5);
    CHECK(k.size() == 11);  // radius = ceil(3 * 1.5) = 5
    double sum = 0.0;
    for (double v : k) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < k.size() / 2; ++i) CHECK(k[i] == k[k.size() - 1 - i]);
    CHECK_THROWS_WITH_AS(pf::gaussian_kernel(0.0), "invalid sigma", std::invalid_argument);
    CHECK_THROWS_WITH_AS(pf::gaussian_kernel(-1.0), "invalid sigma", std::invalid_argument);
}

TEST_CASE("gaussian blur preserves constants and commutes with flips") {
    const PixelImage c = synth::constant(12, 12, 3, 0.625f);
    for (float v : pf::gaussian_blur(c, 2.0).data) CHECK(v == doctest::Approx(0.625).epsilon(1e-6));

    const PixelImage img = synth::photo(3, 64, 48);
    const PixelImage a = pf::gaussian_blur(pf::flip_horizontal(img), 1.3);
    const PixelImage b = pf::flip_horizontal(pf::gaussian_blur(img, 1.3));
    CHECK(a.data == b.data);  // symmetric-pair accumulation makes this bit-exact

    const PixelImage av = pf::gaussian_blur(pf::flip_vertical(img), 1.3);
    const PixelImage bv = pf::flip_vertical(pf::gaussian_blur(img, 1.3));
    CHECK(av.data == bv.data);
}

TEST_CASE("flips are involutions") {
    const PixelImage img = synth::photo(5, 33, 17);
    CHECK(pf::flip_horizontal(pf::flip_horizontal(img)).data == img.data);
    CHECK(pf::flip_vertical(pf::flip_vertical(img)).data == img.data);
}

TEST_CASE("lab conversion basics") {
    PixelImage white(1, 1, 3);
    white.at(0, 0, 0) = white.at(0, 0, 1) = white.at(0, 0, 2) = 1.0f;
    const pf::LabImage lab = pf::to_lab(white);
    CHECK(lab.at(0, 0, 0) == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(lab.at(0, 0, 1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    CHECK(lab.at(0, 0, 2) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));

    PixelImage black(1, 1, 3);
    const pf::LabImage lab0 = pf::to_lab(black);
    CHECK(lab0.at(0, 0, 0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));

    // Neutral grays keep a = b = 0; L grows with intensity.
    PixelImage g1(1, 1, 3), g2(1, 1, 3);
    for (int c = 0; c < 3; ++c) {
        g1.at(0, 0, c) = 0.2f;
        g2.at(0, 0, c) = 0.6f;
    }
    CHECK(pf::to_lab(g1).at(0, 0, 0) < pf::to_lab(g2).at(0, 0, 0));
    CHECK(pf::to_lab(g1).at(0, 0, 1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));

    CHECK_THROWS_WITH_AS(pf::to_lab(synth::constant(2, 2, 1, 0.5f)), "to_lab expects 3 channels",
                         std::invalid_argument);
}

TEST_CASE("png round-trip is exact for 8-bit-grid values") {
    const fs::path p = tmp_dir() / "rt.png";
    const PixelImage img = synth::eightbit(7, 21, 13);
    pf::save_png(p.string(), img);
    const PixelImage back = pf::load_image(p.string());
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.channels == 3);
    CHECK(back.data == img.data);
}

TEST_CASE("png round-trip for grayscale") {
    const fs::path p = tmp_dir() / "rt_gray.png";
    const PixelImage img = synth::eightbit(9, 14, 10, 1);
    pf::save_png(p.string(), img);
    const PixelImage back = pf::load_image(p.string());
    CHECK(back.channels == 1);
    CHECK(back.data == img.data);
}

TEST_CASE("pnm round-trip") {
    const fs::path p6 = tmp_dir() / "rt.ppm";
    const PixelImage rgb = synth::eightbit(10, 9, 7);
    pf::save_pnm(p6.string(), rgb);
    CHECK(pf::load_image(p6.string()).data == rgb.data);

    const fs::path p5 = tmp_dir() / "rt.pgm";
    const PixelImage gray = synth::eightbit(11, 9, 7, 1);
    pf::save_pnm(p5.string(), gray);
    CHECK(pf::load_image(p5.string()).data == gray.data);
}

TEST_CASE("save_image dispatches on extension") {
    const PixelImage img = synth::eightbit(12, 6, 5);
    const fs::path ppm = tmp_dir() / "auto.ppm";
    const fs::path png = tmp_dir() / "auto.png";
    pf::save_image(ppm.string(), img);
    pf::save_image(png.string(), img);
    // PNM is trivially sniffable; both must load back identically.
    CHECK(pf::load_image(ppm.string()).data == img.data);
    CHECK(pf::load_image(png.string()).data == img.data);
}

TEST_CASE("16-bit png is rejected") {
    const fs::path p = tmp_dir() / "deep.png";
    const auto bytes = png16_bytes(6, 4);
    std::ofstream(p, std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()), static_cast<long>(bytes.size()));
    CHECK_THROWS_AS(pf::load_image(p.string()), std::runtime_error);
    try {
        pf::load_image(p.string());
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("unsupported bit depth") == 0);
    }
}

TEST_CASE("alpha composites over white") {
    // RGBA PNG, two pixels: red at alpha 0 must come back white, red at
    // alpha 255 stays pure red.
    const std::vector<unsigned char> raw{0,                   // filter byte
                                         255, 0, 0, 0,        // red, transparent
                                         255, 0, 0, 255};     // red, opaque
    const auto bytes = craft_png(2, 1, 8, 6, raw);
    const fs::path p = tmp_dir() / "alpha.png";
    std::ofstream(p, std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()), static_cast<long>(bytes.size()));
    const PixelImage back = pf::load_image(p.string());
    CHECK(back.channels == 3);
    CHECK(back.at(0, 0, 0) == doctest::Approx(1.0));
    CHECK(back.at(0, 0, 1) == doctest::Approx(1.0));
    CHECK(back.at(0, 0, 2) == doctest::Approx(1.0));
    CHECK(back.at(1, 0, 0) == doctest::Approx(1.0));
    CHECK(back.at(1, 0, 1) == doctest::Approx(0.0));
    CHECK(back.at(1, 0, 2) == doctest::Approx(0.0));
}

TEST_CASE("unreadable and garbage files raise") {
    CHECK_THROWS_AS(pf::load_image((tmp_dir() / "missing.png").string()), std::runtime_error);
    const fs::path junk = tmp_dir() / "junk.bin";
    std::ofstream(junk, std::ios::binary) << "definitely not an image";
    CHECK_THROWS_AS(pf::load_image(junk.string()), std::runtime_error);
}

TEST_SUITE_END();
