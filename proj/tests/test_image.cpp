#include <catch2/catch.hpp>

#include <filesystem>
#include <fstream>

#include "pardinus/codec.hpp"
#include "pardinus/image.hpp"

using namespace pardinus;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "pardinus_image_tests";
    fs::create_directories(dir);
    return dir;
}

ImageTensor random_image(int c, int h, int w, std::uint64_t seed) {
    Rng rng(seed);
    ImageTensor img(c, h, w);
    for (float& v : img.data) v = float(rng.next_double());
    return img;
}

} // namespace

TEST_CASE("load_image round-trips PNG pixels", "[image]") {
    const fs::path dir = temp_dir();

    SECTION("2x2 all-black image decodes to twelve zeros") {
        const ImageTensor black(3, 2, 2, 0.0f);
        const std::string path = (dir / "black.png").string();
        save_png(black, path);
        const ImageTensor loaded = load_image(path);
        REQUIRE(loaded.data.size() == 12);
        for (float v : loaded.data) CHECK(v == 0.0f);
    }

    SECTION("1x1 saturated red maps to [1, 0, 0]") {
        ImageTensor red(3, 1, 1);
        red.data = {1.0f, 0.0f, 0.0f};
        const std::string path = (dir / "red.png").string();
        save_png(red, path);
        const ImageTensor loaded = load_image(path);
        CHECK(loaded.data == std::vector<float>{1.0f, 0.0f, 0.0f});
    }

    SECTION("384x256 fixture keeps shape and [0,1] range") {
        const ImageTensor img = random_image(3, 256, 384, 99);
        const std::string path = (dir / "fixture.png").string();
        save_png(img, path);
        const ImageTensor loaded = load_image(path);
        REQUIRE(loaded.channels == 3);
        REQUIRE(loaded.height == 256);
        REQUIRE(loaded.width == 384);
        float lo = 1.0f, hi = 0.0f;
        for (float v : loaded.data) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        CHECK(lo >= 0.0f);
        CHECK(hi <= 1.0f);
        // 8-bit quantization bound on the round trip
        for (std::size_t i = 0; i < img.data.size(); ++i)
            CHECK(std::fabs(img.data[i] - loaded.data[i]) <= 0.5f / 255.0f + 1e-6f);
    }
}

TEST_CASE("load_image decodes JPEG", "[image]") {
    const fs::path dir = temp_dir();
    const ImageTensor img = random_image(3, 32, 48, 7);
    const std::string path = (dir / "fixture.jpg").string();
    save_jpeg(img, path);
    const ImageTensor loaded = load_image(path);
    REQUIRE(loaded.channels == 3);
    REQUIRE(loaded.height == 32);
    REQUIRE(loaded.width == 48);
    for (float v : loaded.data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("load_image error paths", "[image]") {
    const fs::path dir = temp_dir();
    CHECK_THROWS_AS(load_image((dir / "does_not_exist.png").string()), FileNotFound);

    const std::string garbage = (dir / "garbage.png").string();
    {
        std::ofstream out(garbage, std::ios::binary);
        out << "not an image at all";
    }
    CHECK_THROWS_AS(load_image(garbage), DecodeError);

    // valid PNG signature but corrupt body
    const std::string truncated = (dir / "trunc.png").string();
    {
        const ImageTensor img = random_image(3, 16, 16, 3);
        save_png(img, (dir / "ok.png").string());
        std::ifstream in((dir / "ok.png").string(), std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        std::ofstream out(truncated, std::ios::binary);
        out.write(bytes.data(), std::streamsize(bytes.size() / 3));
    }
    CHECK_THROWS_AS(load_image(truncated), DecodeError);
}

TEST_CASE("resize_bilinear", "[image]") {
    SECTION("constant image stays constant at any size") {
        const ImageTensor img(3, 8, 12, 0.5f);
        for (auto [w, h] : {std::pair{3, 5}, {24, 16}, {7, 7}}) {
            const ImageTensor out = resize_bilinear(img, w, h);
            REQUIRE(out.width == w);
            REQUIRE(out.height == h);
            for (float v : out.data) CHECK(v == 0.5f);
        }
    }

    SECTION("identity resize is bit-exact") {
        const ImageTensor img = random_image(3, 6, 9, 11);
        const ImageTensor out = resize_bilinear(img, 9, 6);
        CHECK(out.data == img.data);
    }

    SECTION("4x4 checkerboard to 2x2 averages each source block") {
        ImageTensor img(1, 4, 4);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) img.at(0, y, x) = float((x + y) % 2);
        const ImageTensor out = resize_bilinear(img, 2, 2);
        // align-corners-false: each output samples the center of a 2x2 block
        for (float v : out.data) CHECK(v == Approx(0.5).margin(1e-7));
    }

    SECTION("general downscale matches a direct sampling oracle") {
        const ImageTensor img = random_image(1, 8, 8, 5);
        const ImageTensor out = resize_bilinear(img, 4, 4);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) {
                // source coordinate (d + 0.5) * 2 - 0.5 lands mid-pixel
                const double fy = (y + 0.5) * 2.0 - 0.5;
                const double fx = (x + 0.5) * 2.0 - 0.5;
                const int y0 = int(fy), x0 = int(fx);
                const double wy = fy - y0, wx = fx - x0;
                const double expect =
                    (1 - wy) * ((1 - wx) * img.at(0, y0, x0) + wx * img.at(0, y0, x0 + 1)) +
                    wy * ((1 - wx) * img.at(0, y0 + 1, x0) + wx * img.at(0, y0 + 1, x0 + 1));
                CHECK(out.at(0, y, x) == Approx(expect).margin(1e-6));
            }
    }

    SECTION("zero target dimension is rejected") {
        const ImageTensor img(3, 4, 4, 0.1f);
        CHECK_THROWS_AS(resize_bilinear(img, 0, 4), InvalidDimensions);
        CHECK_THROWS_AS(resize_bilinear(img, 4, 0), InvalidDimensions);
    }

    SECTION("output stays inside [0,1] for random inputs") {
        const ImageTensor img = random_image(3, 7, 11, 31);
        for (auto [w, h] : {std::pair{4, 3}, {23, 17}}) {
            const ImageTensor out = resize_bilinear(img, w, h);
            for (float v : out.data) {
                CHECK(v >= 0.0f);
                CHECK(v <= 1.0f);
            }
        }
    }
}

TEST_CASE("equalize", "[image]") {
    SECTION("uniform histogram is a fixed point within quantization") {
        // 16x16 channel holding every 8-bit level exactly once
        ImageTensor img(3, 16, 16);
        for (int c = 0; c < 3; ++c)
            for (int i = 0; i < 256; ++i) img.data[std::size_t(c) * 256 + i] = float(i) / 255.0f;
        const ImageTensor out = equalize(img);
        for (std::size_t i = 0; i < img.data.size(); ++i)
            CHECK(std::fabs(out.data[i] - img.data[i]) <= 1.0f / 255.0f + 1e-6f);
    }

    SECTION("constant image is returned unchanged") {
        const ImageTensor img(3, 4, 4, 0.37f);
        const ImageTensor out = equalize(img);
        CHECK(out.data == img.data);
    }

    SECTION("four-level 2x2 channel matches the cdf remap by hand") {
        ImageTensor img(3, 2, 2);
        const float levels[4] = {0.0f, 85.0f / 255.0f, 170.0f / 255.0f, 1.0f};
        for (int c = 0; c < 3; ++c)
            for (int i = 0; i < 4; ++i) img.data[std::size_t(c) * 4 + i] = levels[i];
        const ImageTensor out = equalize(img);
        // cdf = {1,2,3,4}/4, cdf_min = 1: h = (cdf-1)/3
        const float expect[4] = {0.0f, 1.0f / 3.0f, 2.0f / 3.0f, 1.0f};
        for (int c = 0; c < 3; ++c)
            for (int i = 0; i < 4; ++i)
                CHECK(out.data[std::size_t(c) * 4 + i] == Approx(expect[i]).margin(1e-6));
    }

    SECTION("idempotent within 1/255 on non-degenerate images") {
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            const ImageTensor img = random_image(3, 24, 24, seed);
            const ImageTensor once = equalize(img);
            const ImageTensor twice = equalize(once);
            for (std::size_t i = 0; i < once.data.size(); ++i)
                CHECK(std::fabs(once.data[i] - twice.data[i]) <= 1.0f / 255.0f + 1e-6f);
        }
    }

    SECTION("output stays in [0,1]") {
        const ImageTensor out = equalize(random_image(3, 10, 10, 17));
        for (float v : out.data) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
}

TEST_CASE("to_grayscale", "[image]") {
    ImageTensor white(3, 1, 1, 1.0f);
    CHECK(to_grayscale(white).data[0] == Approx(1.0));

    ImageTensor black(3, 1, 1, 0.0f);
    CHECK(to_grayscale(black).data[0] == Approx(0.0));

    ImageTensor red(3, 1, 1);
    red.data = {1.0f, 0.0f, 0.0f};
    CHECK(to_grayscale(red).data[0] == Approx(0.299));

    ImageTensor gray(1, 2, 2, 0.5f);
    CHECK_THROWS_AS(to_grayscale(gray), AlreadyGray);
}

TEST_CASE("histogram_features", "[image]") {
    SECTION("constant image gives one spike per channel") {
        const ImageTensor img(3, 4, 4, 0.5f);
        const std::vector<float> h = histogram_features(img, 256);
        REQUIRE(h.size() == 3 * 256);
        for (int c = 0; c < 3; ++c) {
            double sum = 0.0;
            int nonzero = 0;
            for (int b = 0; b < 256; ++b) {
                sum += h[std::size_t(c) * 256 + b];
                nonzero += h[std::size_t(c) * 256 + b] > 0;
            }
            CHECK(sum == Approx(1.0));
            CHECK(nonzero == 1);
        }
    }

    SECTION("vector sums to channel count") {
        const ImageTensor img = random_image(3, 8, 8, 23);
        const std::vector<float> h = histogram_features(img, 32);
        double sum = 0.0;
        for (float v : h) sum += v;
        CHECK(sum == Approx(3.0));
    }

    SECTION("hand-counted 4-bin histogram") {
        ImageTensor img(1, 2, 2);
        img.data = {0.0f, 0.0f, 0.5f, 1.0f};
        const std::vector<float> h = histogram_features(img, 4);
        REQUIRE(h.size() == 4);
        CHECK(h[0] == Approx(0.5));
        CHECK(h[1] == Approx(0.0));
        CHECK(h[2] == Approx(0.25));
        CHECK(h[3] == Approx(0.25));
    }

    SECTION("bins below 2 are rejected") {
        CHECK_THROWS_AS(histogram_features(ImageTensor(3, 2, 2, 0.0f), 1), InvalidDimensions);
    }
}
