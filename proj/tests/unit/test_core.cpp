#include "doctest.h"

#include "sf/core/adam.h"
#include "sf/core/error.h"
#include "sf/core/image.h"
#include "sf/core/parallel.h"
#include "sf/core/rng.h"
#include "sf/io/image_io.h"

#include <cmath>
#include <filesystem>

using namespace sf;

TEST_CASE("srgb transfer round trip") {
    for (int i = 0; i <= 100; ++i) {
        const double v = i / 100.0;
        CHECK(linear_to_srgb(srgb_to_linear(v)) == doctest::Approx(v).epsilon(1e-12));
    }
    CHECK(srgb_to_linear(0.0) == 0.0);
    CHECK(srgb_to_linear(1.0) == doctest::Approx(1.0));
}

TEST_CASE("psnr of identical images is infinite, unit error gives 0 dB") {
    Image a(4, 4, 3, 0.25), b(4, 4, 3, 0.25);
    CHECK(std::isinf(psnr(a, b)));
    Image c(4, 4, 3, 1.25);
    CHECK(psnr(a, c) == doctest::Approx(0.0));
}

TEST_CASE("rng state round trip continues the stream") {
    Rng a(42);
    for (int i = 0; i < 10; ++i)
        a.uniform();
    Rng b;
    b.set_state(a.state());
    for (int i = 0; i < 100; ++i)
        CHECK(a.next_u64() == b.next_u64());
    CHECK_THROWS_AS(b.set_state("garbage"), Error);
}

TEST_CASE("sample streams are keyed by seed and stream id") {
    SampleStream a(1, 7), b(1, 7), c(1, 8), d(2, 7);
    const double x = a.next();
    CHECK(x == b.next());
    CHECK(x != c.next());
    CHECK(x != d.next());
}

TEST_CASE("parallel_for visits every index once and rethrows") {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits)
        CHECK(h == 1);
    CHECK_THROWS(parallel_for(10, [](std::size_t i) {
        if (i == 3)
            throw std::runtime_error("boom");
    }));
}

TEST_CASE("adam first step moves by lr against the gradient sign") {
    // With bias correction the first update is lr * g / (|g| + eps).
    Adam adam(3);
    std::vector<double> p{1.0, 1.0, 1.0}, g{0.5, -2.0, 0.0};
    adam.step(p, g, 0.1);
    CHECK(p[0] == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)));
    CHECK(p[1] == doctest::Approx(1.0 + 0.1 * 2.0 / (2.0 + 1e-8)));
    CHECK(p[2] == 1.0);
    CHECK(adam.first_moment()[2] == 0.0);
}

TEST_CASE("adam minimizes a quadratic") {
    Adam adam(1);
    std::vector<double> p{3.0}, g(1);
    for (int i = 0; i < 2000; ++i) {
        g[0] = 2 * (p[0] - 1.0);
        adam.step(p, g, 0.01);
    }
    CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("png round trip quantizes to 8 bits") {
    Image img(5, 3, 3);
    for (std::size_t i = 0; i < img.data().size(); ++i)
        img.data()[i] = (i % 17) / 16.0;
    const Image back = io::decode_png(io::encode_png(img));
    REQUIRE(back.same_shape(img));
    for (std::size_t i = 0; i < img.data().size(); ++i)
        CHECK(std::abs(back.data()[i] - img.data()[i]) <= 0.5 / 255 + 1e-12);
}

TEST_CASE("exr round trip is lossless for float-representable values") {
    Image img(7, 4, 5);
    for (std::size_t i = 0; i < img.data().size(); ++i)
        img.data()[i] = static_cast<float>(0.1 * i - 3.0);
    std::vector<std::string> names;
    const Image back = io::decode_exr(io::encode_exr(img, {"R", "G", "B", "roughness", "metalness"}), &names);
    REQUIRE(back.same_shape(img));
    const int order[5] = {0, 1, 2, 4, 3};
    bool same = true;
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 7; ++x)
            for (int c = 0; c < 5; ++c)
                same = same && back.at(x, y, c) == img.at(x, y, order[c]);
    CHECK(same);
    CHECK(names == std::vector<std::string>{"R", "G", "B", "metalness", "roughness"});
}

TEST_CASE("base64 and crc32 match known vectors") {
    CHECK(io::base64_encode("foobar") == "Zm9vYmFy");
    CHECK(io::base64_encode("fo") == "Zm8=");
    CHECK(io::base64_decode("Zm9vYg==") == "foob");
    CHECK_THROWS_AS(io::base64_decode("Zm9v!"), Error);
    CHECK(io::crc32("123456789") == 0xCBF43926u);
}

TEST_CASE("error categories render as stable tokens") {
    CHECK(to_string(ErrorKind::InvalidInput) == "invalid-input");
    CHECK(to_string(ErrorKind::Unavailable) == "unavailable");
    CHECK(to_string(ErrorKind::Corrupt) == "corrupt");
}
