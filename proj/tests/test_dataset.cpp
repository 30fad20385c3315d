#include <doctest.h>

#include <fstream>

#include "aiq/dataset.hpp"
#include "test_support.hpp"

using namespace aiq;

TEST_CASE("synthetic dataset is deterministic") {
    SyntheticConfig cfg;
    cfg.seed = 7;
    cfg.n = 512;
    Dataset a = synthetic_dataset(cfg);
    Dataset b = synthetic_dataset(cfg);
    CHECK(a.n == 512);
    CHECK(a.images == b.images);  // identical bytes across runs
    CHECK(a.labels == b.labels);

    cfg.seed = 8;
    Dataset c = synthetic_dataset(cfg);
    CHECK(a.images != c.images);

    // labels are balanced round-robin
    std::vector<int> counts(static_cast<size_t>(a.num_classes), 0);
    for (uint16_t l : a.labels) counts[l]++;
    for (int count : counts) CHECK(count >= 51);
}

TEST_CASE("aiqd round trip") {
    auto dir = test::temp_dir("aiqd");
    SyntheticConfig cfg;
    cfg.n = 64;
    Dataset data = synthetic_dataset(cfg);
    save_aiqd(data, (dir / "d.aiqd").string());
    Dataset loaded = load_aiqd((dir / "d.aiqd").string());
    CHECK(loaded.n == data.n);
    CHECK(loaded.c == data.c);
    CHECK(loaded.h == data.h);
    CHECK(loaded.w == data.w);
    CHECK(loaded.images == data.images);
    CHECK(loaded.labels == data.labels);

    SUBCASE("truncated file raises MalformedFile") {
        std::ifstream in((dir / "d.aiqd").string(), std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        std::ofstream out((dir / "cut.aiqd").string(), std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
        out.close();
        try {
            load_aiqd((dir / "cut.aiqd").string());
            FAIL("expected MalformedFile");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MalformedFile);
        }
    }
}

namespace {

void write_be32(std::ofstream& out, uint32_t v) {
    uint8_t b[4] = {static_cast<uint8_t>(v >> 24), static_cast<uint8_t>(v >> 16),
                    static_cast<uint8_t>(v >> 8), static_cast<uint8_t>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

TEST_CASE("idx loader") {
    auto dir = test::temp_dir("idx");
    const int n = 10, h = 28, w = 28;

    {
        std::ofstream img((dir / "img.idx").string(), std::ios::binary);
        write_be32(img, 0x00000803u);
        write_be32(img, n);
        write_be32(img, h);
        write_be32(img, w);
        std::vector<uint8_t> pix(static_cast<size_t>(n) * h * w);
        for (size_t i = 0; i < pix.size(); ++i) pix[i] = static_cast<uint8_t>(i % 251);
        img.write(reinterpret_cast<const char*>(pix.data()), static_cast<std::streamsize>(pix.size()));
    }
    {
        std::ofstream lab((dir / "lab.idx").string(), std::ios::binary);
        write_be32(lab, 0x00000801u);
        write_be32(lab, n);
        for (int i = 0; i < n; ++i) {
            uint8_t l = static_cast<uint8_t>(i % 10);
            lab.write(reinterpret_cast<const char*>(&l), 1);
        }
    }

    Dataset data = load_idx((dir / "img.idx").string(), (dir / "lab.idx").string());
    CHECK(data.n == n);
    CHECK(data.c == 1);
    CHECK(data.h == h);
    CHECK(data.w == w);
    // default normalization (x/255 - 0.5) / 0.5
    CHECK(data.images[0] == doctest::Approx(-1.0f));
    CHECK(data.labels[3] == 3);

    SUBCASE("wrong magic") {
        try {
            load_idx((dir / "lab.idx").string(), (dir / "lab.idx").string());
            FAIL("expected MalformedFile");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MalformedFile);
        }
    }

    SUBCASE("truncated payload") {
        std::ofstream img((dir / "short.idx").string(), std::ios::binary);
        write_be32(img, 0x00000803u);
        write_be32(img, n);
        write_be32(img, h);
        write_be32(img, w);
        img.write("abc", 3);
        img.close();
        try {
            load_idx((dir / "short.idx").string(), (dir / "lab.idx").string());
            FAIL("expected MalformedFile");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MalformedFile);
        }
    }
}

TEST_CASE("eval subset selection") {
    SyntheticConfig cfg;
    cfg.n = 100;
    Dataset data = synthetic_dataset(cfg);

    auto full = eval_subset(data, 0, 17);
    CHECK(full.size() == 100);
    CHECK(full[42] == 42);

    auto sub = eval_subset(data, 20, 17);
    CHECK(sub.size() == 20);
    CHECK(sub == eval_subset(data, 20, 17));  // deterministic
    CHECK(sub != eval_subset(data, 20, 18));
    // indices unique
    std::vector<uint32_t> sorted = sub;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
}
