#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fastbcd/instance_io.hpp"
#include "testutil.hpp"

#include <sstream>

using namespace fastbcd;

namespace {

std::string to_bytes(const Instance& inst) {
    std::ostringstream os(std::ios::binary);
    save_instance(inst, os);
    return os.str();
}

Instance from_bytes(const std::string& bytes) {
    std::istringstream is(bytes, std::ios::binary);
    return load_instance(is);
}

} // namespace

TEST_CASE("round trip is bit exact") {
    const Instance inst =
        generate_instance(GenKind::P1, 32, 8, 0.25, 0.5, 1e-3, 77);
    const Instance back = from_bytes(to_bytes(inst));
    CHECK((back.A.array() == inst.A.array()).all());
    CHECK((back.b.array() == inst.b.array()).all());
    REQUIRE(back.x_true.has_value());
    CHECK((back.x_true->array() == inst.x_true->array()).all());
    CHECK(back.tau == inst.tau);
    CHECK(back.seed == inst.seed);
    CHECK(back.rho == inst.rho);
    CHECK(back.noise_var == inst.noise_var);
    CHECK(back.kind == GenKind::P1);

    // Saving the loaded copy reproduces the same bytes.
    CHECK(to_bytes(back) == to_bytes(inst));
}

TEST_CASE("round trip without x_true") {
    Xoshiro256ss rng(5);
    Instance inst = testutil::make_random_instance(6, 9, rng);
    const Instance back = from_bytes(to_bytes(inst));
    CHECK_FALSE(back.x_true.has_value());
    CHECK((back.A.array() == inst.A.array()).all());
    CHECK(back.tau == inst.tau);
}

TEST_CASE("regenerating with one seed yields identical file bytes") {
    const Instance a = generate_instance(GenKind::P1, 48, 12, 0.3, 0.5, 1e-3, 4);
    const Instance b = generate_instance(GenKind::P1, 48, 12, 0.3, 0.5, 1e-3, 4);
    CHECK(to_bytes(a) == to_bytes(b));
}

TEST_CASE("corrupted magic bytes") {
    const Instance inst =
        generate_instance(GenKind::P2, 16, 4, 0.5, 0.5, 1e-3, 3);
    std::string bytes = to_bytes(inst);
    bytes[0] = 'X';
    CHECK_THROWS_AS(from_bytes(bytes), FormatError);
}

TEST_CASE("payload shorter than the header implies") {
    const Instance inst =
        generate_instance(GenKind::P2, 16, 4, 0.5, 0.5, 1e-3, 3);
    std::string bytes = to_bytes(inst);
    bytes.resize(bytes.size() - 64);
    CHECK_THROWS_AS(from_bytes(bytes), FormatError);
}

TEST_CASE("checksum mismatch") {
    const Instance inst =
        generate_instance(GenKind::P2, 16, 4, 0.5, 0.5, 1e-3, 3);
    std::string bytes = to_bytes(inst);
    bytes[bytes.size() - 20] ^= 0x40; // flip a payload bit
    CHECK_THROWS_AS(from_bytes(bytes), FormatError);
}

TEST_CASE("trailing bytes rejected") {
    const Instance inst =
        generate_instance(GenKind::P2, 16, 4, 0.5, 0.5, 1e-3, 3);
    std::string bytes = to_bytes(inst) + "junk";
    CHECK_THROWS_AS(from_bytes(bytes), FormatError);
}

TEST_CASE("crc32 reference values") {
    // Known vector: CRC32("123456789") = 0xCBF43926.
    const unsigned char digits[] = {'1', '2', '3', '4', '5', '6', '7', '8', '9'};
    CHECK(crc32(digits, 9) == 0xCBF43926u);
    CHECK(crc32(digits, 0) == 0u);
}
