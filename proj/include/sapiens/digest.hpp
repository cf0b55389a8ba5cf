#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sapiens {

// 256-bit digest. The chain uses a single digest algorithm, named in the
// ledger dump header ("sha-256") so dumps are self-describing.
using Digest = std::array<std::uint8_t, 32>;

inline constexpr Digest kZeroDigest{};

// Streaming SHA-256 (FIPS 180-4).
class Sha256 {
public:
    Sha256();

    void update(const std::uint8_t* data, std::size_t len);
    void update(std::string_view text);
    Digest finalize();

    static Digest hash(std::string_view text);
    static Digest hash(const std::uint8_t* data, std::size_t len);

private:
    void process_block(const std::uint8_t* block);

    std::uint32_t state_[8];
    std::uint64_t total_len_ = 0;
    std::uint8_t buffer_[64];
    std::size_t buffer_len_ = 0;
};

std::string to_hex(const Digest& d);
std::optional<Digest> digest_from_hex(std::string_view hex);

// Number of leading zero bits in the digest (for work-proof checks).
int leading_zero_bits(const Digest& d);

// Canonical byte encoder used for everything that gets digested.
// Layout rules: fixed-width big-endian integers, strings as u32 length
// prefix + UTF-8 bytes, digests as raw 32 bytes. See docs/FORMATS.md.
class CanonicalWriter {
public:
    void u8(std::uint8_t v);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void str(std::string_view s);
    void digest(const Digest& d);
    void raw(const std::uint8_t* data, std::size_t len);

    const std::vector<std::uint8_t>& bytes() const { return bytes_; }
    Digest sha256() const;

private:
    std::vector<std::uint8_t> bytes_;
};

// Deterministic, order-independent draws. Keyed hashing rather than a
// sequential generator so that reordering evaluation never changes a draw.
std::uint64_t stable_hash64(std::uint64_t run_seed, std::string_view domain,
                            std::initializer_list<std::string_view> keys);

// Uniform draw in [0, 1) from the same keyed hash.
double unit_draw(std::uint64_t run_seed, std::string_view domain,
                 std::initializer_list<std::string_view> keys);

}  // namespace sapiens
