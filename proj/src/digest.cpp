#include "sapiens/digest.hpp"

#include <cstring>

namespace sapiens {

namespace {

constexpr std::uint32_t kInit[8] = {
    0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
    0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19,
};

constexpr std::uint32_t kRound[64] = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
    0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
    0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
    0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
    0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
    0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
    0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
    0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
    0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2,
};

inline std::uint32_t rotr(std::uint32_t x, int n) {
    return (x >> n) | (x << (32 - n));
}

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

}  // namespace

Sha256::Sha256() {
    std::memcpy(state_, kInit, sizeof(state_));
}

void Sha256::process_block(const std::uint8_t* block) {
    std::uint32_t w[64];
    for (int i = 0; i < 16; ++i) {
        w[i] = (std::uint32_t(block[i * 4]) << 24) | (std::uint32_t(block[i * 4 + 1]) << 16) |
               (std::uint32_t(block[i * 4 + 2]) << 8) | std::uint32_t(block[i * 4 + 3]);
    }
    for (int i = 16; i < 64; ++i) {
        std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
        std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
        w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }

    std::uint32_t a = state_[0], b = state_[1], c = state_[2], d = state_[3];
    std::uint32_t e = state_[4], f = state_[5], g = state_[6], h = state_[7];

    for (int i = 0; i < 64; ++i) {
        std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
        std::uint32_t ch = (e & f) ^ (~e & g);
        std::uint32_t t1 = h + s1 + ch + kRound[i] + w[i];
        std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
        std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
        std::uint32_t t2 = s0 + maj;
        h = g;
        g = f;
        f = e;
        e = d + t1;
        d = c;
        c = b;
        b = a;
        a = t1 + t2;
    }

    state_[0] += a;
    state_[1] += b;
    state_[2] += c;
    state_[3] += d;
    state_[4] += e;
    state_[5] += f;
    state_[6] += g;
    state_[7] += h;
}

void Sha256::update(const std::uint8_t* data, std::size_t len) {
    total_len_ += len;
    while (len > 0) {
        std::size_t take = std::min(len, sizeof(buffer_) - buffer_len_);
        std::memcpy(buffer_ + buffer_len_, data, take);
        buffer_len_ += take;
        data += take;
        len -= take;
        if (buffer_len_ == sizeof(buffer_)) {
            process_block(buffer_);
            buffer_len_ = 0;
        }
    }
}

void Sha256::update(std::string_view text) {
    update(reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
}

Digest Sha256::finalize() {
    std::uint64_t bit_len = total_len_ * 8;
    const std::uint8_t pad = 0x80;
    update(&pad, 1);
    const std::uint8_t zero = 0x00;
    while (buffer_len_ != 56) {
        update(&zero, 1);
    }
    std::uint8_t len_be[8];
    for (int i = 0; i < 8; ++i) {
        len_be[i] = std::uint8_t(bit_len >> (56 - 8 * i));
    }
    // bypass total_len_ accounting for the trailer
    std::memcpy(buffer_ + buffer_len_, len_be, 8);
    buffer_len_ += 8;
    process_block(buffer_);
    buffer_len_ = 0;

    Digest out;
    for (int i = 0; i < 8; ++i) {
        out[i * 4] = std::uint8_t(state_[i] >> 24);
        out[i * 4 + 1] = std::uint8_t(state_[i] >> 16);
        out[i * 4 + 2] = std::uint8_t(state_[i] >> 8);
        out[i * 4 + 3] = std::uint8_t(state_[i]);
    }
    return out;
}

Digest Sha256::hash(std::string_view text) {
    Sha256 h;
    h.update(text);
    return h.finalize();
}

Digest Sha256::hash(const std::uint8_t* data, std::size_t len) {
    Sha256 h;
    h.update(data, len);
    return h.finalize();
}

std::string to_hex(const Digest& d) {
    static const char* kHex = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (std::uint8_t b : d) {
        out.push_back(kHex[b >> 4]);
        out.push_back(kHex[b & 0x0f]);
    }
    return out;
}

std::optional<Digest> digest_from_hex(std::string_view hex) {
    if (hex.size() != 64) {
        return std::nullopt;
    }
    Digest d{};
    for (std::size_t i = 0; i < 32; ++i) {
        auto nibble = [](char c) -> int {
            if (c >= '0' && c <= '9') return c - '0';
            if (c >= 'a' && c <= 'f') return c - 'a' + 10;
            if (c >= 'A' && c <= 'F') return c - 'A' + 10;
            return -1;
        };
        int hi = nibble(hex[i * 2]);
        int lo = nibble(hex[i * 2 + 1]);
        if (hi < 0 || lo < 0) {
            return std::nullopt;
        }
        d[i] = std::uint8_t(hi << 4 | lo);
    }
    return d;
}

int leading_zero_bits(const Digest& d) {
    int bits = 0;
    for (std::uint8_t byte : d) {
        if (byte == 0) {
            bits += 8;
            continue;
        }
        for (int i = 7; i >= 0; --i) {
            if (byte & (1u << i)) {
                return bits;
            }
            ++bits;
        }
    }
    return bits;
}

void CanonicalWriter::u8(std::uint8_t v) {
    bytes_.push_back(v);
}

void CanonicalWriter::u32(std::uint32_t v) {
    for (int i = 3; i >= 0; --i) {
        bytes_.push_back(std::uint8_t(v >> (8 * i)));
    }
}

void CanonicalWriter::u64(std::uint64_t v) {
    for (int i = 7; i >= 0; --i) {
        bytes_.push_back(std::uint8_t(v >> (8 * i)));
    }
}

void CanonicalWriter::str(std::string_view s) {
    u32(std::uint32_t(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
}

void CanonicalWriter::digest(const Digest& d) {
    bytes_.insert(bytes_.end(), d.begin(), d.end());
}

void CanonicalWriter::raw(const std::uint8_t* data, std::size_t len) {
    bytes_.insert(bytes_.end(), data, data + len);
}

Digest CanonicalWriter::sha256() const {
    return Sha256::hash(bytes_.data(), bytes_.size());
}

std::uint64_t stable_hash64(std::uint64_t run_seed, std::string_view domain,
                            std::initializer_list<std::string_view> keys) {
    // FNV-1a over the canonical key layout, then a splitmix-style finisher.
    std::uint64_t h = 1469598103934665603ULL;
    auto feed = [&h](std::uint8_t b) {
        h ^= b;
        h *= 1099511628211ULL;
    };
    for (int i = 7; i >= 0; --i) {
        feed(std::uint8_t(run_seed >> (8 * i)));
    }
    feed(0x1f);
    for (char c : domain) {
        feed(std::uint8_t(c));
    }
    for (std::string_view key : keys) {
        feed(0x1f);
        for (char c : key) {
            feed(std::uint8_t(c));
        }
    }
    return mix64(h);
}

double unit_draw(std::uint64_t run_seed, std::string_view domain,
                 std::initializer_list<std::string_view> keys) {
    std::uint64_t h = stable_hash64(run_seed, domain, keys);
    // top 53 bits -> [0,1)
    return double(h >> 11) * 0x1.0p-53;
}

}  // namespace sapiens
