#pragma once

// Compression upper bounds on Kolmogorov complexity. True K is uncomputable;
// every number here is K-hat, an upper-bound proxy for a fixed codec.

#include "collectiva/core.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace collectiva::complexity {

/// Binary word as 0/1 bytes.
using BitWord = std::vector<std::uint8_t>;
using BitView = std::span<const std::uint8_t>;

/// Packs bits most-significant first; the last byte is zero-padded.
inline std::vector<std::uint8_t> pack_bits(BitView x) {
    std::vector<std::uint8_t> out((x.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80U >> (i % 8));
    return out;
}

inline BitWord unpack_bits(std::span<const std::uint8_t> bytes, std::size_t n) {
    if (bytes.size() * 8 < n) throw integrity_error("packed word shorter than its bit length");
    BitWord out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = (bytes[i / 8] >> (7 - i % 8)) & 1U;
    return out;
}

/// A lossless, deterministic compressor of binary words. The bit length is
/// not part of the compressed stream: it travels in the header (or out of
/// band, for the conditional estimate).
class Codec {
public:
    virtual ~Codec() = default;
    virtual std::string name() const = 0;
    virtual std::vector<std::uint8_t> compress(BitView x) const = 0;
    virtual BitWord decompress(std::span<const std::uint8_t> data, std::size_t n) const = 0;
};

/// Raw deflate (no zlib/gzip wrapper) of the packed bytes, level 9.
class DeflateCodec final : public Codec {
public:
    std::string name() const override { return "deflate"; }

    std::vector<std::uint8_t> compress(BitView x) const override {
        auto in = pack_bits(x);
        z_stream zs{};
        if (deflateInit2(&zs, 9, Z_DEFLATED, -15, 9, Z_DEFAULT_STRATEGY) != Z_OK)
            throw error("deflateInit2 failed");
        std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(in.size())));
        zs.next_in = in.data();
        zs.avail_in = static_cast<uInt>(in.size());
        zs.next_out = out.data();
        zs.avail_out = static_cast<uInt>(out.size());
        const int rc = deflate(&zs, Z_FINISH);
        out.resize(zs.total_out);
        deflateEnd(&zs);
        if (rc != Z_STREAM_END) throw error("deflate did not finish");
        return out;
    }

    BitWord decompress(std::span<const std::uint8_t> data, std::size_t n) const override {
        std::vector<std::uint8_t> out((n + 7) / 8);
        z_stream zs{};
        if (inflateInit2(&zs, -15) != Z_OK) throw error("inflateInit2 failed");
        std::vector<std::uint8_t> in(data.begin(), data.end());
        zs.next_in = in.data();
        zs.avail_in = static_cast<uInt>(in.size());
        zs.next_out = out.data();
        zs.avail_out = static_cast<uInt>(out.size());
        const int rc = inflate(&zs, Z_FINISH);
        const auto produced = zs.total_out;
        inflateEnd(&zs);
        if (rc != Z_STREAM_END || produced != out.size()) throw integrity_error("deflate stream corrupt");
        return unpack_bits(out, n);
    }
};

namespace detail {

// LZMA-style binary range coder with carry propagation through a cache byte.
constexpr unsigned prob_bits = 15;
constexpr std::uint32_t top = 1U << 24;

/// Krichevsky-Trofimov estimate of P(0) after c0 zeros and c1 ones,
/// quantized to prob_bits and kept away from 0 and 1.
inline std::uint32_t kt_p0(std::uint64_t c0, std::uint64_t c1) {
    constexpr std::uint64_t one = 1ULL << prob_bits;
    const std::uint64_t p = ((2 * c0 + 1) << prob_bits) / (2 * (c0 + c1) + 2);
    return static_cast<std::uint32_t>(std::clamp<std::uint64_t>(p, 1, one - 1));
}

class RangeEncoder {
public:
    void encode(unsigned bit, std::uint32_t p0) {
        const std::uint32_t bound = (range_ >> prob_bits) * p0;
        if (bit == 0) {
            range_ = bound;
        } else {
            low_ += bound;
            range_ -= bound;
        }
        while (range_ < top) {
            range_ <<= 8;
            shift_low();
        }
    }

    std::vector<std::uint8_t> finish() {
        for (int i = 0; i < 5; ++i) shift_low();
        return std::move(out_);
    }

private:
    void shift_low() {
        if (static_cast<std::uint32_t>(low_) < 0xFF000000U || (low_ >> 32) != 0) {
            std::uint8_t temp = cache_;
            do {
                out_.push_back(static_cast<std::uint8_t>(temp + (low_ >> 32)));
                temp = 0xFF;
            } while (--cache_size_ != 0);
            cache_ = static_cast<std::uint8_t>(low_ >> 24);
        }
        ++cache_size_;
        low_ = (low_ & 0x00FFFFFFU) << 8;
    }

    std::uint64_t low_ = 0;
    std::uint32_t range_ = 0xFFFFFFFFU;
    std::uint8_t cache_ = 0;
    std::uint64_t cache_size_ = 1;
    std::vector<std::uint8_t> out_;
};

class RangeDecoder {
public:
    explicit RangeDecoder(std::span<const std::uint8_t> in) : in_(in) {
        for (int i = 0; i < 5; ++i) code_ = (code_ << 8) | next();
    }

    unsigned decode(std::uint32_t p0) {
        const std::uint32_t bound = (range_ >> prob_bits) * p0;
        unsigned bit;
        if (code_ < bound) {
            range_ = bound;
            bit = 0;
        } else {
            code_ -= bound;
            range_ -= bound;
            bit = 1;
        }
        while (range_ < top) {
            range_ <<= 8;
            code_ = (code_ << 8) | next();
        }
        return bit;
    }

private:
    std::uint32_t next() { return pos_ < in_.size() ? in_[pos_++] : 0U; }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
    std::uint32_t code_ = 0;
    std::uint32_t range_ = 0xFFFFFFFFU;
};

}  // namespace detail

/// Adaptive order-0 binary arithmetic coder (KT estimator).
class ArithmeticCodec final : public Codec {
public:
    std::string name() const override { return "arith0"; }

    std::vector<std::uint8_t> compress(BitView x) const override {
        detail::RangeEncoder enc;
        std::uint64_t c[2] = {0, 0};
        for (auto b : x) {
            enc.encode(b, detail::kt_p0(c[0], c[1]));
            ++c[b & 1U];
        }
        return enc.finish();
    }

    BitWord decompress(std::span<const std::uint8_t> data, std::size_t n) const override {
        detail::RangeDecoder dec(data);
        std::uint64_t c[2] = {0, 0};
        BitWord out(n);
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = static_cast<std::uint8_t>(dec.decode(detail::kt_p0(c[0], c[1])));
            ++c[out[i]];
        }
        return out;
    }
};

inline std::shared_ptr<const Codec> make_codec(const std::string& name) {
    if (name == "deflate") return std::make_shared<DeflateCodec>();
    if (name == "arith0") return std::make_shared<ArithmeticCodec>();
    throw input_error("unknown codec '" + name + "' (available: deflate, arith0)");
}

inline std::shared_ptr<const Codec> default_codec() { return make_codec("deflate"); }

/// Length in bits of the Elias delta code for n >= 1:
/// floor(log2 n) + 2 floor(log2(floor(log2 n) + 1)) + 1.
inline std::uint64_t elias_delta_bits(std::uint64_t n) {
    if (n == 0) throw input_error("Elias delta code needs n >= 1");
    const std::uint64_t len = std::bit_width(n);
    return len - 1 + 2 * (std::bit_width(len) - 1) + 1;
}

struct ComplexityEstimate {
    std::uint64_t n = 0;            // word length in bits
    std::uint64_t bits = 0;         // K-hat
    std::uint64_t header_bits = 0;  // 0 for the conditional estimate
    std::string codec;
    double rate() const { return n == 0 ? 0.0 : static_cast<double>(bits) / static_cast<double>(n); }
};

namespace detail {

inline std::uint64_t body_bits(BitView x, const Codec& codec) {
    auto packed = codec.compress(x);
    if (codec.decompress(packed, x.size()) != BitWord(x.begin(), x.end()))
        throw integrity_error("codec " + codec.name() + " failed to round-trip");
    return 8 * static_cast<std::uint64_t>(packed.size());
}

}  // namespace detail

/// K-hat(x) = 8 * |compress(x)| + Elias delta code of n.
inline ComplexityEstimate estimate_K(BitView x, const Codec& codec) {
    if (x.empty()) throw input_error("complexity estimate needs a nonempty word");
    ComplexityEstimate e;
    e.n = x.size();
    e.header_bits = elias_delta_bits(e.n);
    e.bits = detail::body_bits(x, codec) + e.header_bits;
    e.codec = codec.name();
    return e;
}

/// K-hat(x; n): the length is known to the decoder, so the header is dropped.
inline ComplexityEstimate estimate_K_conditional(BitView x, std::uint64_t n, const Codec& codec) {
    if (x.size() != n) throw input_error("word length " + std::to_string(x.size()) + " differs from n = " + std::to_string(n));
    if (x.empty()) throw input_error("complexity estimate needs a nonempty word");
    ComplexityEstimate e;
    e.n = n;
    e.bits = detail::body_bits(x, codec);
    e.codec = codec.name();
    return e;
}

struct RatePoint {
    std::uint64_t n;
    std::uint64_t bits;
    double rate;
};

inline std::vector<RatePoint> complexity_rate_curve(BitView x, const std::vector<std::uint64_t>& lengths, const Codec& codec) {
    std::vector<RatePoint> curve;
    std::uint64_t prev = 0;
    for (auto n : lengths) {
        if (n <= prev) throw input_error("prefix lengths must be increasing and positive");
        if (n > x.size()) throw input_error("prefix length beyond the word");
        prev = n;
        auto e = estimate_K(x.first(n), codec);
        curve.push_back({n, e.bits, e.rate()});
    }
    return curve;
}

/// Prefix lengths n with K-hat(x_{1:n}; n) < n - log2 n. Since K <= K-hat up
/// to the codec constant, each hit is a genuine dip; no hits is inconclusive.
inline std::vector<std::uint64_t> martin_lof_dip_scan(BitView x, const std::vector<std::uint64_t>& lengths, const Codec& codec) {
    std::vector<std::uint64_t> dips;
    for (auto n : lengths) {
        if (n < 2) throw input_error("dip scan needs prefix lengths >= 2");
        if (n > x.size()) throw input_error("prefix length beyond the word");
        auto e = estimate_K_conditional(x.first(n), n, codec);
        if (static_cast<double>(e.bits) < static_cast<double>(n) - std::log2(static_cast<double>(n))) dips.push_back(n);
    }
    return dips;
}

/// Powers of two 2^lo .. 2^hi that fit in n.
inline std::vector<std::uint64_t> dyadic_lengths(std::uint64_t n, unsigned lo = 6, unsigned hi = 20) {
    std::vector<std::uint64_t> out;
    for (unsigned k = lo; k <= hi && (1ULL << k) <= n; ++k) out.push_back(1ULL << k);
    return out;
}

/// max over ordered pairs of K-hat(xy) - K-hat(x) - K-hat(y).
inline std::int64_t subadditivity_constant(const std::vector<BitWord>& corpus, const Codec& codec) {
    std::vector<std::int64_t> k;
    for (const auto& w : corpus) k.push_back(static_cast<std::int64_t>(estimate_K(w, codec).bits));
    std::int64_t c = INT64_MIN;
    for (std::size_t i = 0; i < corpus.size(); ++i)
        for (std::size_t j = 0; j < corpus.size(); ++j) {
            BitWord xy = corpus[i];
            xy.insert(xy.end(), corpus[j].begin(), corpus[j].end());
            c = std::max(c, static_cast<std::int64_t>(estimate_K(xy, codec).bits) - k[i] - k[j]);
        }
    return c;
}

struct CodecComparison {
    std::string a, b;
    std::int64_t a_over_b = 0;  // max K_a - K_b
    std::int64_t b_over_a = 0;  // max K_b - K_a
    std::int64_t max_abs() const { return std::max(a_over_b, b_over_a); }
};

/// Measured constants C with K_a <= K_b + C and K_b <= K_a + C' over the corpus.
inline CodecComparison codec_invariance(const std::vector<BitWord>& corpus, const Codec& a, const Codec& b) {
    CodecComparison c{a.name(), b.name(), INT64_MIN, INT64_MIN};
    for (const auto& w : corpus) {
        const auto ka = static_cast<std::int64_t>(estimate_K(w, a).bits);
        const auto kb = static_cast<std::int64_t>(estimate_K(w, b).bits);
        c.a_over_b = std::max(c.a_over_b, ka - kb);
        c.b_over_a = std::max(c.b_over_a, kb - ka);
    }
    return c;
}

}  // namespace collectiva::complexity
