#pragma once
// Shared low-level helpers: error type, stable hashing, portable seeded RNG,
// string utilities, atomic file writes.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sciq {

/// Library-wide exception carrying a stable machine-readable code
/// (e.g. "UnknownSubdomain", "BackendUnavailable") plus a human message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// ---------------------------------------------------------------------------
// Stable hashing (FNV-1a). Used for cache keys, request fingerprints and
// shuffle seed derivation; the algorithm is fixed so values are identical
// across platforms and runs.
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

struct Fnv1a {
    std::uint64_t state = kFnvOffset;

    void update(std::string_view bytes) {
        for (unsigned char c : bytes) {
            state ^= c;
            state *= kFnvPrime;
        }
    }

    void update_u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            state ^= static_cast<unsigned char>(v >> (i * 8));
            state *= kFnvPrime;
        }
    }

    // Field separator so {"ab","c"} and {"a","bc"} hash differently.
    void sep() { update_u64(0x1f1f1f1f1f1f1f1fULL); }

    std::uint64_t digest() const { return state; }
};

std::uint64_t fnv1a64(std::string_view bytes);

/// 128-bit stable hash rendered as 32 lowercase hex chars. Two independent
/// FNV-1a passes over the '\x1f'-joined parts.
std::string stable_hash_hex(const std::vector<std::string>& parts);

/// Canonical text form of a double for hashing ("%.17g", round-trippable).
std::string canonical_double(double v);

// ---------------------------------------------------------------------------
// Portable randomness. std::mt19937_64 output is fully specified by the
// standard; distributions are not, so bounded draws use explicit rejection
// sampling. All seeded sampling in the library goes through these helpers.
// ---------------------------------------------------------------------------

inline std::mt19937_64 seeded_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

/// Uniform integer in [0, n). Unbiased via rejection; deterministic for a
/// fixed engine state. n must be >= 1.
std::uint64_t bounded_uniform(std::mt19937_64& rng, std::uint64_t n);

/// Derive an independent stream seed from (seed, key [, k2]).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key, std::uint64_t k2 = 0);

/// In-place Fisher-Yates shuffle driven by bounded_uniform.
template <typename T>
void portable_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(bounded_uniform(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

/// First k elements of a seeded uniform draw without replacement from [0, n).
/// Order of the result is selection order.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Strings
// ---------------------------------------------------------------------------

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

/// Collapse all whitespace runs to single spaces and trim the ends.
std::string normalize_ws(std::string_view s);

/// Whitespace-delimited word count.
std::size_t word_count(std::string_view s);

std::vector<std::string> split_lines(std::string_view text);

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path);

/// Write-temp-then-rename so readers never observe a torn file.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace sciq
