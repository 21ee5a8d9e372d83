#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace iyow {

// Seeded generator with distribution code written out by hand so that draws
// are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform integer on [0, n). Requires n > 0.
  std::size_t index(std::size_t n);
  double normal();
  // k distinct indices from [0, n), in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample(std::size_t n, std::size_t k);
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t fnv1a64(std::string_view data);
std::uint64_t splitmix64(std::uint64_t x);
// Per-purpose seed: the same (seed, label) always yields the same stream and
// new labels never shift existing ones.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
// Writes through a temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);
bool contains_ci(std::string_view haystack, std::string_view needle);
std::string replace_all(std::string s, std::string_view from, std::string_view to);
std::vector<std::string> split(std::string_view s, char sep);

// Shortest text that parses back to the same double.
std::string format_double(double v);
// Fixed significant digits, for human-facing reports.
std::string format_sig(double v, int digits = 3);

// Minimal RFC 4180 CSV.
std::string csv_escape(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

// Runs body(i) for i in [0, n) on up to max_workers threads. The first
// exception thrown by any worker is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t max_workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace iyow
