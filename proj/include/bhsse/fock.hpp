#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace bhsse {

// Occupation-number state of L sites with a fixed total particle number.
using FockState = std::vector<int>;

struct FockStateHash {
  std::size_t operator()(const FockState& s) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int n : s) {
      h ^= static_cast<std::uint64_t>(n) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

class CapacityError : public std::runtime_error {
 public:
  explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

class InvalidStateError : public std::runtime_error {
 public:
  explicit InvalidStateError(const std::string& msg) : std::runtime_error(msg) {}
};

// Fixed-(L, N) bosonic basis, enumerated in reverse-lexicographic order on
// the occupation tuples: (N,0,...,0) first, (0,...,0,N) last. Immutable
// after construction; concurrent reads are safe.
class FockBasis {
 public:
  FockBasis(int L, int N, std::size_t dimension_cap = kDefaultDimensionCap);

  int sites() const { return L_; }
  int particles() const { return N_; }
  std::size_t size() const { return states_.size(); }
  const FockState& state(std::size_t k) const { return states_[k]; }
  const std::vector<FockState>& states() const { return states_; }

  // Position of s in the enumeration; throws InvalidStateError for a state
  // with the wrong length or particle sum.
  std::size_t index(const FockState& s) const;

  static std::size_t dimension(int L, int N);

  static constexpr std::size_t kDefaultDimensionCap = 200000;

 private:
  int L_;
  int N_;
  std::vector<FockState> states_;
  std::unordered_map<FockState, std::size_t, FockStateHash> index_;
};

inline FockBasis enumerate_basis(int L, int N,
                                 std::size_t dimension_cap = FockBasis::kDefaultDimensionCap) {
  return FockBasis(L, N, dimension_cap);
}

inline std::size_t state_index(const FockBasis& basis, const FockState& s) {
  return basis.index(s);
}

}  // namespace bhsse
