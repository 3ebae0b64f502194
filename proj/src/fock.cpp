#include "bhsse/fock.hpp"

#include <limits>
#include <numeric>

namespace bhsse {

std::size_t FockBasis::dimension(int L, int N) {
  // binomial(N + L - 1, N); saturates instead of overflowing
  const int n = N + L - 1;
  const int k = std::min(N, L - 1);
  std::size_t r = 1;
  for (int i = 1; i <= k; ++i) {
    if (r > (std::size_t{1} << 62) / static_cast<std::size_t>(n)) {
      return std::numeric_limits<std::size_t>::max();
    }
    r = r * static_cast<std::size_t>(n - k + i) / i;
  }
  return r;
}

FockBasis::FockBasis(int L, int N, std::size_t dimension_cap) : L_(L), N_(N) {
  if (L < 1) throw std::invalid_argument("FockBasis: L must be >= 1");
  if (N < 0) throw std::invalid_argument("FockBasis: N must be >= 0");
  std::size_t dim = dimension(L, N);
  if (dim > dimension_cap) {
    throw CapacityError("FockBasis: dimension " + std::to_string(dim) +
                        " exceeds cap " + std::to_string(dimension_cap) +
                        " for L=" + std::to_string(L) + ", N=" + std::to_string(N));
  }
  states_.reserve(dim);
  index_.reserve(dim);

  FockState s(L, 0);
  s[0] = N;
  while (true) {
    index_.emplace(s, states_.size());
    states_.push_back(s);
    // next state in descending lexicographic order: decrement the rightmost
    // movable occupation and push the remainder one site further
    int k = L - 2;
    while (k >= 0 && s[k] == 0) --k;
    if (k < 0) break;
    s[k] -= 1;
    int placed = std::accumulate(s.begin(), s.begin() + k + 1, 0);
    s[k + 1] = N - placed;
    for (int i = k + 2; i < L; ++i) s[i] = 0;
  }
}

std::size_t FockBasis::index(const FockState& s) const {
  if (static_cast<int>(s.size()) != L_) {
    throw InvalidStateError("state_index: state has length " + std::to_string(s.size()) +
                            ", basis has L=" + std::to_string(L_));
  }
  int total = 0;
  for (int n : s) {
    if (n < 0) throw InvalidStateError("state_index: negative occupation");
    total += n;
  }
  if (total != N_) {
    throw InvalidStateError("state_index: particle sum " + std::to_string(total) +
                            " != N=" + std::to_string(N_));
  }
  auto it = index_.find(s);
  if (it == index_.end()) throw InvalidStateError("state_index: state not in basis");
  return it->second;
}

}  // namespace bhsse
