#pragma once

// Lattice indices on Z^n, packed keys and truncation boxes.
//
// A mode k = (k_1, ..., k_n) is packed into a 64-bit key holding 16 bits per
// coordinate (offset by 2^15, k_1 in the most significant slot), so integer
// order on keys is lexicographic order on modes. This caps n at 4 and
// |k_i| at 32767.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace nctori {

using Index = std::vector<int>;
using Key = std::uint64_t;

inline constexpr int kMaxDim = 4;
inline constexpr int kMaxCoord = 32767;

Key pack(std::span<const int> k);
void unpack(Key key, int n, std::span<int> out);
Index unpack(Key key, int n);

/// Key of the zero mode for dimension n.
Key zero_key(int n);
/// pack(k + l) computed directly on keys.
Key key_add(Key a, Key b, int n);
/// pack(-k).
Key key_neg(Key a, int n);

int linf_norm(std::span<const int> k);
double euclid_norm_sq(std::span<const int> k);
int linf_norm(Key key, int n);

std::string to_string(std::span<const int> k);

/// Box radius and the margin reserved for product spillover.
struct Truncation {
  int K = 8;
  int margin = 2;

  /// Radius of the trusted inner window, K - margin.
  int inner() const { return K - margin; }
  void validate() const;
};

/// Modes with |k|_inf <= K, enumerated in lexicographic order of
/// (k_1, ..., k_n). Position of k is sum_i (k_i + K) (2K+1)^(n-1-i).
class BoxBasis {
 public:
  BoxBasis(int n, int K);

  int dim() const { return n_; }
  int radius() const { return K_; }
  std::size_t size() const { return keys_.size(); }
  Key key(std::size_t pos) const { return keys_[pos]; }
  const std::vector<Key>& keys() const { return keys_; }
  std::span<const int> coords(std::size_t pos) const {
    return {coords_.data() + pos * n_, static_cast<std::size_t>(n_)};
  }
  std::optional<std::size_t> position(std::span<const int> k) const;
  std::optional<std::size_t> position(Key key) const;
  /// Positions of the modes with |k|_inf <= r, in basis order.
  std::vector<std::size_t> window(int r) const;

 private:
  int n_;
  int K_;
  std::vector<Key> keys_;
  std::vector<int> coords_;
};

/// Modes on the shell |k|_inf == R, lexicographic.
std::vector<Index> shell(int n, int R);

/// Multi-orders alpha with |alpha| < N in graded lexicographic order:
/// total degree ascending, then alpha_1 descending, alpha_2 descending, ...
std::vector<Index> multi_orders_below(int n, int N);
/// Multi-orders with |alpha| == d, same ordering as above.
std::vector<Index> multi_orders_of_degree(int n, int d);

double factorial(int k);
/// alpha! = prod alpha_i!
double multi_factorial(std::span<const int> alpha);
int degree(std::span<const int> alpha);

}  // namespace nctori
