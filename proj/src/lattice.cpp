#include "nctori/lattice.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "nctori/errors.hpp"

namespace nctori {

namespace {
constexpr Key kOffset = 32768;
constexpr int kBits = 16;
constexpr Key kMask = 0xFFFF;

Key offset_key(int n) {
  Key k = 0;
  for (int i = 0; i < n; ++i) k = (k << kBits) | kOffset;
  return k;
}
}  // namespace

Key pack(std::span<const int> k) {
  if (k.empty() || static_cast<int>(k.size()) > kMaxDim)
    throw DimensionMismatch("lattice index dimension must be in [1, 4]");
  Key key = 0;
  for (int c : k) {
    if (std::abs(c) > kMaxCoord) throw InvalidArgument("lattice coordinate out of range");
    key = (key << kBits) | static_cast<Key>(c + static_cast<int>(kOffset));
  }
  return key;
}

void unpack(Key key, int n, std::span<int> out) {
  for (int i = n - 1; i >= 0; --i) {
    out[i] = static_cast<int>(key & kMask) - static_cast<int>(kOffset);
    key >>= kBits;
  }
}

Index unpack(Key key, int n) {
  Index k(n);
  unpack(key, n, k);
  return k;
}

Key zero_key(int n) { return offset_key(n); }

Key key_add(Key a, Key b, int n) { return a + b - offset_key(n); }

Key key_neg(Key a, int n) { return 2 * offset_key(n) - a; }

int linf_norm(std::span<const int> k) {
  int r = 0;
  for (int c : k) r = std::max(r, std::abs(c));
  return r;
}

int linf_norm(Key key, int n) {
  int r = 0;
  for (int i = 0; i < n; ++i) {
    r = std::max(r, std::abs(static_cast<int>(key & kMask) - static_cast<int>(kOffset)));
    key >>= kBits;
  }
  return r;
}

double euclid_norm_sq(std::span<const int> k) {
  double s = 0.0;
  for (int c : k) s += static_cast<double>(c) * c;
  return s;
}

std::string to_string(std::span<const int> k) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < k.size(); ++i) os << (i ? "," : "") << k[i];
  os << ')';
  return os.str();
}

void Truncation::validate() const {
  if (margin < 0 || K <= margin)
    throw InvalidArgument("truncation requires K > margin >= 0 (K=" + std::to_string(K) +
                          ", margin=" + std::to_string(margin) + ")");
}

BoxBasis::BoxBasis(int n, int K) : n_(n), K_(K) {
  if (n < 1 || n > kMaxDim) throw DimensionMismatch("box dimension must be in [1, 4]");
  if (K < 0) throw InvalidArgument("box radius must be nonnegative");
  const std::size_t side = 2 * static_cast<std::size_t>(K) + 1;
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= side;
  keys_.reserve(total);
  coords_.reserve(total * n);
  Index k(n, -K);
  for (std::size_t p = 0; p < total; ++p) {
    keys_.push_back(pack(k));
    coords_.insert(coords_.end(), k.begin(), k.end());
    for (int i = n - 1; i >= 0; --i) {
      if (++k[i] <= K) break;
      k[i] = -K;
    }
  }
}

std::optional<std::size_t> BoxBasis::position(std::span<const int> k) const {
  if (static_cast<int>(k.size()) != n_) throw DimensionMismatch("index dimension differs from box");
  std::size_t pos = 0;
  const std::size_t side = 2 * static_cast<std::size_t>(K_) + 1;
  for (int c : k) {
    if (c < -K_ || c > K_) return std::nullopt;
    pos = pos * side + static_cast<std::size_t>(c + K_);
  }
  return pos;
}

std::optional<std::size_t> BoxBasis::position(Key key) const {
  int buf[kMaxDim];
  unpack(key, n_, std::span<int>(buf, n_));
  return position(std::span<const int>(buf, n_));
}

std::vector<std::size_t> BoxBasis::window(int r) const {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < keys_.size(); ++p)
    if (linf_norm(coords(p)) <= r) out.push_back(p);
  return out;
}

std::vector<Index> shell(int n, int R) {
  std::vector<Index> out;
  BoxBasis box(n, R);
  for (std::size_t p = 0; p < box.size(); ++p) {
    auto c = box.coords(p);
    if (linf_norm(c) == R) out.emplace_back(c.begin(), c.end());
  }
  return out;
}

namespace {
void enumerate_degree(int n, int i, int remaining, Index& cur, std::vector<Index>& out) {
  if (i == n - 1) {
    cur[i] = remaining;
    out.push_back(cur);
    return;
  }
  for (int a = remaining; a >= 0; --a) {
    cur[i] = a;
    enumerate_degree(n, i + 1, remaining - a, cur, out);
  }
}
}  // namespace

std::vector<Index> multi_orders_of_degree(int n, int d) {
  std::vector<Index> out;
  Index cur(n, 0);
  enumerate_degree(n, 0, d, cur, out);
  return out;
}

std::vector<Index> multi_orders_below(int n, int N) {
  std::vector<Index> out;
  for (int d = 0; d < N; ++d) {
    auto level = multi_orders_of_degree(n, d);
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

double multi_factorial(std::span<const int> alpha) {
  double f = 1.0;
  for (int a : alpha) f *= factorial(a);
  return f;
}

int degree(std::span<const int> alpha) {
  int d = 0;
  for (int a : alpha) d += a;
  return d;
}

}  // namespace nctori
