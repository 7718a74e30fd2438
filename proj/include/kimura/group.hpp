#pragma once

// Klein four-group Z2 x Z2, its automorphisms, quotient maps, and the group of
// flows (zero-sum sequences) with face-restricted enumeration.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kimura {

/// An element of Z2 x Z2 stored as a 2-bit code: 0=00, alpha=01, beta=10, gamma=11.
struct GroupElem {
  std::uint8_t code = 0;

  constexpr GroupElem() = default;
  constexpr explicit GroupElem(std::uint8_t c) : code(static_cast<std::uint8_t>(c & 3u)) {}

  static constexpr GroupElem zero() { return GroupElem{0}; }
  static constexpr GroupElem alpha() { return GroupElem{1}; }
  static constexpr GroupElem beta() { return GroupElem{2}; }
  static constexpr GroupElem gamma() { return GroupElem{3}; }

  constexpr bool is_zero() const { return code == 0; }

  friend constexpr GroupElem operator+(GroupElem a, GroupElem b) {
    return GroupElem{static_cast<std::uint8_t>(a.code ^ b.code)};
  }
  // every element is its own inverse
  friend constexpr GroupElem operator-(GroupElem a, GroupElem b) { return a + b; }
  GroupElem& operator+=(GroupElem o) {
    code ^= o.code;
    return *this;
  }
  friend constexpr bool operator==(GroupElem, GroupElem) = default;
  friend constexpr auto operator<=>(GroupElem, GroupElem) = default;
};

inline constexpr std::array<GroupElem, 4> kElements{GroupElem::zero(), GroupElem::alpha(),
                                                    GroupElem::beta(), GroupElem::gamma()};

inline constexpr GroupElem add(GroupElem a, GroupElem b) { return a + b; }

/// Serialization alphabet: 0, a (alpha), b (beta), c (gamma).
inline constexpr char to_char(GroupElem g) { return "0abc"[g.code]; }

inline GroupElem elem_from_char(char c) {
  switch (c) {
    case '0': return GroupElem::zero();
    case 'a': case 'A': return GroupElem::alpha();
    case 'b': case 'B': return GroupElem::beta();
    case 'c': case 'C': case 'g': case 'G': return GroupElem::gamma();
    default: break;
  }
  throw std::invalid_argument(std::string("not a group symbol: '") + c + "'");
}

/// Automorphism of Z2 x Z2: a permutation of the three nonzero elements, stored
/// as a 4-entry lookup table with 0 fixed.
class Automorphism {
 public:
  constexpr Automorphism() : table_{0, 1, 2, 3} {}

  /// Images of alpha, beta, gamma. Throws unless they are a permutation of {a,b,c}.
  Automorphism(GroupElem img_alpha, GroupElem img_beta, GroupElem img_gamma) {
    table_ = {0, img_alpha.code, img_beta.code, img_gamma.code};
    unsigned seen = 0;
    for (int i = 1; i < 4; ++i) seen |= 1u << table_[i];
    if (seen != 0b1110u) throw std::invalid_argument("automorphism must permute {a,b,c}");
  }

  static Automorphism identity() { return {}; }

  /// Transposition fixing the one nonzero element not in {x, y}, e.g. swap(beta, gamma).
  static Automorphism swap(GroupElem x, GroupElem y) {
    if (x.is_zero() || y.is_zero() || x == y) throw std::invalid_argument("swap needs two distinct nonzero elements");
    std::array<GroupElem, 3> img{GroupElem::alpha(), GroupElem::beta(), GroupElem::gamma()};
    std::swap(img[x.code - 1], img[y.code - 1]);
    return {img[0], img[1], img[2]};
  }

  /// All six automorphisms, identity first.
  static std::vector<Automorphism> all() {
    std::vector<Automorphism> out;
    std::array<std::uint8_t, 3> p{1, 2, 3};
    do {
      out.emplace_back(GroupElem{p[0]}, GroupElem{p[1]}, GroupElem{p[2]});
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
  }

  constexpr GroupElem operator()(GroupElem g) const { return GroupElem{table_[g.code]}; }

  Automorphism inverse() const {
    Automorphism inv;
    for (std::uint8_t i = 0; i < 4; ++i) inv.table_[table_[i]] = i;
    return inv;
  }

  /// (this o other)(g) = this(other(g))
  Automorphism compose(const Automorphism& other) const {
    Automorphism r;
    for (std::uint8_t i = 0; i < 4; ++i) r.table_[i] = table_[other.table_[i]];
    return r;
  }

  const std::array<std::uint8_t, 4>& table() const { return table_; }

  friend bool operator==(const Automorphism&, const Automorphism&) = default;

 private:
  std::array<std::uint8_t, 4> table_;
};

inline GroupElem apply_aut(const Automorphism& aut, GroupElem g) { return aut(g); }

/// Quotient map G -> G/<h> ~ Z2: 0 iff g lies in {0, h}.
inline int phi_quotient(GroupElem g, GroupElem h) {
  if (h.is_zero()) throw std::invalid_argument("phi_quotient: h must be nonzero");
  return (g.is_zero() || g == h) ? 0 : 1;
}

/// A sequence of group elements packed two bits per entry, entry 0 most
/// significant so that integer order on the packed word is lexicographic order.
/// Holds at most 31 entries. Not required to be zero-sum (see is_flow()).
class Flow {
 public:
  static constexpr int kMaxLength = 31;

  Flow() = default;
  explicit Flow(int n) : n_(check_length(n)) {}
  Flow(int n, std::uint64_t bits) : bits_(bits), n_(check_length(n)) {}

  static Flow from_elems(const std::vector<GroupElem>& elems) {
    Flow f(static_cast<int>(elems.size()));
    for (int i = 0; i < f.n_; ++i) f.set(i, elems[static_cast<std::size_t>(i)]);
    return f;
  }

  /// Parses strings over {0,a,b,c}; throws on other characters.
  static Flow parse(std::string_view s) {
    Flow f(static_cast<int>(s.size()));
    for (int i = 0; i < f.n_; ++i) f.set(i, elem_from_char(s[static_cast<std::size_t>(i)]));
    return f;
  }

  int size() const { return n_; }
  std::uint64_t bits() const { return bits_; }

  GroupElem operator[](int i) const {
    return GroupElem{static_cast<std::uint8_t>((bits_ >> shift(i)) & 3u)};
  }
  void set(int i, GroupElem g) {
    bits_ &= ~(std::uint64_t{3} << shift(i));
    bits_ |= std::uint64_t{g.code} << shift(i);
  }

  GroupElem sum() const {
    std::uint64_t x = bits_;
    std::uint8_t s = 0;
    while (x) {
      s ^= static_cast<std::uint8_t>(x & 3u);
      x >>= 2;
    }
    return GroupElem{s};
  }
  bool is_flow() const { return sum().is_zero(); }

  std::string str() const {
    std::string s(static_cast<std::size_t>(n_), '0');
    for (int i = 0; i < n_; ++i) s[static_cast<std::size_t>(i)] = to_char((*this)[i]);
    return s;
  }

  /// Componentwise sum (the action of the group of flows).
  friend Flow operator+(const Flow& a, const Flow& b) {
    if (a.n_ != b.n_) throw std::invalid_argument("flow length mismatch");
    return Flow(a.n_, a.bits_ ^ b.bits_);
  }

  Flow apply(const Automorphism& aut) const {
    Flow r(n_);
    for (int i = 0; i < n_; ++i) r.set(i, aut((*this)[i]));
    return r;
  }

  /// Entry i of the result is entry perm[i] of this flow.
  Flow permute(const std::vector<int>& perm) const {
    Flow r(n_);
    for (int i = 0; i < n_; ++i) r.set(i, (*this)[perm[static_cast<std::size_t>(i)]]);
    return r;
  }

  friend bool operator==(const Flow& a, const Flow& b) { return a.n_ == b.n_ && a.bits_ == b.bits_; }
  friend auto operator<=>(const Flow& a, const Flow& b) {
    if (auto c = a.n_ <=> b.n_; c != 0) return c;
    return a.bits_ <=> b.bits_;
  }

 private:
  static int check_length(int n) {
    if (n < 0 || n > kMaxLength) throw std::invalid_argument("flow length out of range");
    return n;
  }
  int shift(int i) const { return 2 * (n_ - 1 - i); }

  std::uint64_t bits_ = 0;
  int n_ = 0;
};

/// Mask with bit 2i set for every entry slot of a length-n flow.
inline std::uint64_t low_bit_mask(int n) {
  std::uint64_t m = 0;
  for (int i = 0; i < n; ++i) m |= std::uint64_t{1} << (2 * i);
  return m;
}

/// Number of entries where a and b differ.
inline int hamming_distance(const Flow& a, const Flow& b) {
  if (a.size() != b.size()) throw std::invalid_argument("flow length mismatch");
  const std::uint64_t x = a.bits() ^ b.bits();
  return std::popcount((x | (x >> 1)) & low_bit_mask(a.size()));
}

inline Flow act_flow(const Flow& acting, const Flow& t) { return acting + t; }

/// Forbidden (column, nonzero element) pairs; columns are 0-based internally and
/// 1-based in the "col:sym" text form.
class FaceSpec {
 public:
  FaceSpec() = default;

  void forbid(int column, GroupElem g) {
    if (column < 0) throw std::invalid_argument("face column must be >= 1");
    if (g.is_zero()) throw std::invalid_argument("face spec may not forbid 0");
    for (auto& [c, e] : forbidden_)
      if (c == column && e == g) return;
    forbidden_.emplace_back(column, g);
    std::sort(forbidden_.begin(), forbidden_.end());
  }

  /// Parses "5:c,6:c". Empty string is the empty spec.
  static FaceSpec parse(std::string_view text) {
    FaceSpec f;
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t end = text.find(',', pos);
      if (end == std::string_view::npos) end = text.size();
      std::string_view item = text.substr(pos, end - pos);
      while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
      while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
      if (!item.empty()) {
        const auto colon = item.find(':');
        if (colon == std::string_view::npos || colon + 2 != item.size())
          throw std::invalid_argument("bad face item '" + std::string(item) + "', expected col:sym");
        const int col = std::stoi(std::string(item.substr(0, colon)));
        if (col < 1) throw std::invalid_argument("face columns are 1-indexed");
        f.forbid(col - 1, elem_from_char(item[colon + 1]));
      }
      pos = end + 1;
    }
    return f;
  }

  std::string str() const {
    std::string s;
    for (auto& [c, g] : forbidden_) {
      if (!s.empty()) s += ',';
      s += std::to_string(c + 1) + ':' + to_char(g);
    }
    return s;
  }

  bool empty() const { return forbidden_.empty(); }
  const std::vector<std::pair<int, GroupElem>>& forbidden() const { return forbidden_; }

  bool admits(const Flow& f) const {
    for (auto& [c, g] : forbidden_)
      if (c < f.size() && f[c] == g) return false;
    return true;
  }

  int max_column() const {
    int m = -1;
    for (auto& [c, g] : forbidden_) m = std::max(m, c);
    return m;
  }

  friend bool operator==(const FaceSpec&, const FaceSpec&) = default;

 private:
  std::vector<std::pair<int, GroupElem>> forbidden_;
};

/// Named faces of the six-leaf polytope.
namespace faces {
inline FaceSpec p1() { return FaceSpec::parse("6:a,6:b,6:c"); }
inline FaceSpec p2() { return FaceSpec::parse("5:c,6:b,6:c"); }
inline FaceSpec p3() { return FaceSpec::parse("4:c,5:c,6:c"); }
inline FaceSpec p_tilde() { return FaceSpec::parse("6:b,6:c"); }
inline FaceSpec p_tilde_prime() { return FaceSpec::parse("5:c,6:c"); }
}  // namespace faces

/// All flows of length n admitted by face, in lexicographic order.
inline std::vector<Flow> enumerate_flows(int n, const FaceSpec& face = {}) {
  if (n < 1) throw std::invalid_argument("enumerate_flows: n must be >= 1");
  if (n > 16) throw std::invalid_argument("enumerate_flows: n too large to enumerate");
  std::vector<Flow> out;
  const std::uint64_t count = std::uint64_t{1} << (2 * (n - 1));
  out.reserve(face.empty() ? count : count / 2);
  for (std::uint64_t prefix = 0; prefix < count; ++prefix) {
    // parity of the prefix digits gives the last entry
    std::uint64_t x = prefix;
    std::uint8_t s = 0;
    while (x) {
      s ^= static_cast<std::uint8_t>(x & 3u);
      x >>= 2;
    }
    Flow f(n, (prefix << 2) | s);
    if (face.admits(f)) out.push_back(f);
  }
  return out;
}

}  // namespace kimura
