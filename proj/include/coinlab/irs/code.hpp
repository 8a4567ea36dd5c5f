#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "coinlab/math/dyadic.hpp"

namespace coinlab {

// Character p of a code word is item p ('1' = selected).
using CodeWord = std::string;

inline BigInt binomial(unsigned n, unsigned m) {
  if (m > n) return 0;
  static std::map<std::pair<unsigned, unsigned>, BigInt> cache;
  auto key = std::make_pair(n, m);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  BigInt r = 1;
  unsigned k = std::min(m, n - m);
  for (unsigned i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  cache.emplace(key, r);
  return r;
}

// i-th word of the cyclic constant-weight Gray code C(n,m), whose list is
// 0.C(n-1,m) followed by the reversed 1.C(n-1,m-1).
inline CodeWord codeword(unsigned n, unsigned m, BigInt i) {
  if (m > n) throw std::invalid_argument("weight exceeds length");
  if (i < 0 || i >= binomial(n, m)) throw std::out_of_range("code index out of range");
  CodeWord w;
  w.reserve(n);
  while (n > 0) {
    if (m == 0) {
      w.append(n, '0');
      break;
    }
    if (m == n) {
      w.append(n, '1');
      break;
    }
    BigInt zeros = binomial(n - 1, m);
    if (i < zeros) {
      w.push_back('0');
    } else {
      w.push_back('1');
      i = binomial(n - 1, m - 1) - (i - zeros) - 1;
      --m;
    }
    --n;
  }
  return w;
}

inline unsigned word_weight(const CodeWord& w) {
  unsigned c = 0;
  for (char ch : w) {
    if (ch != '0' && ch != '1') throw std::invalid_argument("code word must be a bit string");
    c += ch == '1';
  }
  return c;
}

inline BigInt rank(const CodeWord& word, unsigned m) {
  if (word_weight(word) != m) throw std::invalid_argument("code word has the wrong weight");
  auto n = static_cast<unsigned>(word.size());
  // index = offset + sign * (index of the remaining suffix)
  BigInt offset = 0;
  int sign = 1;
  for (std::size_t p = 0; p < word.size() && m > 0 && m < n; ++p) {
    if (word[p] == '1') {
      BigInt a = binomial(n - 1, m) + binomial(n - 1, m - 1) - 1;
      offset += sign * a;
      sign = -sign;
      --m;
    }
    --n;
  }
  return offset;
}

inline std::vector<CodeWord> enumerate_code(unsigned n, unsigned m) {
  if (m > n) throw std::invalid_argument("weight exceeds length");
  if (binomial(n, m) > 1'000'000) throw std::length_error("code too large to enumerate");
  if (m == 0) return {CodeWord(n, '0')};
  if (m == n) return {CodeWord(n, '1')};
  std::vector<CodeWord> out;
  for (auto& w : enumerate_code(n - 1, m)) out.push_back("0" + w);
  auto ones = enumerate_code(n - 1, m - 1);
  for (auto it = ones.rbegin(); it != ones.rend(); ++it) out.push_back("1" + *it);
  return out;
}

inline unsigned hamming(const CodeWord& a, const CodeWord& b) {
  unsigned d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

struct CodeCheck {
  bool bijection = false;
  bool weights = false;
  bool adjacent = false;
  bool cyclic = false;
  bool ok() const { return bijection && weights && adjacent && cyclic; }
};

// The four defining properties of C(n,m). One-word codes have no
// neighbours, so the two adjacency properties hold vacuously for them.
inline CodeCheck check_code(unsigned n, unsigned m, const std::vector<CodeWord>& list) {
  CodeCheck c;
  std::map<CodeWord, int> seen;
  c.weights = true;
  for (const auto& w : list) {
    if (w.size() != n || word_weight(w) != m) c.weights = false;
    ++seen[w];
  }
  c.bijection = seen.size() == list.size() && BigInt(list.size()) == binomial(n, m);
  c.adjacent = true;
  for (std::size_t i = 0; i + 1 < list.size(); ++i)
    if (hamming(list[i], list[i + 1]) != 2) c.adjacent = false;
  c.cyclic = list.size() <= 1 || hamming(list.back(), list.front()) == 2;
  return c;
}

inline std::vector<unsigned> selected_items(const CodeWord& w) {
  std::vector<unsigned> out;
  for (unsigned i = 0; i < w.size(); ++i)
    if (w[i] == '1') out.push_back(i);
  return out;
}

}  // namespace coinlab
