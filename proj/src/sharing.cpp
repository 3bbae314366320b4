#include "kpsec/sharing.hpp"

#include <algorithm>
#include <iterator>
#include <limits>
#include <optional>
#include <set>

#include <boost/integer/mod_inverse.hpp>
#include <boost/multiprecision/miller_rabin.hpp>

namespace kpsec::sharing {
namespace {

using boost::multiprecision::cpp_int;
using BigUint512 = boost::multiprecision::uint512_t;

Bytes to_fixed_bytes(const BigUint& v, std::size_t width) {
  Bytes raw;
  if (v != 0) boost::multiprecision::export_bits(v, std::back_inserter(raw), 8);
  if (raw.size() > width) throw std::length_error("value wider than encoding");
  Bytes out(width - raw.size(), 0);
  append(out, raw);
  return out;
}

BigUint from_bytes(ByteView bytes) {
  BigUint v = 0;
  if (!bytes.empty()) boost::multiprecision::import_bits(v, bytes.begin(), bytes.end(), 8);
  return v;
}

}  // namespace

PrimeField::PrimeField(const BigUint& modulus) : q_(modulus) {
  if (q_ < 2) throw std::invalid_argument("field modulus must be at least 2");
  Rng rng(0x5eed);
  if (!boost::multiprecision::miller_rabin_test(cpp_int(q_), 25, rng)) {
    throw std::invalid_argument("field modulus is not prime");
  }
  bits_ = boost::multiprecision::msb(q_) + 1;
  // q = 2^256 - c with small c: reduce by folding the high half.
  const BigUint c = BigUint(0) - q_;
  if (bits_ == 256 && c <= BigUint(std::numeric_limits<std::uint64_t>::max())) fold_ = c;
}

const PrimeField& PrimeField::standard() {
  static const PrimeField field((BigUint(0) - 1) - 188);  // 2^256 - 189
  return field;
}

FieldElement PrimeField::element(std::uint64_t v) const { return {BigUint(v) % q_}; }

FieldElement PrimeField::element(const BigUint& v) const { return {v % q_}; }

FieldElement PrimeField::add(const FieldElement& a, const FieldElement& b) const {
  // a, b < q < 2^256; the sum may wrap 2^256, detected by comparison.
  BigUint s = a.value + b.value;
  if (s < a.value || s >= q_) s -= q_;
  return {s};
}

FieldElement PrimeField::sub(const FieldElement& a, const FieldElement& b) const {
  if (a.value >= b.value) return {a.value - b.value};
  return {q_ - (b.value - a.value)};
}

FieldElement PrimeField::mul(const FieldElement& a, const FieldElement& b) const {
  BigUint512 p;
  boost::multiprecision::multiply(p, a.value, b.value);
  if (fold_ == 0) return {static_cast<BigUint>(p % BigUint512(q_))};
  // p = hi * 2^256 + lo == hi * c + lo (mod q), applied twice.
  const auto c = static_cast<std::uint64_t>(fold_);
  for (int round = 0; round < 2; ++round) {
    const BigUint hi = static_cast<BigUint>(p >> 256);
    const BigUint lo = static_cast<BigUint>(p);
    p = hi;
    p *= c;
    p += lo;
  }
  BigUint r = static_cast<BigUint>(p);
  if ((p >> 256) != 0) r += fold_;  // one final wrap past 2^256
  while (r >= q_) r -= q_;
  return {r};
}

FieldElement PrimeField::neg(const FieldElement& a) const {
  if (a.value == 0) return a;
  return {q_ - a.value};
}

FieldElement PrimeField::pow(const FieldElement& a, BigUint e) const {
  FieldElement result = element(1);
  FieldElement base = a;
  while (e != 0) {
    if ((e & 1) != 0) result = mul(result, base);
    base = mul(base, base);
    e >>= 1;
  }
  return result;
}

FieldElement PrimeField::inv(const FieldElement& a) const {
  if (a.value == 0) throw std::domain_error("inverse of zero");
  if (a.value <= BigUint(std::numeric_limits<std::uint64_t>::max()) && q_ > a.value) {
    // q = m * a + r; extended Euclid on the word-sized pair (a, r) gives
    // a * u + r * v = 1, hence a^-1 = u - m * v (mod q).
    const auto aw = static_cast<std::uint64_t>(a.value);
    const BigUint m = q_ / aw;
    const auto r = static_cast<std::uint64_t>(q_ - m * aw);
    __int128 old_r = aw, cur_r = r, old_u = 1, cur_u = 0, old_v = 0, cur_v = 1;
    while (cur_r != 0) {
      const __int128 t = old_r / cur_r;
      old_r -= t * cur_r;
      std::swap(old_r, cur_r);
      old_u -= t * cur_u;
      std::swap(old_u, cur_u);
      old_v -= t * cur_v;
      std::swap(old_v, cur_v);
    }
    auto lift = [&](__int128 v) {
      return v >= 0 ? element(static_cast<std::uint64_t>(v)) : neg(element(static_cast<std::uint64_t>(-v)));
    };
    return sub(lift(old_u), mul(element(m), lift(old_v)));
  }
  const cpp_int r = boost::integer::mod_inverse(cpp_int(a.value), cpp_int(q_));
  return {static_cast<BigUint>(r)};
}

FieldElement PrimeField::random(Rng& rng) const {
  const std::size_t width = byte_width();
  const unsigned top_bits = static_cast<unsigned>(bits_ - 8 * (width - 1));
  const auto top_mask = static_cast<std::uint8_t>((1u << top_bits) - 1);
  std::uniform_int_distribution<unsigned> byte(0, 255);
  Bytes buf(width);
  for (;;) {
    for (auto& b : buf) b = static_cast<std::uint8_t>(byte(rng));
    buf[0] &= top_mask;
    BigUint v = from_bytes(buf);
    if (v < q_) return {v};
  }
}

Bytes PrimeField::encode(const FieldElement& a) const { return to_fixed_bytes(a.value, byte_width()); }

FieldElement PrimeField::decode(ByteView bytes) const {
  if (bytes.size() != byte_width()) throw FormatError("field element has wrong width");
  BigUint v = from_bytes(bytes);
  if (v >= q_) throw FormatError("field element out of range");
  return {v};
}

SharePolynomial make_polynomial(const PrimeField& field, const FieldElement& secret,
                                std::size_t threshold, Rng& rng) {
  if (threshold == 0) throw std::invalid_argument("threshold must be at least 1");
  SharePolynomial poly;
  poly.coefficients.reserve(threshold);
  poly.coefficients.push_back(field.element(secret.value));
  for (std::size_t i = 1; i < threshold; ++i) poly.coefficients.push_back(field.random(rng));
  return poly;
}

SharePolynomial make_polynomial(const PrimeField& field, const FieldElement& secret,
                                std::size_t threshold, Seed seed) {
  Rng rng(seed);
  return make_polynomial(field, secret, threshold, rng);
}

FieldElement evaluate(const PrimeField& field, const SharePolynomial& poly, const FieldElement& x) {
  FieldElement acc = field.element(0);
  for (auto it = poly.coefficients.rbegin(); it != poly.coefficients.rend(); ++it) {
    acc = field.add(field.mul(acc, x), *it);
  }
  return acc;
}

std::vector<Share> eval_shares(const PrimeField& field, const SharePolynomial& poly,
                               std::size_t count) {
  if (count < poly.threshold()) {
    throw std::invalid_argument("share count below threshold; reconstruction impossible");
  }
  if (BigUint(count) >= field.modulus()) {
    throw std::invalid_argument("share count must be below the field modulus");
  }
  std::vector<Share> shares;
  shares.reserve(count);
  for (std::uint32_t i = 1; i <= count; ++i) {
    shares.push_back({i, evaluate(field, poly, field.element(i)), {}});
  }
  return shares;
}

namespace {

// Exact integer numerators and denominators while they fit in a machine word,
// which holds for the few dozen share indices used in practice.
std::optional<std::vector<FieldElement>> small_index_coefficients(
    const PrimeField& field, std::span<const std::uint32_t> indices, FieldOpCounter& ops) {
  const std::size_t t = indices.size();
  if (BigUint(*std::max_element(indices.begin(), indices.end())) >= field.modulus()) return std::nullopt;
  auto as_element = [&](std::int64_t v) {
    return v >= 0 ? field.element(static_cast<std::uint64_t>(v))
                  : field.neg(field.element(static_cast<std::uint64_t>(-v)));
  };
  std::vector<FieldElement> coeffs;
  coeffs.reserve(t);
  for (std::size_t i = 0; i < t; ++i) {
    std::int64_t num = 1, den = 1;
    for (std::size_t j = 0; j < t; ++j) {
      if (j == i) continue;
      const auto xi = static_cast<std::int64_t>(indices[i]);
      const auto xj = static_cast<std::int64_t>(indices[j]);
      if (__builtin_mul_overflow(num, -xj, &num) || __builtin_mul_overflow(den, xi - xj, &den)) {
        return std::nullopt;
      }
      ops.additions += 2;
      ops.multiplications += 2;
    }
    if (den < 0) {
      num = -num;
      den = -den;
    }
    coeffs.push_back(field.mul(as_element(num), field.inv(as_element(den))));
    ops.multiplications += 1;
    ops.inversions += 1;
  }
  return coeffs;
}

}  // namespace

std::vector<FieldElement> lagrange_coefficients(const PrimeField& field,
                                                std::span<const std::uint32_t> indices,
                                                FieldOpCounter* counter) {
  FieldOpCounter local;
  FieldOpCounter& ops = counter ? *counter : local;
  std::vector<FieldElement> points;
  points.reserve(indices.size());
  std::set<BigUint> distinct;
  for (auto idx : indices) {
    auto x = field.element(idx);
    if (x.value == 0) throw std::invalid_argument("evaluation index is zero mod q");
    if (!distinct.insert(x.value).second) throw std::invalid_argument("repeated share index");
    points.push_back(x);
  }
  const std::size_t t = points.size();
  if (auto small = small_index_coefficients(field, indices, ops)) return *small;
  std::vector<FieldElement> nums(t, field.element(1));
  std::vector<FieldElement> dens(t, field.element(1));
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = 0; j < t; ++j) {
      if (j == i) continue;
      nums[i] = field.mul(nums[i], field.neg(points[j]));
      dens[i] = field.mul(dens[i], field.sub(points[i], points[j]));
      ops.additions += 2;
      ops.multiplications += 2;
    }
  }
  // One inversion for all denominators.
  std::vector<FieldElement> prefix(t + 1, field.element(1));
  for (std::size_t i = 0; i < t; ++i) prefix[i + 1] = field.mul(prefix[i], dens[i]);
  FieldElement acc = field.inv(prefix[t]);
  ops.inversions += 1;
  std::vector<FieldElement> coeffs(t);
  for (std::size_t i = t; i-- > 0;) {
    coeffs[i] = field.mul(nums[i], field.mul(acc, prefix[i]));
    acc = field.mul(acc, dens[i]);
  }
  ops.multiplications += 4 * t;
  return coeffs;
}

FieldElement reconstruct_with(const PrimeField& field, std::span<const FieldElement> coefficients,
                              std::span<const Share> shares, FieldOpCounter* counter) {
  if (coefficients.size() != shares.size()) {
    throw std::invalid_argument("coefficient count does not match share count");
  }
  FieldElement acc = field.element(0);
  for (std::size_t i = 0; i < shares.size(); ++i) {
    acc = field.add(acc, field.mul(shares[i].value, coefficients[i]));
  }
  if (counter) {
    counter->multiplications += shares.size();
    counter->additions += shares.size();
  }
  return acc;
}

namespace {

// Lowest `threshold` distinct indices, first occurrence wins.
template <typename ShareT>
std::vector<const ShareT*> select_lowest(std::span<const ShareT> shares, std::size_t threshold) {
  std::vector<const ShareT*> sorted;
  sorted.reserve(shares.size());
  for (const auto& s : shares) sorted.push_back(&s);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ShareT* a, const ShareT* b) { return a->index < b->index; });
  std::vector<const ShareT*> picked;
  for (const auto* s : sorted) {
    if (!picked.empty() && picked.back()->index == s->index) continue;
    picked.push_back(s);
  }
  if (picked.size() < threshold || threshold == 0) {
    throw InsufficientShares(picked.size(), threshold);
  }
  picked.resize(threshold);
  return picked;
}

}  // namespace

FieldElement reconstruct(const PrimeField& field, std::span<const Share> shares,
                         std::size_t threshold, FieldOpCounter* counter) {
  const auto picked = select_lowest(shares, threshold);
  std::vector<std::uint32_t> indices;
  std::vector<Share> used;
  for (const auto* s : picked) {
    indices.push_back(s->index);
    used.push_back({s->index, s->value, {}});
  }
  const auto coeffs = lagrange_coefficients(field, indices, counter);
  return reconstruct_with(field, coeffs, used, counter);
}

FixedIndexInterpolator::FixedIndexInterpolator(const PrimeField& field, std::size_t count)
    : field_(&field) {
  std::vector<std::uint32_t> indices(count);
  for (std::size_t i = 0; i < count; ++i) indices[i] = static_cast<std::uint32_t>(i + 1);
  coefficients_ = lagrange_coefficients(field, indices);
}

FieldElement FixedIndexInterpolator::reconstruct(std::span<const Share> shares,
                                                 FieldOpCounter* counter) const {
  if (shares.size() != coefficients_.size()) {
    throw InsufficientShares(shares.size(), coefficients_.size());
  }
  for (std::size_t i = 0; i < shares.size(); ++i) {
    if (shares[i].index != i + 1) throw std::invalid_argument("shares must carry indices 1..n in order");
  }
  return reconstruct_with(*field_, coefficients_, shares, counter);
}

Bytes encode_share(const PrimeField& field, const Share& share) {
  return encode_share(field, BlockShare{share.index, {share.value}, share.signature});
}

Share decode_share(const PrimeField& field, ByteView bytes) {
  auto bs = decode_block_share(field, bytes, 1);
  return {bs.index, bs.values.front(), std::move(bs.signature)};
}

std::size_t block_width(const PrimeField& field) { return (field.bits() - 1) / 8; }

std::vector<FieldElement> chunk_secret(const PrimeField& field, ByteView secret) {
  const std::size_t w = block_width(field);
  if (w == 0) throw std::invalid_argument("field too small to carry byte blocks");
  if (secret.empty()) throw std::invalid_argument("empty secret");
  std::vector<FieldElement> blocks;
  for (std::size_t off = 0; off < secret.size(); off += w) {
    const auto len = std::min(w, secret.size() - off);
    blocks.push_back({from_bytes(secret.subspan(off, len))});
  }
  return blocks;
}

Bytes unchunk_secret(const PrimeField& field, std::span<const FieldElement> blocks,
                     std::size_t length) {
  const std::size_t w = block_width(field);
  if (w == 0) throw std::invalid_argument("field too small to carry byte blocks");
  if (blocks.size() != (length + w - 1) / w) throw FormatError("block count does not match length");
  Bytes out;
  out.reserve(length);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto len = std::min(w, length - i * w);
    if (blocks[i].value != 0 && boost::multiprecision::msb(blocks[i].value) >= 8 * len) {
      throw FormatError("block value exceeds its byte slot");
    }
    append(out, to_fixed_bytes(blocks[i].value, len));
  }
  return out;
}

std::vector<BlockShare> share_blocks(const PrimeField& field,
                                     std::span<const FieldElement> blocks, std::size_t threshold,
                                     std::size_t count, Rng& rng) {
  std::vector<BlockShare> shares(count);
  for (std::uint32_t i = 0; i < count; ++i) shares[i].index = i + 1;
  for (const auto& block : blocks) {
    const auto poly = make_polynomial(field, block, threshold, rng);
    const auto evals = eval_shares(field, poly, count);
    for (std::size_t i = 0; i < count; ++i) shares[i].values.push_back(evals[i].value);
  }
  return shares;
}

std::vector<FieldElement> reconstruct_blocks(const PrimeField& field,
                                             std::span<const BlockShare> shares,
                                             std::size_t threshold) {
  const auto picked = select_lowest(shares, threshold);
  const std::size_t nblocks = picked.front()->values.size();
  std::vector<std::uint32_t> indices;
  for (const auto* s : picked) {
    if (s->values.size() != nblocks) throw std::invalid_argument("shares disagree on block count");
    indices.push_back(s->index);
  }
  const auto coeffs = lagrange_coefficients(field, indices);
  std::vector<FieldElement> out;
  out.reserve(nblocks);
  for (std::size_t b = 0; b < nblocks; ++b) {
    FieldElement acc = field.element(0);
    for (std::size_t i = 0; i < picked.size(); ++i) {
      acc = field.add(acc, field.mul(picked[i]->values[b], coeffs[i]));
    }
    out.push_back(acc);
  }
  return out;
}

Bytes signing_payload(const PrimeField& field, const BlockShare& share) {
  Bytes out;
  put_be(out, share.index, 4);
  for (const auto& v : share.values) append(out, field.encode(v));
  return out;
}

Bytes encode_share(const PrimeField& field, const BlockShare& share) {
  if (share.signature.size() > 0xffff) throw std::length_error("signature too long");
  Bytes out = signing_payload(field, share);
  put_be(out, share.signature.size(), 2);
  append(out, share.signature);
  return out;
}

BlockShare decode_block_share(const PrimeField& field, ByteView bytes, std::size_t blocks) {
  const std::size_t w = field.byte_width();
  const std::size_t fixed = 4 + blocks * w + 2;
  if (blocks == 0 || bytes.size() < fixed) throw FormatError("share encoding too short");
  BlockShare share;
  share.index = static_cast<std::uint32_t>(get_be(bytes, 4));
  for (std::size_t b = 0; b < blocks; ++b) {
    share.values.push_back(field.decode(bytes.subspan(4 + b * w, w)));
  }
  const auto sig_len = static_cast<std::size_t>(get_be(bytes.subspan(4 + blocks * w), 2));
  if (bytes.size() != fixed + sig_len) throw FormatError("share signature length mismatch");
  share.signature.assign(bytes.begin() + static_cast<std::ptrdiff_t>(fixed), bytes.end());
  return share;
}

}  // namespace kpsec::sharing
