#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "kpsec/bytes.hpp"
#include "kpsec/rng.hpp"

namespace kpsec::sharing {

using BigUint = boost::multiprecision::uint256_t;

struct FieldElement {
  BigUint value;

  friend bool operator==(const FieldElement& a, const FieldElement& b) {
    return a.value == b.value;
  }
};

// Arithmetic modulo a public prime q < 2^256.
class PrimeField {
 public:
  explicit PrimeField(const BigUint& modulus);

  // q = 2^256 - 189, the default deployment field.
  static const PrimeField& standard();

  const BigUint& modulus() const { return q_; }
  std::size_t bits() const { return bits_; }
  // Width of the fixed-size big-endian encoding: ceil(bits / 8).
  std::size_t byte_width() const { return (bits_ + 7) / 8; }

  FieldElement element(std::uint64_t v) const;
  FieldElement element(const BigUint& v) const;  // reduced mod q

  FieldElement add(const FieldElement& a, const FieldElement& b) const;
  FieldElement sub(const FieldElement& a, const FieldElement& b) const;
  FieldElement mul(const FieldElement& a, const FieldElement& b) const;
  FieldElement neg(const FieldElement& a) const;
  FieldElement pow(const FieldElement& a, BigUint e) const;
  // Throws std::domain_error for zero.
  FieldElement inv(const FieldElement& a) const;

  FieldElement random(Rng& rng) const;

  Bytes encode(const FieldElement& a) const;
  // Throws FormatError on wrong length or a value >= q.
  FieldElement decode(ByteView bytes) const;

  bool operator==(const PrimeField& other) const { return q_ == other.q_; }

 private:
  BigUint q_;
  std::size_t bits_ = 0;
  BigUint fold_ = 0;
};

// Field operations performed by the interpolation routines.
struct FieldOpCounter {
  std::uint64_t additions = 0;
  std::uint64_t multiplications = 0;
  std::uint64_t inversions = 0;

  std::uint64_t total() const { return additions + multiplications + inversions; }
};

// coefficients[0] is the secret; a threshold-t polynomial has degree t - 1.
struct SharePolynomial {
  std::vector<FieldElement> coefficients;

  std::size_t threshold() const { return coefficients.size(); }
  const FieldElement& secret() const { return coefficients.front(); }
};

struct Share {
  std::uint32_t index = 0;
  FieldElement value;
  Bytes signature;
};

class InsufficientShares : public std::runtime_error {
 public:
  InsufficientShares(std::size_t have, std::size_t need)
      : std::runtime_error("insufficient shares: have " + std::to_string(have) + " distinct, need " +
                           std::to_string(need)) {}
};

SharePolynomial make_polynomial(const PrimeField& field, const FieldElement& secret,
                                std::size_t threshold, Rng& rng);
SharePolynomial make_polynomial(const PrimeField& field, const FieldElement& secret,
                                std::size_t threshold, Seed seed);

// Horner evaluation.
FieldElement evaluate(const PrimeField& field, const SharePolynomial& poly, const FieldElement& x);

// Unsigned shares at indices 1..count. Requires threshold <= count < q.
std::vector<Share> eval_shares(const PrimeField& field, const SharePolynomial& poly,
                               std::size_t count);

// l_i = prod_{j != i} (0 - j) / (i - j) over the given evaluation points.
// Indices must be distinct and nonzero mod q.
std::vector<FieldElement> lagrange_coefficients(const PrimeField& field,
                                                std::span<const std::uint32_t> indices,
                                                FieldOpCounter* counter = nullptr);

// P(0) from the `threshold` lowest distinct indices among `shares`.
// Throws InsufficientShares if fewer distinct indices are available.
FieldElement reconstruct(const PrimeField& field, std::span<const Share> shares,
                         std::size_t threshold, FieldOpCounter* counter = nullptr);

// Interpolation with coefficients computed ahead of time for the exact index
// set carried by `shares` (in the same order). Linear in the threshold.
FieldElement reconstruct_with(const PrimeField& field, std::span<const FieldElement> coefficients,
                              std::span<const Share> shares, FieldOpCounter* counter = nullptr);

// Fixed indices 1..count with threshold == count: the coefficients never
// change, so a node can store them once.
class FixedIndexInterpolator {
 public:
  FixedIndexInterpolator(const PrimeField& field, std::size_t count);
  std::span<const FieldElement> coefficients() const { return coefficients_; }
  FieldElement reconstruct(std::span<const Share> shares, FieldOpCounter* counter = nullptr) const;

 private:
  const PrimeField* field_;
  std::vector<FieldElement> coefficients_;
};

// ---- Wire encoding --------------------------------------------------------
// index (4-byte BE) || value (byte_width BE) || sig-len (2-byte BE) || signature
Bytes encode_share(const PrimeField& field, const Share& share);
Share decode_share(const PrimeField& field, ByteView bytes);

// ---- Byte secrets shared block by block -----------------------------------
// Secrets longer than one field element are split into blocks of
// block_width() bytes (the last block may be shorter). All blocks share the
// same evaluation index, so one BlockShare travels per path.

// Bytes per block: every value below 2^(8w) is guaranteed to be < q.
std::size_t block_width(const PrimeField& field);

std::vector<FieldElement> chunk_secret(const PrimeField& field, ByteView secret);
// Throws FormatError when a block does not fit its byte slot (a sign that the
// blocks were not produced by chunk_secret, e.g. a mixed reconstruction).
Bytes unchunk_secret(const PrimeField& field, std::span<const FieldElement> blocks,
                     std::size_t length);

struct BlockShare {
  std::uint32_t index = 0;
  std::vector<FieldElement> values;
  Bytes signature;
};

std::vector<BlockShare> share_blocks(const PrimeField& field,
                                     std::span<const FieldElement> blocks, std::size_t threshold,
                                     std::size_t count, Rng& rng);
std::vector<FieldElement> reconstruct_blocks(const PrimeField& field,
                                             std::span<const BlockShare> shares,
                                             std::size_t threshold);

// The bytes a share signature covers: index || values.
Bytes signing_payload(const PrimeField& field, const BlockShare& share);

// index || value_1 .. value_b || sig-len || signature. For b = 1 this is
// byte-identical to encode_share.
Bytes encode_share(const PrimeField& field, const BlockShare& share);
BlockShare decode_block_share(const PrimeField& field, ByteView bytes, std::size_t blocks);

}  // namespace kpsec::sharing
