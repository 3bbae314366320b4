#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

#include "kpsec/bytes.hpp"
#include "kpsec/rng.hpp"

namespace kpsec::crypto {

using Scalar = boost::multiprecision::uint256_t;

// Canonical fixed-width big-endian encoding of a group element.
struct Element {
  Bytes encoding;

  bool operator==(const Element&) const = default;
};

class InvalidElement : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Prime-order cyclic group written additively: mul(P, s) is s * P.
class Group {
 public:
  virtual ~Group() = default;

  virtual std::string name() const = 0;
  virtual const Scalar& order() const = 0;
  virtual const Element& generator() const = 0;
  virtual const Element& identity() const = 0;
  virtual std::size_t element_width() const = 0;

  // Member of the prime-order subgroup (identity included).
  virtual bool is_element(const Element& e) const = 0;

  // Both throw InvalidElement for non-members.
  virtual Element mul(const Element& base, const Scalar& s) const = 0;
  virtual Element add(const Element& a, const Element& b) const = 0;
  virtual Element mul_base(const Scalar& s) const { return mul(generator(), s); }

  // Usable as a public key: a non-identity member.
  bool is_public_key(const Element& e) const { return e != identity() && is_element(e); }

  std::size_t scalar_width() const;
};

// Multiplicative subgroup of order r in Z_p^*, small enough for exhaustive
// checks. Elements are residues encoded in ceil(bits(p)/8) bytes.
class ToyGroup final : public Group {
 public:
  // Throws std::invalid_argument unless r is prime, r | p - 1 and g has order r.
  ToyGroup(std::uint64_t p, std::uint64_t g, std::uint64_t r);

  // p = 467, g = 4, r = 233.
  static const ToyGroup& standard();

  std::uint64_t modulus() const { return p_; }
  std::uint64_t value_of(const Element& e) const;
  Element element_of(std::uint64_t v) const;

  std::string name() const override { return "toy"; }
  const Scalar& order() const override { return order_; }
  const Element& generator() const override { return generator_; }
  const Element& identity() const override { return identity_; }
  std::size_t element_width() const override { return width_; }
  bool is_element(const Element& e) const override;
  Element mul(const Element& base, const Scalar& s) const override;
  Element add(const Element& a, const Element& b) const override;

 private:
  std::uint64_t p_, g_, r_;
  std::size_t width_;
  Scalar order_;
  Element generator_, identity_;
};

// NIST P-256 (prime256v1) through OpenSSL. Points use the 33-byte compressed
// SEC1 encoding; the point at infinity is 33 zero bytes.
class P256Group final : public Group {
 public:
  static const P256Group& instance();
  ~P256Group() override;

  std::string name() const override { return "p256"; }
  const Scalar& order() const override { return order_; }
  const Element& generator() const override { return generator_; }
  const Element& identity() const override { return identity_; }
  std::size_t element_width() const override { return 33; }
  bool is_element(const Element& e) const override;
  Element mul(const Element& base, const Scalar& s) const override;
  Element mul_base(const Scalar& s) const override;
  Element add(const Element& a, const Element& b) const override;

 private:
  P256Group();
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Scalar order_;
  Element generator_, identity_;
};

// "toy" or "p256"; throws std::invalid_argument otherwise.
const Group& group_by_name(std::string_view name);

// ---- scalar arithmetic mod the group order ---------------------------------
Scalar scalar_add(const Group& g, const Scalar& a, const Scalar& b);
Scalar scalar_mul(const Group& g, const Scalar& a, const Scalar& b);
Scalar scalar_neg(const Group& g, const Scalar& a);
// Uniform in [1, r).
Scalar random_scalar(const Group& g, Rng& rng);
// Domain-separated SHA-256 based hash, reduced mod r from 512 bits.
Scalar hash_to_scalar(const Group& g, std::string_view label, ByteView data);

Bytes encode_scalar(const Group& g, const Scalar& s);
// Throws FormatError on wrong width or s >= r.
Scalar decode_scalar(const Group& g, ByteView bytes);

}  // namespace kpsec::crypto
