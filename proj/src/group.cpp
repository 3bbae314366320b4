#include "kpsec/group.hpp"

#include <iterator>

#include <boost/multiprecision/miller_rabin.hpp>
#include <openssl/bn.h>
#include <openssl/ec.h>
#include <openssl/obj_mac.h>

#include "kpsec/crypto.hpp"

namespace kpsec::crypto {
namespace {

using U512 = boost::multiprecision::uint512_t;

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

std::uint64_t powmod(std::uint64_t base, std::uint64_t e, std::uint64_t m) {
  std::uint64_t result = 1 % m;
  base %= m;
  while (e) {
    if (e & 1) result = mulmod(result, base, m);
    base = mulmod(base, base, m);
    e >>= 1;
  }
  return result;
}

bool is_prime(std::uint64_t v) {
  Rng rng(0x70ff);
  return v >= 2 &&
         boost::multiprecision::miller_rabin_test(boost::multiprecision::cpp_int(v), 25, rng);
}

std::size_t byte_len(std::uint64_t v) {
  std::size_t n = 0;
  for (; v; v >>= 8) ++n;
  return n;
}

Bytes fixed_bytes(const Scalar& v, std::size_t width) {
  Bytes raw;
  if (v != 0) boost::multiprecision::export_bits(v, std::back_inserter(raw), 8);
  Bytes out(width - raw.size(), 0);
  append(out, raw);
  return out;
}

Scalar scalar_from(ByteView bytes) {
  Scalar v = 0;
  if (!bytes.empty()) boost::multiprecision::import_bits(v, bytes.begin(), bytes.end(), 8);
  return v;
}

}  // namespace

std::size_t Group::scalar_width() const {
  return (boost::multiprecision::msb(order()) + 8) / 8;
}

// ---- ToyGroup -----------------------------------------------------------------

ToyGroup::ToyGroup(std::uint64_t p, std::uint64_t g, std::uint64_t r)
    : p_(p), g_(g), r_(r), width_(byte_len(p)), order_(r) {
  if (p >= (1ULL << 62) || !is_prime(p)) throw std::invalid_argument("toy group: p must be a small prime");
  if (!is_prime(r) || (p - 1) % r != 0) throw std::invalid_argument("toy group: r must be a prime divisor of p-1");
  if (g <= 1 || g >= p || powmod(g, r, p) != 1) {
    throw std::invalid_argument("toy group: generator does not have order r");
  }
  generator_ = element_of(g);
  identity_ = element_of(1);
}

const ToyGroup& ToyGroup::standard() {
  static const ToyGroup group(467, 4, 233);
  return group;
}

std::uint64_t ToyGroup::value_of(const Element& e) const {
  if (e.encoding.size() != width_) throw InvalidElement("toy group: wrong element width");
  const auto v = get_be(e.encoding, width_);
  if (v == 0 || v >= p_ || powmod(v, r_, p_) != 1) throw InvalidElement("toy group: not a subgroup member");
  return v;
}

Element ToyGroup::element_of(std::uint64_t v) const {
  Element e;
  put_be(e.encoding, v, width_);
  return e;
}

bool ToyGroup::is_element(const Element& e) const {
  try {
    value_of(e);
    return true;
  } catch (const InvalidElement&) {
    return false;
  }
}

Element ToyGroup::mul(const Element& base, const Scalar& s) const {
  const auto exponent = static_cast<std::uint64_t>(s % order_);
  return element_of(powmod(value_of(base), exponent, p_));
}

Element ToyGroup::add(const Element& a, const Element& b) const {
  return element_of(mulmod(value_of(a), value_of(b), p_));
}

// ---- P256Group ----------------------------------------------------------------

struct P256Group::Impl {
  EC_GROUP* group = nullptr;

  struct PointDeleter {
    void operator()(EC_POINT* p) const { EC_POINT_free(p); }
  };
  struct BnDeleter {
    void operator()(BIGNUM* b) const { BN_free(b); }
  };
  struct CtxDeleter {
    void operator()(BN_CTX* c) const { BN_CTX_free(c); }
  };
  using Point = std::unique_ptr<EC_POINT, PointDeleter>;
  using Bn = std::unique_ptr<BIGNUM, BnDeleter>;
  using Ctx = std::unique_ptr<BN_CTX, CtxDeleter>;

  Point new_point() const {
    Point p(EC_POINT_new(group));
    if (!p) throw std::bad_alloc();
    return p;
  }

  Point decode(const Element& e, BN_CTX* ctx) const {
    if (e.encoding.size() != 33) throw InvalidElement("p256: wrong element width");
    auto p = new_point();
    bool zero = true;
    for (auto b : e.encoding) zero = zero && b == 0;
    if (zero) {
      EC_POINT_set_to_infinity(group, p.get());
      return p;
    }
    if (EC_POINT_oct2point(group, p.get(), e.encoding.data(), e.encoding.size(), ctx) != 1) {
      throw InvalidElement("p256: not a curve point");
    }
    return p;
  }

  Element encode(const EC_POINT* p, BN_CTX* ctx) const {
    Element e;
    e.encoding.assign(33, 0);
    if (EC_POINT_is_at_infinity(group, p)) return e;
    if (EC_POINT_point2oct(group, p, POINT_CONVERSION_COMPRESSED, e.encoding.data(), 33, ctx) != 33) {
      throw std::runtime_error("p256: point encoding failed");
    }
    return e;
  }

  static Bn to_bn(const Scalar& s) {
    const auto bytes = fixed_bytes(s, 32);
    Bn bn(BN_bin2bn(bytes.data(), static_cast<int>(bytes.size()), nullptr));
    if (!bn) throw std::bad_alloc();
    return bn;
  }
};

P256Group::P256Group() : impl_(std::make_unique<Impl>()) {
  impl_->group = EC_GROUP_new_by_curve_name(NID_X9_62_prime256v1);
  if (!impl_->group) throw std::runtime_error("p256: curve unavailable");
  Bytes order(32);
  BN_bn2binpad(EC_GROUP_get0_order(impl_->group), order.data(), 32);
  order_ = scalar_from(order);
  Impl::Ctx ctx(BN_CTX_new());
  generator_ = impl_->encode(EC_GROUP_get0_generator(impl_->group), ctx.get());
  identity_.encoding.assign(33, 0);
}

P256Group::~P256Group() { EC_GROUP_free(impl_->group); }

const P256Group& P256Group::instance() {
  static const P256Group group;
  return group;
}

bool P256Group::is_element(const Element& e) const {
  try {
    Impl::Ctx ctx(BN_CTX_new());
    impl_->decode(e, ctx.get());
    return true;
  } catch (const InvalidElement&) {
    return false;
  }
}

Element P256Group::mul(const Element& base, const Scalar& s) const {
  Impl::Ctx ctx(BN_CTX_new());
  auto p = impl_->decode(base, ctx.get());
  auto bn = Impl::to_bn(s % order_);
  auto out = impl_->new_point();
  if (EC_POINT_mul(impl_->group, out.get(), nullptr, p.get(), bn.get(), ctx.get()) != 1) {
    throw std::runtime_error("p256: scalar multiplication failed");
  }
  return impl_->encode(out.get(), ctx.get());
}

Element P256Group::mul_base(const Scalar& s) const {
  Impl::Ctx ctx(BN_CTX_new());
  auto bn = Impl::to_bn(s % order_);
  auto out = impl_->new_point();
  if (EC_POINT_mul(impl_->group, out.get(), bn.get(), nullptr, nullptr, ctx.get()) != 1) {
    throw std::runtime_error("p256: scalar multiplication failed");
  }
  return impl_->encode(out.get(), ctx.get());
}

Element P256Group::add(const Element& a, const Element& b) const {
  Impl::Ctx ctx(BN_CTX_new());
  auto pa = impl_->decode(a, ctx.get());
  auto pb = impl_->decode(b, ctx.get());
  auto out = impl_->new_point();
  if (EC_POINT_add(impl_->group, out.get(), pa.get(), pb.get(), ctx.get()) != 1) {
    throw std::runtime_error("p256: point addition failed");
  }
  return impl_->encode(out.get(), ctx.get());
}

const Group& group_by_name(std::string_view name) {
  if (name == "toy") return ToyGroup::standard();
  if (name == "p256") return P256Group::instance();
  throw std::invalid_argument("unknown group '" + std::string(name) + "' (expected toy or p256)");
}

// ---- scalars --------------------------------------------------------------------

Scalar scalar_add(const Group& g, const Scalar& a, const Scalar& b) {
  return static_cast<Scalar>((U512(a) + U512(b)) % U512(g.order()));
}

Scalar scalar_mul(const Group& g, const Scalar& a, const Scalar& b) {
  return static_cast<Scalar>((U512(a) * U512(b)) % U512(g.order()));
}

Scalar scalar_neg(const Group& g, const Scalar& a) {
  const Scalar r = a % g.order();
  return r == 0 ? Scalar(0) : g.order() - r;
}

Scalar random_scalar(const Group& g, Rng& rng) {
  // 512 random bits reduced into [1, r): bias is below 2^-250.
  U512 v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 64) | U512(rng());
  return static_cast<Scalar>(v % U512(g.order() - 1)) + 1;
}

Scalar hash_to_scalar(const Group& g, std::string_view label, ByteView data) {
  Bytes buf;
  append(buf, label);
  buf.push_back(0);
  append(buf, data);
  buf.push_back(0);
  Bytes wide;
  for (std::uint8_t counter = 0; counter < 2; ++counter) {
    buf.back() = counter;
    const auto d = sha256(buf);
    wide.insert(wide.end(), d.begin(), d.end());
  }
  U512 v = 0;
  boost::multiprecision::import_bits(v, wide.begin(), wide.end(), 8);
  return static_cast<Scalar>(v % U512(g.order()));
}

Bytes encode_scalar(const Group& g, const Scalar& s) { return fixed_bytes(s, g.scalar_width()); }

Scalar decode_scalar(const Group& g, ByteView bytes) {
  if (bytes.size() != g.scalar_width()) throw FormatError("scalar has wrong width");
  Scalar s = scalar_from(bytes);
  if (s >= g.order()) throw FormatError("scalar out of range");
  return s;
}

}  // namespace kpsec::crypto
