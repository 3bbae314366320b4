#include "kpsec/crypto.hpp"

#include <memory>

#include <openssl/evp.h>

namespace kpsec::crypto {
namespace {

struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

SymmetricKey to_key(const Digest& d) {
  SymmetricKey k;
  std::copy(d.begin(), d.end(), k.begin());
  return k;
}

}  // namespace

Digest sha256(ByteView data) {
  Digest out;
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size()) {
    throw std::runtime_error("sha256 failed");
  }
  return out;
}

KeyPair keypair_from_secret(const Group& g, const Scalar& x) {
  if (x == 0 || x >= g.order()) throw std::invalid_argument("private scalar out of range");
  return {x, g.mul_base(x)};
}

KeyPair keygen(const Group& g, Rng& rng) { return keypair_from_secret(g, random_scalar(g, rng)); }

KeyPair keygen(const Group& g, Seed seed) {
  Rng rng(seed);
  return keygen(g, rng);
}

SymmetricKey PairwiseKey::symmetric_key() const { return to_key(sha256(shared.encoding)); }

PairwiseKey derive_pairwise(const Group& g, const Scalar& x_self, const Element& y_peer) {
  if (!g.is_public_key(y_peer)) throw InvalidElement("peer public key is not a valid group element");
  return {g.mul(y_peer, x_self)};
}

Bytes sign(const Group& g, const KeyPair& key, ByteView message) {
  Bytes nonce_input = encode_scalar(g, key.secret);
  append(nonce_input, message);
  // k in [1, r)
  const Scalar k =
      hash_to_scalar(g, "kpsec/schnorr-nonce", nonce_input) % (g.order() - 1) + 1;
  const Element commitment = g.mul_base(k);

  Bytes challenge_input = commitment.encoding;
  append(challenge_input, key.public_key.encoding);
  append(challenge_input, message);
  const Scalar e = hash_to_scalar(g, "kpsec/schnorr-challenge", challenge_input);
  const Scalar s = scalar_add(g, k, scalar_mul(g, e, key.secret));

  Bytes sig = encode_scalar(g, e);
  append(sig, encode_scalar(g, s));
  return sig;
}

Bytes sign(const Group& g, const Scalar& x, ByteView message) {
  return sign(g, keypair_from_secret(g, x), message);
}

bool verify(const Group& g, const Element& y, ByteView message, ByteView signature) noexcept {
  try {
    const std::size_t w = g.scalar_width();
    if (signature.size() != 2 * w || !g.is_public_key(y)) return false;
    const Scalar e = decode_scalar(g, signature.first(w));
    const Scalar s = decode_scalar(g, signature.subspan(w));
    // R = s*G - e*y
    const Element commitment = g.add(g.mul_base(s), g.mul(y, scalar_neg(g, e)));
    Bytes challenge_input = commitment.encoding;
    append(challenge_input, y.encoding);
    append(challenge_input, message);
    return hash_to_scalar(g, "kpsec/schnorr-challenge", challenge_input) == e;
  } catch (...) {
    return false;
  }
}

Bytes sym_encrypt(const SymmetricKey& key, ByteView plaintext, const Nonce& nonce) {
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) throw std::bad_alloc();
  Bytes out(plaintext.size() + kTagBytes);
  int len = 0, total = 0;
  if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(nonce.size()),
                          nullptr) != 1 ||
      EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) != 1 ||
      EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(),
                        static_cast<int>(plaintext.size())) != 1) {
    throw std::runtime_error("aes-gcm encryption failed");
  }
  total = len;
  if (EVP_EncryptFinal_ex(ctx.get(), out.data() + total, &len) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, static_cast<int>(kTagBytes),
                          out.data() + plaintext.size()) != 1) {
    throw std::runtime_error("aes-gcm finalization failed");
  }
  return out;
}

std::optional<Bytes> sym_decrypt(const SymmetricKey& key, ByteView ciphertext, const Nonce& nonce) {
  if (ciphertext.size() < kTagBytes) return std::nullopt;
  const std::size_t body = ciphertext.size() - kTagBytes;
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) throw std::bad_alloc();
  Bytes out(body);
  Bytes tag(ciphertext.begin() + static_cast<std::ptrdiff_t>(body), ciphertext.end());
  int len = 0;
  if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(nonce.size()),
                          nullptr) != 1 ||
      EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) != 1 ||
      EVP_DecryptUpdate(ctx.get(), out.data(), &len, ciphertext.data(), static_cast<int>(body)) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, static_cast<int>(kTagBytes),
                          tag.data()) != 1) {
    return std::nullopt;
  }
  int fin = 0;
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &fin) != 1) return std::nullopt;
  return out;
}

Bytes asym_encrypt(const Group& g, const Element& y_recipient, ByteView plaintext, Rng& rng) {
  if (plaintext.empty()) throw std::invalid_argument("asym_encrypt: empty plaintext");
  if (!g.is_public_key(y_recipient)) throw InvalidElement("recipient key is not a valid group element");
  const Scalar e = random_scalar(g, rng);
  const Element ephemeral = g.mul_base(e);
  const SymmetricKey key = to_key(sha256(g.mul(y_recipient, e).encoding));
  // The key is fresh for every message, so a fixed nonce is safe.
  Bytes out = ephemeral.encoding;
  append(out, sym_encrypt(key, plaintext, Nonce{}));
  return out;
}

std::optional<Bytes> asym_decrypt(const Group& g, const Scalar& x_recipient, ByteView ciphertext) {
  const std::size_t w = g.element_width();
  if (ciphertext.size() < w + kTagBytes) return std::nullopt;
  Element ephemeral{Bytes(ciphertext.begin(), ciphertext.begin() + static_cast<std::ptrdiff_t>(w))};
  if (!g.is_public_key(ephemeral)) return std::nullopt;
  const SymmetricKey key = to_key(sha256(g.mul(ephemeral, x_recipient).encoding));
  return sym_decrypt(key, ciphertext.subspan(w), Nonce{});
}

}  // namespace kpsec::crypto
