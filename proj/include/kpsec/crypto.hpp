#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>

#include "kpsec/bytes.hpp"
#include "kpsec/group.hpp"
#include "kpsec/rng.hpp"

namespace kpsec::crypto {

using Digest = std::array<std::uint8_t, 32>;
using SymmetricKey = std::array<std::uint8_t, 32>;
using Nonce = std::array<std::uint8_t, 12>;

inline constexpr std::size_t kTagBytes = 16;

Digest sha256(ByteView data);

// x in [1, r), y = x * G. The private scalar never appears in any message.
struct KeyPair {
  Scalar secret;
  Element public_key;
};

KeyPair keygen(const Group& g, Rng& rng);
KeyPair keygen(const Group& g, Seed seed);
KeyPair keypair_from_secret(const Group& g, const Scalar& x);

// k_sd = x_self * y_peer; both endpoints arrive at the same element.
struct PairwiseKey {
  Element shared;

  // SHA-256 of the canonical element encoding.
  SymmetricKey symmetric_key() const;
  bool operator==(const PairwiseKey&) const = default;
};

// Throws InvalidElement if y_peer is not a usable public key.
PairwiseKey derive_pairwise(const Group& g, const Scalar& x_self, const Element& y_peer);

// Schnorr signatures over the same group. The nonce is derived from (x, m),
// so signing is deterministic. Encoding: e || s, each scalar_width() bytes.
Bytes sign(const Group& g, const KeyPair& key, ByteView message);
Bytes sign(const Group& g, const Scalar& x, ByteView message);
// Never throws; malformed input verifies false.
bool verify(const Group& g, const Element& y, ByteView message, ByteView signature) noexcept;

// Authenticated symmetric encryption (AES-256-GCM). Output: ciphertext || tag.
Bytes sym_encrypt(const SymmetricKey& key, ByteView plaintext, const Nonce& nonce);
std::optional<Bytes> sym_decrypt(const SymmetricKey& key, ByteView ciphertext, const Nonce& nonce);

// ElGamal-style hybrid encryption: ephemeral E = e * G, key = SHA-256(e * y),
// payload under AES-256-GCM. Output: E || ciphertext || tag.
Bytes asym_encrypt(const Group& g, const Element& y_recipient, ByteView plaintext, Rng& rng);
std::optional<Bytes> asym_decrypt(const Group& g, const Scalar& x_recipient, ByteView ciphertext);

inline std::size_t asym_overhead(const Group& g) { return g.element_width() + kTagBytes; }

}  // namespace kpsec::crypto
