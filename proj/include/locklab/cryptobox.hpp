#pragma once

#include "locklab/bytes.hpp"
#include "locklab/result.hpp"
#include "locklab/rng.hpp"

namespace locklab::crypto {

using Key16 = std::array<uint8_t, 16>;
using Key32 = std::array<uint8_t, 32>;
using Serial = std::array<uint8_t, 8>;
using Nonce16 = std::array<uint8_t, 16>;
using Nonce12 = std::array<uint8_t, 12>;

constexpr size_t kBlock = 16;

// ---- Hashing / MAC ----------------------------------------------------

Bytes sha256(ByteView msg);  // 32 bytes
Bytes hmac_sha256(ByteView key, ByteView msg);  // 32 bytes

// Session key schedule: HMAC-SHA-256(device_key, serial || nonce), first 16
// bytes. The entire scheme is computable offline by anyone holding the key,
// the serial and the nonce; that property is the testbed's central weakness.
Key16 derive_session_key(const Key16& device_key, const Serial& serial,
                         const Nonce16& nonce);

// ---- AES-128-ECB (PKCS#7) ----------------------------------------------
// The legacy session cipher. Equal plaintext blocks produce equal ciphertext
// blocks, which is exactly the leak the repetition detector looks for.

Bytes ecb_encrypt(const Key16& key, ByteView plaintext);
Result<Bytes> ecb_decrypt(const Key16& key, ByteView ciphertext);
// Single raw block, no padding (used by the sensor's template wrapping).
std::array<uint8_t, 16> aes_block_encrypt(const Key16& key,
                                          const std::array<uint8_t, 16>& block);

// ---- AES-128-GCM --------------------------------------------------------
// The hardened session cipher. Tag failures and stale nonces both surface as
// DecryptFailed to the peer.

struct GcmSealed {
  Bytes ciphertext;
  std::array<uint8_t, 16> tag;
};

GcmSealed gcm_encrypt(const Key16& key, const Nonce12& nonce, ByteView aad,
                      ByteView plaintext);
Result<Bytes> gcm_decrypt(const Key16& key, const Nonce12& nonce, ByteView aad,
                          ByteView ciphertext, ByteView tag);

// ---- X25519 key agreement ----------------------------------------------

struct KeyPair {
  Key32 pub;
  Key32 priv;  // raw 32-byte private key, drawn from a DeterministicRng
};

KeyPair x25519_keygen(DeterministicRng& rng);
// Shared secret; rejects low-order peer values. Callers feed the result to
// shared_to_key16 rather than using raw curve output as key material.
Result<Key32> x25519_shared(const Key32& priv, const Key32& peer_pub);
Key16 shared_to_key16(const Key32& shared);  // SHA-256, first 16 bytes

// ---- Ed25519 signatures --------------------------------------------------

KeyPair ed25519_keygen(DeterministicRng& rng);
Bytes ed25519_sign(const Key32& priv, ByteView msg);  // 64 bytes
bool ed25519_verify(const Key32& pub, ByteView msg, ByteView sig);

}  // namespace locklab::crypto
