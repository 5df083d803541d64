#pragma once

#include "locklab/cryptobox.hpp"
#include "locklab/result.hpp"

namespace locklab {

// Cipher used inside an established session. Legacy sessions run AES-128-ECB
// with PKCS#7 (stateless, replayable); hardened sessions run AES-128-GCM with
// a direction-bound counter nonce (replay of a sealed frame is rejected).
enum class SessionCipher : uint8_t { Ecb = 0, Gcm = 1 };

// Endpoint identifiers baked into GCM nonces so the two directions of one
// session never share a nonce. The serving side (lock, cloud) is the server.
constexpr uint32_t kClientEndpoint = 1;
constexpr uint32_t kServerEndpoint = 2;

// One side of an established session. Sealed payload layouts:
//
//   Ecb: ecb_encrypt(key, plain)                      (PKCS#7 padded)
//   Gcm: counter(8, BE) || ciphertext || tag(16)
//        nonce = sender_endpoint(4, BE) || counter(8, BE), AAD = opcode
//
// GCM counters are per-direction and strictly increasing; a replayed or
// reordered frame fails as DecryptFailed (stale counter or bad tag alike).
class SessionCrypto {
 public:
  SessionCrypto() = default;
  SessionCrypto(crypto::Key16 key, SessionCipher cipher, uint32_t local_endpoint)
      : key_(key), cipher_(cipher), local_(local_endpoint) {}

  Bytes seal(uint8_t opcode, ByteView plain);
  Result<Bytes> open(uint8_t opcode, uint32_t peer_endpoint, ByteView sealed);

  SessionCipher cipher() const { return cipher_; }
  const crypto::Key16& key() const { return key_; }

 private:
  crypto::Key16 key_{};
  SessionCipher cipher_ = SessionCipher::Ecb;
  uint32_t local_ = 0;
  uint64_t send_counter_ = 0;
  uint64_t peer_counter_ = 0;
};

}  // namespace locklab
