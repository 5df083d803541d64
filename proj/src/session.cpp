#include "locklab/session.hpp"

namespace locklab {

namespace {

crypto::Nonce12 gcm_nonce(uint32_t endpoint, uint64_t counter) {
  crypto::Nonce12 n{};
  Bytes tmp;
  put_u32be(tmp, endpoint);
  put_u64be(tmp, counter);
  std::memcpy(n.data(), tmp.data(), n.size());
  return n;
}

}  // namespace

Bytes SessionCrypto::seal(uint8_t opcode, ByteView plain) {
  if (cipher_ == SessionCipher::Ecb) {
    return crypto::ecb_encrypt(key_, plain);
  }
  uint64_t counter = ++send_counter_;
  uint8_t aad[1] = {opcode};
  auto sealed = crypto::gcm_encrypt(key_, gcm_nonce(local_, counter),
                                    ByteView(aad, 1), plain);
  Bytes out;
  put_u64be(out, counter);
  append(out, sealed.ciphertext);
  append(out, sealed.tag);
  return out;
}

Result<Bytes> SessionCrypto::open(uint8_t opcode, uint32_t peer_endpoint,
                                  ByteView sealed) {
  if (cipher_ == SessionCipher::Ecb) {
    auto plain = crypto::ecb_decrypt(key_, sealed);
    if (!plain.ok()) {
      // A sealed frame that fails structural or padding checks is
      // indistinguishable from garbage to the peer.
      return Err::DecryptFailed;
    }
    return plain.take();
  }
  if (sealed.size() < 8 + 16) return Err::DecryptFailed;
  uint64_t counter = get_u64be(sealed.data());
  if (counter <= peer_counter_) return Err::DecryptFailed;  // replay / stale
  ByteView ct = sealed.subspan(8, sealed.size() - 8 - 16);
  ByteView tag = sealed.subspan(sealed.size() - 16);
  uint8_t aad[1] = {opcode};
  auto plain = crypto::gcm_decrypt(key_, gcm_nonce(peer_endpoint, counter),
                                   ByteView(aad, 1), ct, tag);
  if (!plain.ok()) return Err::DecryptFailed;
  peer_counter_ = counter;
  return plain.take();
}

}  // namespace locklab
