#include "locklab/cryptobox.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <cassert>
#include <memory>
#include <stdexcept>

namespace locklab::crypto {

namespace {

struct CtxDeleter {
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
  void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};

using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CtxDeleter>;
using MdCtx = std::unique_ptr<EVP_MD_CTX, CtxDeleter>;
using Pkey = std::unique_ptr<EVP_PKEY, CtxDeleter>;
using PkeyCtx = std::unique_ptr<EVP_PKEY_CTX, CtxDeleter>;

// Crypto-backend failures are programming errors or broken environments, not
// testbed conditions; they terminate rather than propagate.
[[noreturn]] void die(const char* what) {
  throw std::runtime_error(std::string("crypto backend failure: ") + what);
}

Pkey raw_private(int type, const uint8_t* key, size_t len) {
  EVP_PKEY* p = EVP_PKEY_new_raw_private_key(type, nullptr, key, len);
  if (!p) die("raw private key");
  return Pkey(p);
}

Key32 raw_public_of(EVP_PKEY* pkey) {
  Key32 pub{};
  size_t len = pub.size();
  if (EVP_PKEY_get_raw_public_key(pkey, pub.data(), &len) != 1 || len != 32) {
    die("raw public key");
  }
  return pub;
}

}  // namespace

Bytes sha256(ByteView msg) {
  Bytes out(32);
  unsigned int len = 0;
  if (EVP_Digest(msg.data(), msg.size(), out.data(), &len, EVP_sha256(),
                 nullptr) != 1 ||
      len != 32) {
    die("sha256");
  }
  return out;
}

Bytes hmac_sha256(ByteView key, ByteView msg) {
  Bytes out(32);
  unsigned int len = 0;
  if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), msg.data(),
            msg.size(), out.data(), &len) ||
      len != 32) {
    die("hmac-sha256");
  }
  return out;
}

Key16 derive_session_key(const Key16& device_key, const Serial& serial,
                         const Nonce16& nonce) {
  Bytes msg;
  msg.reserve(serial.size() + nonce.size());
  append(msg, serial);
  append(msg, nonce);
  Bytes mac = hmac_sha256(device_key, msg);
  Key16 out;
  std::memcpy(out.data(), mac.data(), out.size());
  return out;
}

namespace {

Bytes cipher_run(const EVP_CIPHER* cipher, bool enc, const Key16& key,
                 const uint8_t* iv, bool padding, ByteView in, bool* ok) {
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) die("cipher ctx");
  if (EVP_CipherInit_ex(ctx.get(), cipher, nullptr, key.data(), iv,
                        enc ? 1 : 0) != 1) {
    die("cipher init");
  }
  EVP_CIPHER_CTX_set_padding(ctx.get(), padding ? 1 : 0);
  Bytes out(in.size() + kBlock);
  int n1 = 0, n2 = 0;
  if (EVP_CipherUpdate(ctx.get(), out.data(), &n1, in.data(),
                       static_cast<int>(in.size())) != 1) {
    *ok = false;
    return {};
  }
  if (EVP_CipherFinal_ex(ctx.get(), out.data() + n1, &n2) != 1) {
    *ok = false;  // bad padding on decrypt
    return {};
  }
  out.resize(static_cast<size_t>(n1 + n2));
  *ok = true;
  return out;
}

}  // namespace

Bytes ecb_encrypt(const Key16& key, ByteView plaintext) {
  bool ok = false;
  Bytes out = cipher_run(EVP_aes_128_ecb(), true, key, nullptr, true, plaintext,
                         &ok);
  if (!ok) die("ecb encrypt");
  return out;
}

Result<Bytes> ecb_decrypt(const Key16& key, ByteView ciphertext) {
  if (ciphertext.empty() || ciphertext.size() % kBlock != 0) {
    return Err::BadLength;
  }
  bool ok = false;
  Bytes out = cipher_run(EVP_aes_128_ecb(), false, key, nullptr, true,
                         ciphertext, &ok);
  if (!ok) return Err::BadPadding;
  return out;
}

std::array<uint8_t, 16> aes_block_encrypt(const Key16& key,
                                          const std::array<uint8_t, 16>& block) {
  bool ok = false;
  Bytes out =
      cipher_run(EVP_aes_128_ecb(), true, key, nullptr, false, block, &ok);
  if (!ok || out.size() != kBlock) die("aes block");
  std::array<uint8_t, 16> a;
  std::memcpy(a.data(), out.data(), kBlock);
  return a;
}

GcmSealed gcm_encrypt(const Key16& key, const Nonce12& nonce, ByteView aad,
                      ByteView plaintext) {
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) die("gcm ctx");
  if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, key.data(),
                         nonce.data()) != 1) {
    die("gcm init");
  }
  int n = 0;
  if (!aad.empty() &&
      EVP_EncryptUpdate(ctx.get(), nullptr, &n, aad.data(),
                        static_cast<int>(aad.size())) != 1) {
    die("gcm aad");
  }
  GcmSealed sealed;
  sealed.ciphertext.resize(plaintext.size());
  if (!plaintext.empty() &&
      EVP_EncryptUpdate(ctx.get(), sealed.ciphertext.data(), &n,
                        plaintext.data(),
                        static_cast<int>(plaintext.size())) != 1) {
    die("gcm update");
  }
  if (EVP_EncryptFinal_ex(ctx.get(), sealed.ciphertext.data(), &n) != 1) {
    die("gcm final");
  }
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, 16,
                          sealed.tag.data()) != 1) {
    die("gcm tag");
  }
  return sealed;
}

Result<Bytes> gcm_decrypt(const Key16& key, const Nonce12& nonce, ByteView aad,
                          ByteView ciphertext, ByteView tag) {
  if (tag.size() != 16) return Err::BadLength;
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) die("gcm ctx");
  if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, key.data(),
                         nonce.data()) != 1) {
    die("gcm init");
  }
  int n = 0;
  if (!aad.empty() &&
      EVP_DecryptUpdate(ctx.get(), nullptr, &n, aad.data(),
                        static_cast<int>(aad.size())) != 1) {
    die("gcm aad");
  }
  Bytes out(ciphertext.size());
  if (!ciphertext.empty() &&
      EVP_DecryptUpdate(ctx.get(), out.data(), &n, ciphertext.data(),
                        static_cast<int>(ciphertext.size())) != 1) {
    return Err::DecryptFailed;
  }
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, 16,
                          const_cast<uint8_t*>(tag.data())) != 1) {
    die("gcm set tag");
  }
  if (EVP_DecryptFinal_ex(ctx.get(), out.data(), &n) != 1) {
    return Err::DecryptFailed;
  }
  return out;
}

KeyPair x25519_keygen(DeterministicRng& rng) {
  KeyPair kp;
  kp.priv = rng.array<32>();
  Pkey pkey = raw_private(EVP_PKEY_X25519, kp.priv.data(), kp.priv.size());
  kp.pub = raw_public_of(pkey.get());
  return kp;
}

Result<Key32> x25519_shared(const Key32& priv, const Key32& peer_pub) {
  Pkey me = raw_private(EVP_PKEY_X25519, priv.data(), priv.size());
  EVP_PKEY* peer_raw = EVP_PKEY_new_raw_public_key(
      EVP_PKEY_X25519, nullptr, peer_pub.data(), peer_pub.size());
  if (!peer_raw) return Err::InvalidPublic;
  Pkey peer(peer_raw);
  PkeyCtx ctx(EVP_PKEY_CTX_new(me.get(), nullptr));
  if (!ctx) die("derive ctx");
  Key32 shared{};
  size_t len = shared.size();
  if (EVP_PKEY_derive_init(ctx.get()) != 1 ||
      EVP_PKEY_derive_set_peer(ctx.get(), peer.get()) != 1 ||
      EVP_PKEY_derive(ctx.get(), shared.data(), &len) != 1 || len != 32) {
    return Err::InvalidPublic;  // low-order point or malformed value
  }
  return shared;
}

Key16 shared_to_key16(const Key32& shared) {
  Bytes digest = sha256(shared);
  Key16 out;
  std::memcpy(out.data(), digest.data(), out.size());
  return out;
}

KeyPair ed25519_keygen(DeterministicRng& rng) {
  KeyPair kp;
  kp.priv = rng.array<32>();
  Pkey pkey = raw_private(EVP_PKEY_ED25519, kp.priv.data(), kp.priv.size());
  kp.pub = raw_public_of(pkey.get());
  return kp;
}

Bytes ed25519_sign(const Key32& priv, ByteView msg) {
  Pkey pkey = raw_private(EVP_PKEY_ED25519, priv.data(), priv.size());
  MdCtx ctx(EVP_MD_CTX_new());
  if (!ctx) die("sign ctx");
  if (EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) !=
      1) {
    die("sign init");
  }
  Bytes sig(64);
  size_t len = sig.size();
  if (EVP_DigestSign(ctx.get(), sig.data(), &len, msg.data(), msg.size()) !=
          1 ||
      len != 64) {
    die("sign");
  }
  return sig;
}

bool ed25519_verify(const Key32& pub, ByteView msg, ByteView sig) {
  if (sig.size() != 64) return false;
  EVP_PKEY* raw = EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr,
                                              pub.data(), pub.size());
  if (!raw) return false;
  Pkey pkey(raw);
  MdCtx ctx(EVP_MD_CTX_new());
  if (!ctx) die("verify ctx");
  if (EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) !=
      1) {
    return false;
  }
  return EVP_DigestVerify(ctx.get(), sig.data(), sig.size(), msg.data(),
                          msg.size()) == 1;
}

}  // namespace locklab::crypto
