#include "elda/hyperparams.hpp"

#include <stdexcept>

#include "elda/common.hpp"

namespace elda {

void Hyperparams::validate() const {
  if (!(alpha > 0)) throw std::invalid_argument("hyperparams: alpha must be > 0");
  if (!(beta_word > 0) || !(beta_mention > 0))
    throw std::invalid_argument("hyperparams: beta must be > 0");
  if (num_topics == 0) throw std::invalid_argument("hyperparams: num_topics must be >= 1");
  if (sweeps == 0 || burnin >= sweeps)
    throw std::invalid_argument("hyperparams: need 0 <= burnin < sweeps");
  if (!(rho_local >= 0 && rho_local <= 1) || !(rho_global >= 0 && rho_global <= 1))
    throw std::invalid_argument("hyperparams: rho must lie in [0, 1]");
  if (!(epsilon >= 0 && epsilon <= 1)) throw std::invalid_argument("hyperparams: epsilon in [0, 1]");
  if (!(tau >= 0 && tau <= 1)) throw std::invalid_argument("hyperparams: tau in [0, 1]");
  if (top_topics_per_word == 0)
    throw std::invalid_argument("hyperparams: top_topics_per_word must be >= 1");
}

std::string Hyperparams::encode() const {
  std::string v;
  put_f64(v, alpha);
  put_f64(v, beta_word);
  put_f64(v, beta_mention);
  put_u32(v, num_topics);
  put_u32(v, vocab_words);
  put_u32(v, vocab_mentions);
  put_u32(v, sweeps);
  put_u32(v, burnin);
  put_u32(v, iterations);
  put_u32(v, top_topics_per_word);
  put_f64(v, rho_local);
  put_f64(v, rho_global);
  put_f64(v, epsilon);
  put_f64(v, tau);
  put_u8(v, static_cast<uint8_t>((use_coherence ? 1 : 0) | (coherence_words ? 2 : 0)));
  return v;
}

Hyperparams Hyperparams::decode(const std::string& value) {
  ByteReader r(value, "hyperparams record");
  Hyperparams h;
  h.alpha = r.f64();
  h.beta_word = r.f64();
  h.beta_mention = r.f64();
  h.num_topics = r.u32();
  h.vocab_words = r.u32();
  h.vocab_mentions = r.u32();
  h.sweeps = r.u32();
  h.burnin = r.u32();
  h.iterations = r.u32();
  h.top_topics_per_word = r.u32();
  h.rho_local = r.f64();
  h.rho_global = r.f64();
  h.epsilon = r.f64();
  h.tau = r.f64();
  uint8_t flags = r.u8();
  h.use_coherence = flags & 1;
  h.coherence_words = flags & 2;
  r.expect_done();
  return h;
}

}  // namespace elda
