// Small deterministic backbone implementing the plugin ABI, used to exercise
// dynamic loading and the text-side vector-Jacobian path.
//   tokenizer: one token per byte, id = byte value, pad id 0
//   text:      f(seq) = P^T tanh(mean_t seq_t)
//   image:     g(x)   = A x + c  over 4 x 4 x 1 images

#include <cmath>
#include <cstring>
#include <vector>

#include "ordino/backbone_adapter.h"

namespace {

constexpr int kVocab = 256;
constexpr int kEmbed = 4;
constexpr int kFeat = 3;
constexpr int kSide = 4;
constexpr int kPixels = kSide * kSide;

struct State {
  std::vector<double> table = std::vector<double>(kVocab * kEmbed);
  double proj[kEmbed][kFeat];
  double a[kFeat][kPixels];
  double c[kFeat];
};

double pseudo(unsigned i) {
  // Deterministic values in [-1, 1].
  unsigned x = i * 2654435761u + 12345u;
  x ^= x >> 13;
  x *= 0x5bd1e995u;
  x ^= x >> 15;
  return static_cast<double>(x % 20001u) / 10000.0 - 1.0;
}

int tokenize(void*, const char* text, int32_t* ids, int32_t cap, int32_t* len) {
  const auto n = static_cast<int32_t>(std::strlen(text));
  *len = n;
  for (int32_t i = 0; i < n && i < cap; ++i) ids[i] = static_cast<unsigned char>(text[i]);
  return 0;
}

const double* embedding_table(void* ctx) { return static_cast<State*>(ctx)->table.data(); }

void pooled(const double* seq, int32_t len, double* out) {
  for (int j = 0; j < kEmbed; ++j) {
    double s = 0.0;
    for (int32_t t = 0; t < len; ++t) s += seq[t * kEmbed + j];
    out[j] = s / len;
  }
}

int encode_text(void* ctx, const double* seq, int32_t len, double* out) {
  if (len <= 0) return 1;
  auto* st = static_cast<State*>(ctx);
  double m[kEmbed];
  pooled(seq, len, m);
  for (int f = 0; f < kFeat; ++f) {
    out[f] = 0.0;
    for (int j = 0; j < kEmbed; ++j) out[f] += st->proj[j][f] * std::tanh(m[j]);
  }
  return 0;
}

int encode_text_vjp(void* ctx, const double* seq, int32_t len, const double* grad_out, double* grad_seq) {
  if (len <= 0) return 1;
  auto* st = static_cast<State*>(ctx);
  double m[kEmbed];
  pooled(seq, len, m);
  for (int j = 0; j < kEmbed; ++j) {
    double g = 0.0;
    for (int f = 0; f < kFeat; ++f) g += st->proj[j][f] * grad_out[f];
    const double th = std::tanh(m[j]);
    g *= (1.0 - th * th) / len;
    for (int32_t t = 0; t < len; ++t) grad_seq[t * kEmbed + j] = g;
  }
  return 0;
}

int encode_image(void* ctx, const double* pixels, double* out) {
  auto* st = static_cast<State*>(ctx);
  for (int f = 0; f < kFeat; ++f) {
    out[f] = st->c[f];
    for (int p = 0; p < kPixels; ++p) out[f] += st->a[f][p] * pixels[p];
  }
  return 0;
}

void destroy(void* ctx) { delete static_cast<State*>(ctx); }

}  // namespace

extern "C" __attribute__((visibility("default"))) int ordino_backbone_create(const char* options,
                                                                               ordino_backbone_v1* out) {
  if (options != nullptr && std::strcmp(options, "fail") == 0) return 1;
  auto* st = new State();
  for (unsigned i = 0; i < st->table.size(); ++i) st->table[i] = pseudo(i);
  for (int j = 0; j < kEmbed; ++j)
    for (int f = 0; f < kFeat; ++f) st->proj[j][f] = pseudo(10000 + j * kFeat + f);
  for (int f = 0; f < kFeat; ++f) {
    st->c[f] = 0.5 + 0.1 * f;
    for (int p = 0; p < kPixels; ++p) st->a[f][p] = pseudo(20000 + f * kPixels + p);
  }
  std::memset(out, 0, sizeof *out);
  out->abi_version = ORDINO_BACKBONE_ABI_VERSION;
  out->d_embed = kEmbed;
  out->d_feat = kFeat;
  out->vocab_size = kVocab;
  out->pad_id = 0;
  out->image_height = kSide;
  out->image_width = kSide;
  out->image_channels = 1;
  out->ctx = st;
  out->tokenize = tokenize;
  out->embedding_table = embedding_table;
  out->encode_text = encode_text;
  out->encode_text_vjp = encode_text_vjp;
  out->encode_image = encode_image;
  out->encode_image_vjp = nullptr;
  out->destroy = destroy;
  return 0;
}
