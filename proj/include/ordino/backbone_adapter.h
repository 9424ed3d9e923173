/*
 * Plugin ABI for pretrained vision-language backbones.
 *
 * A backbone plugin is a shared library exporting one C entry point (by
 * default "ordino_backbone_create") with the signature ordino_backbone_entry.
 * The entry point fills an ordino_backbone_v1 table; the library calls
 * destroy(ctx) when it no longer needs the backbone.
 *
 * Text-side training only needs a vector-Jacobian product through the frozen
 * text transformer, so encode_text_vjp is required. The image encoder is
 * treated as frozen; encode_image_vjp is reserved and may be NULL.
 */
#ifndef ORDINO_BACKBONE_ADAPTER_H
#define ORDINO_BACKBONE_ADAPTER_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define ORDINO_BACKBONE_ABI_VERSION 1u

typedef struct ordino_backbone_v1 {
  uint32_t abi_version;
  int32_t d_embed;
  int32_t d_feat;
  int32_t vocab_size;
  int32_t pad_id;
  /* Expected image geometry; pixels are HWC doubles in [0, 1]. */
  int32_t image_height;
  int32_t image_width;
  int32_t image_channels;
  void* ctx;

  /* Writes at most cap ids, stores the full count in *len. Returns 0 on success. */
  int (*tokenize)(void* ctx, const char* text, int32_t* ids, int32_t cap, int32_t* len);
  /* Row-major vocab_size x d_embed word-embedding table, owned by the plugin. */
  const double* (*embedding_table)(void* ctx);
  /* seq: T x d_embed row-major; out: d_feat (unnormalised). */
  int (*encode_text)(void* ctx, const double* seq, int32_t len, double* out);
  /* grad_seq (T x d_embed) = J^T grad_out for the map encode_text. */
  int (*encode_text_vjp)(void* ctx, const double* seq, int32_t len, const double* grad_out, double* grad_seq);
  /* pixels: image_height * image_width * image_channels; out: d_feat. */
  int (*encode_image)(void* ctx, const double* pixels, double* out);
  int (*encode_image_vjp)(void* ctx, const double* pixels, const double* grad_out, double* grad_pixels);
  void (*destroy)(void* ctx);
} ordino_backbone_v1;

/* options: free-form string taken from the run configuration. */
typedef int (*ordino_backbone_entry)(const char* options, ordino_backbone_v1* out);

#ifdef __cplusplus
}
#endif

#endif /* ORDINO_BACKBONE_ADAPTER_H */
