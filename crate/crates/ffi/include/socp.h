#ifndef SOCP_H
#define SOCP_H

#include <stdint.h>

// Outcome of a call. Zero is success.
typedef enum SocpStatus {
  SOCP_STATUS_OK = 0,
  SOCP_STATUS_NULL_ARGUMENT = 1,
  SOCP_STATUS_INVALID_UTF8 = 2,
  SOCP_STATUS_MALFORMED_JSON = 3,
  // Well-formed input that fails validation (labels, arc lengths, ...).
  SOCP_STATUS_INVALID_REQUEST = 4,
  SOCP_STATUS_IO = 5,
  SOCP_STATUS_CHECKPOINT = 6,
  // Any other library error; the message carries its code.
  SOCP_STATUS_INTERNAL = 7,
  SOCP_STATUS_PANIC = 8,
} SocpStatus;

// Loaded model. Immutable after loading, so one handle may be shared by
// threads that only call `socp_generate_json` and `socp_labels_json`.
typedef struct SocpModel SocpModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Loads a checkpoint. On success `*out` owns a new handle.
//
// # Safety
// `path` is a NUL-terminated string; `out` is writable.
enum SocpStatus socp_model_load(const char *path, struct SocpModel **out);

// Releases a model handle. Null is ignored.
//
// # Safety
// `model` came from `socp_model_load` and is not used afterwards.
void socp_model_free(struct SocpModel *model);

// Runs a generation request (the HTTP `/generate` body) and writes the
// response JSON to `*out`.
//
// # Safety
// `model` is a live handle, `request_json` a NUL-terminated string, `out`
// writable.
enum SocpStatus socp_generate_json(const struct SocpModel *model,
                                   const char *request_json,
                                   char **out);

// Writes the model's label inventories (the `/labels` body) to `*out`.
//
// # Safety
// `model` is a live handle and `out` writable.
enum SocpStatus socp_labels_json(const struct SocpModel *model, char **out);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` came from this library and is not used afterwards.
void socp_string_free(char *s);

// Message of the most recent failed call on this thread, or null if the
// most recent call succeeded. Valid until the next call on this thread.
const char *socp_last_error_message(void);

// Library version as a static string.
const char *socp_version(void);

// Corpus BLEU-`n` of candidate sentences against references, both given as
// JSON arrays of strings of equal length.
//
// # Safety
// Both inputs are NUL-terminated strings; `out` is writable.
enum SocpStatus socp_bleu(const char *candidates_json,
                          const char *references_json,
                          uint32_t n,
                          double *out);

// Mean ROUGE-L F1 over sentence pairs.
//
// # Safety
// As for `socp_bleu`.
enum SocpStatus socp_rouge_l(const char *candidates_json, const char *references_json, double *out);

// Mean METEOR-lite over sentence pairs.
//
// # Safety
// As for `socp_bleu`.
enum SocpStatus socp_meteor_lite(const char *candidates_json,
                                 const char *references_json,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOCP_H */
