/* Links against the shared library through the generated header.
   Usage: smoke <checkpoint> <request.json> */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "socp.h"

static char *slurp(const char *path) {
  FILE *f = fopen(path, "rb");
  if (!f) return NULL;
  fseek(f, 0, SEEK_END);
  long n = ftell(f);
  fseek(f, 0, SEEK_SET);
  char *buf = malloc((size_t)n + 1);
  if (fread(buf, 1, (size_t)n, f) != (size_t)n) {
    fclose(f);
    free(buf);
    return NULL;
  }
  buf[n] = '\0';
  fclose(f);
  return buf;
}

int main(int argc, char **argv) {
  if (argc != 3) return 64;
  printf("version %s\n", socp_version());

  SocpModel *model = NULL;
  if (socp_model_load("/nonexistent/model.ckpt", &model) != SOCP_STATUS_IO || model != NULL) return 10;
  if (socp_last_error_message() == NULL) return 11;

  if (socp_model_load(argv[1], &model) != SOCP_STATUS_OK) {
    fprintf(stderr, "load: %s\n", socp_last_error_message());
    return 12;
  }
  if (socp_last_error_message() != NULL) return 13;

  char *request = slurp(argv[2]);
  if (!request) return 14;
  char *response = NULL;
  if (socp_generate_json(model, request, &response) != SOCP_STATUS_OK) {
    fprintf(stderr, "generate: %s\n", socp_last_error_message());
    return 15;
  }
  if (strstr(response, "\"story\"") == NULL) return 16;
  socp_string_free(response);
  free(request);

  response = NULL;
  if (socp_generate_json(model, "{\"first_sentence\":", &response) != SOCP_STATUS_MALFORMED_JSON) return 17;
  if (response != NULL) return 18;

  double score = -1.0;
  const char *c = "[\"the cat sat on the mat .\"]";
  if (socp_bleu(c, c, 4, &score) != SOCP_STATUS_OK || score != 1.0) return 19;
  if (socp_rouge_l(c, c, &score) != SOCP_STATUS_OK || score != 1.0) return 20;

  socp_model_free(model);
  puts("ok");
  return 0;
}
