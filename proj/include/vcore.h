/* vcore: C API for the causality-constrained video projection stack.
 *
 * All functions are synchronous. Handle-returning functions return NULL on
 * failure; int-returning functions return a VCORE_* status code. In both
 * cases vcore_last_error() / vcore_last_error_code() describe the most recent
 * failure on the calling thread. Strings returned as char* are heap-allocated
 * and must be released with vcore_string_free().
 */
#ifndef VCORE_H
#define VCORE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define VCORE_OK 0
#define VCORE_ERR_VALIDATION 1 /* bad config, shapes, preconditions */
#define VCORE_ERR_IO 2         /* filesystem or file-format failures */
#define VCORE_ERR_NUMERIC 3    /* non-finite values, divergence */

typedef struct vcore_config vcore_config;   /* a full run configuration */
typedef struct vcore_metrics vcore_metrics; /* key/value results of a run */

const char* vcore_version(void);
const char* vcore_last_error(void);
int vcore_last_error_code(void);

/* ---- configuration ---- */

/* Toy-scale defaults; every field can be overridden with vcore_config_set. */
vcore_config* vcore_config_default(void);
vcore_config* vcore_config_load(const char* path);
int vcore_config_save(const vcore_config* cfg, const char* path);
int vcore_config_set(vcore_config* cfg, const char* key, const char* value);
/* Returns the value for a config key, or NULL for unknown keys. */
char* vcore_config_get(const vcore_config* cfg, const char* key);
void vcore_config_free(vcore_config* cfg);

/* ---- commands ---- */

/* Attention-mask dump: header line "T=.. K=.. summary=.. mode=..", then S
 * lines of S '1'/'0' characters. */
char* vcore_render_mask(const vcore_config* cfg);

/* Generates train.vcds, test.vcds and manifest.txt under out_dir. */
int vcore_generate_dataset(const vcore_config* cfg, const char* out_dir);

/* Trains per the config, writing checkpoint.vckpt, config.txt, metrics.kv,
 * metrics.txt and audit.txt under out_dir. */
vcore_metrics* vcore_train(const vcore_config* cfg, const char* out_dir);

/* Scores a checkpoint against a .vcds dataset file. */
vcore_metrics* vcore_evaluate(const char* checkpoint_path, const char* dataset_path);

/* Leakage audit of a freshly initialized model (or of checkpoint_path when
 * non-NULL); returns the report text. */
char* vcore_audit(const vcore_config* cfg, const char* checkpoint_path, int trials,
                  uint64_t seed);

/* Runs the ablation grid (axes_csv like "components,summary"; NULL or empty
 * for the default grid) and returns the comparison table. */
char* vcore_ablate(const vcore_config* cfg, const char* axes_csv, const char* out_dir);

/* Sweeps "K"/"spatial_tokens" or "T"/"frames" over values_csv (e.g.
 * "1,4,8,16") and returns the comparison table. */
char* vcore_sweep(const vcore_config* cfg, const char* param, const char* values_csv,
                  const char* out_dir);

/* One forward pass of a freshly initialized model over random frames; writes
 * the projected sequence shape into *rows / *cols. */
int vcore_forward_shape(const vcore_config* cfg, uint64_t seed, size_t* rows, size_t* cols);

/* ---- results ---- */

/* Value of a metrics key (e.g. "final.test_accuracy"); NaN if missing. */
double vcore_metrics_get(const vcore_metrics* m, const char* key);
/* All metrics as key=value text. */
char* vcore_metrics_text(const vcore_metrics* m);
void vcore_metrics_free(vcore_metrics* m);

void vcore_string_free(char* s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* VCORE_H */
