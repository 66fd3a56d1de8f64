/* Copyright 2026 The patchprop Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface of libpatchprop: patch-dictionary label propagation for
 * interactive image segmentation.
 *
 * All functions return a pp_status. On failure a message describing the
 * error is available from pp_last_error() on the same thread until the next
 * call. Handles are opaque; every handle-producing call has a matching free
 * function that accepts NULL.
 */
#ifndef PATCHPROP_H
#define PATCHPROP_H

#include <stddef.h>
#include <stdint.h>

#if defined(PATCHPROP_BUILDING_LIBRARY)
#define PP_API __attribute__((visibility("default")))
#else
#define PP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pp_status {
  PP_OK = 0,
  PP_ERR_BOUNDS = 1,
  PP_ERR_CONFIG = 2,
  PP_ERR_NO_PATCH = 3,
  PP_ERR_CORRUPTION = 4,
  PP_ERR_SHAPE_MISMATCH = 5,
  PP_ERR_IO = 6,
  PP_ERR_UNSUPPORTED = 7,
  PP_ERR_NOT_READY = 8,
  PP_ERR_UNKNOWN_CLASS = 9,
  PP_ERR_NOT_FOUND = 10,
  PP_ERR_INVALID_ARGUMENT = 100,
  PP_ERR_INTERNAL = 101
} pp_status;

PP_API const char* pp_version(void);
PP_API const char* pp_status_name(pp_status status);
PP_API const char* pp_last_error(void);

/* ------------------------------------------------------------ runtime */

typedef enum pp_log_level {
  PP_LOG_DEBUG = 0,
  PP_LOG_INFO = 1,
  PP_LOG_WARNING = 2,
  PP_LOG_ERROR = 3
} pp_log_level;

typedef void (*pp_log_fn)(pp_log_level level, const char* message, void* user);

/* NULL restores the stderr logger. */
PP_API void pp_set_log_callback(pp_log_fn fn, void* user);
PP_API void pp_set_log_level(pp_log_level level);
/* 0 = hardware concurrency. */
PP_API void pp_set_threads(unsigned threads);

/* ------------------------------------------------------------ images */

typedef struct pp_image pp_image;

/* PNG (one slice) or multi-page TIFF, intensities scaled to [0,1]. */
PP_API pp_status pp_image_load(const char* path, pp_image** out);
PP_API pp_status pp_image_decode(const uint8_t* bytes, size_t size, pp_image** out);
/* One slice from interleaved values in [0,1], row-major. */
PP_API pp_status pp_image_wrap(int width, int height, int channels, const double* values,
                               pp_image** out);
PP_API void pp_image_free(pp_image* image);
PP_API pp_status pp_image_info(const pp_image* image, int* width, int* height, int* channels,
                               int* slices);

/* ------------------------------------------------------------ engine */

typedef enum pp_extractor {
  PP_EXTRACTOR_INTENSITY = 1,
  PP_EXTRACTOR_MULTICHANNEL = 2
} pp_extractor;

PP_API pp_status pp_extractor_parse(const char* name, pp_extractor* out);

typedef struct pp_config {
  int patch_size;     /* odd M */
  int branching;      /* b >= 2 */
  int layers;         /* t >= 0 */
  int iterations;     /* k-means iterations per node */
  uint64_t seed;
  pp_extractor extractor;
  size_t subsample;   /* training patches */
  int classes;        /* C */
} pp_config;

PP_API void pp_config_default(pp_config* config);

typedef struct pp_update_options {
  int steps;          /* 1 or 2 */
  int binarise;
  int overwrite;
  double epsilon;
} pp_update_options;

PP_API void pp_update_options_default(pp_update_options* options);

typedef struct pp_build_stats {
  int width;
  int height;
  size_t nodes;       /* K */
  size_t nnz;         /* nonzeros of B */
  double features_ms;
  double tree_ms;
  double assign_ms;
  double graph_ms;
  double normalize_ms;
} pp_build_stats;

typedef struct pp_engine pp_engine;

/* Builds dictionary, graph and transforms for the first slice of `image`. */
PP_API pp_status pp_engine_build(const pp_image* image, const pp_config* config,
                                 pp_engine** out);
PP_API void pp_engine_free(pp_engine* engine);
PP_API pp_status pp_engine_stats(const pp_engine* engine, pp_build_stats* out);

/* Marks: indexed PNG (palette index = class, 0 = unmarked), a per-pixel
 * class array, or round-brush strokes (class 0 erases). */
PP_API pp_status pp_engine_set_marks_png(pp_engine* engine, const char* path);
PP_API pp_status pp_engine_set_marks(pp_engine* engine, const uint8_t* classes, size_t count);
PP_API pp_status pp_engine_add_stroke(pp_engine* engine, const double* xy, size_t points,
                                      double radius, int cls);
PP_API pp_status pp_engine_marked_pixels(const pp_engine* engine, size_t* out);

PP_API pp_status pp_engine_update(pp_engine* engine, const pp_update_options* options);
/* Results of the last update: `count` must be width*height*classes
 * (interleaved per pixel) or width*height. */
PP_API pp_status pp_engine_probabilities(const pp_engine* engine, double* out, size_t count);
PP_API pp_status pp_engine_segmentation(const pp_engine* engine, uint8_t* out, size_t count);
/* probabilities.npy, prob_class<c>.tif, labels.tif, segmentation.png and
 * marks.png for the last update. */
PP_API pp_status pp_engine_write_outputs(const pp_engine* engine, const char* dir);
PP_API pp_status pp_engine_export_model(const pp_engine* engine, const char* path);

/* ------------------------------------------------------------ models */

typedef struct pp_model pp_model;

PP_API pp_status pp_model_load(const char* path, pp_model** out);
PP_API void pp_model_free(pp_model* model);
PP_API pp_status pp_model_info(const pp_model* model, int* classes, int* patch_size,
                               size_t* nodes);

typedef struct pp_stack_options {
  double epsilon;
  size_t min_component;   /* 0 disables small-component removal */
  int detect_centres;
  int centre_class;       /* 0 = last class */
  int window_radius;
  double min_distance;
  double threshold;
  double sigma;
  unsigned workers;       /* 0 = hardware concurrency */
} pp_stack_options;

PP_API void pp_stack_options_default(pp_stack_options* options);

typedef void (*pp_progress_fn)(size_t done, size_t total, void* user);

/* Applies the model to every slice and writes probabilities.npy,
 * prob_class<c>.tif, labels.tif and (optionally) centres.csv into dir. */
PP_API pp_status pp_model_apply(const pp_model* model, const pp_image* image,
                                const pp_stack_options* options, const char* dir,
                                pp_progress_fn progress, void* user);
/* Probabilities of the first slice, width*height*classes values. */
PP_API pp_status pp_model_apply_probabilities(const pp_model* model, const pp_image* image,
                                              double* out, size_t count);

/* ------------------------------------------------------------ bench */

typedef struct pp_bench_row {
  int size;
  int patch_size;
  int branching;
  int layers;
  size_t nodes;
  size_t nnz;
  double tree_ms;
  double graph_ms;
  double normalize_ms;
  double update_p50_ms;
  double update_p90_ms;
  double update_p99_ms;
} pp_bench_row;

/* One row per combination of the given grids; `rows` receives at most
 * `capacity` rows and `*count` the number produced. */
PP_API pp_status pp_bench_run(const int* sizes, size_t n_sizes, const int* patch_sizes,
                              size_t n_patch_sizes, const int* branchings, size_t n_branchings,
                              const int* layers, size_t n_layers, int repeats,
                              const pp_update_options* options, pp_bench_row* rows,
                              size_t capacity, size_t* count);

/* ------------------------------------------------------------ phantoms */

typedef enum pp_phantom_kind {
  PP_PHANTOM_DISKS = 0,
  PP_PHANTOM_TWO_TEXTURE = 1,
  PP_PHANTOM_CELLS = 2
} pp_phantom_kind;

typedef struct pp_phantom_params {
  pp_phantom_kind kind;
  int width;
  int height;
  int slices;
  uint64_t seed;
  double noise;
  int count;
  double radius;
  double min_gap;
  int marked_objects;
  double dot_radius;
  double scribble_radius;
} pp_phantom_params;

PP_API pp_status pp_phantom_kind_parse(const char* name, pp_phantom_kind* out);
PP_API void pp_phantom_params_default(pp_phantom_params* params);
/* image.png or image.tif, truth.png, marks.png and centres.csv. */
PP_API pp_status pp_phantom_write(const pp_phantom_params* params, const char* dir);

/* ------------------------------------------------------------ server */

typedef struct pp_server_limits {
  size_t max_sessions;
  size_t max_body_bytes;
  size_t max_jobs;
} pp_server_limits;

PP_API void pp_server_limits_default(pp_server_limits* limits);

typedef struct pp_server pp_server;

/* Serves on a background thread; port 0 picks a free port. */
PP_API pp_status pp_server_start(const char* host, int port, const pp_server_limits* limits,
                                 pp_server** out, int* bound_port);
/* Serves on the calling thread until the process ends. */
PP_API pp_status pp_server_run(const char* host, int port, const pp_server_limits* limits);
PP_API void pp_server_stop(pp_server* server);
PP_API void pp_server_free(pp_server* server);

#ifdef __cplusplus
}
#endif

#endif /* PATCHPROP_H */
