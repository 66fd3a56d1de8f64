// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "patchprop.h"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "patchprop/bench.hpp"
#include "patchprop/container.hpp"
#include "patchprop/engine.hpp"
#include "patchprop/error.hpp"
#include "patchprop/http_server.hpp"
#include "patchprop/io.hpp"
#include "patchprop/log.hpp"
#include "patchprop/parallel.hpp"
#include "patchprop/phantom.hpp"
#include "patchprop/strokes.hpp"
#include "patchprop/transfer.hpp"

using namespace patchprop;

struct pp_image {
  std::vector<PixelGrid> slices;
};

struct pp_engine {
  Engine engine;
  UserMarking marks;
  std::optional<UpdateResult> result;
  UpdateOptions options;
  std::string image_name;
};

struct pp_model {
  TrainedModel model;
};

struct pp_server {
  explicit pp_server(ServerLimits limits) : server(limits) {}
  HttpServer server;
};

namespace {

thread_local std::string g_last_error;

pp_status fail_with(pp_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename Fn>
pp_status guard(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return PP_OK;
  } catch (const Error& e) {
    return fail_with(static_cast<pp_status>(e.code()), e.what());
  } catch (const std::exception& e) {
    return fail_with(PP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail_with(PP_ERR_INTERNAL, "unknown failure");
  }
}

#define PP_REQUIRE(cond, what)                                 \
  do {                                                         \
    if (!(cond)) return fail_with(PP_ERR_INVALID_ARGUMENT, what); \
  } while (0)

UpdateOptions to_options(const pp_update_options* o) {
  UpdateOptions u;
  if (o) {
    u.steps = o->steps;
    u.binarise = o->binarise != 0;
    u.overwrite = o->overwrite != 0;
    u.epsilon = o->epsilon;
  }
  return u;
}

EngineConfig to_config(const pp_config& c) {
  EngineConfig e;
  e.patch_size = c.patch_size;
  e.tree.branching = c.branching;
  e.tree.layers = c.layers;
  e.tree.iterations = c.iterations;
  e.tree.seed = c.seed;
  e.extractor = static_cast<ExtractorKind>(c.extractor);
  e.subsample = c.subsample;
  e.classes = c.classes;
  return e;
}

StackOptions to_stack_options(const pp_stack_options* o) {
  StackOptions s;
  if (!o) return s;
  s.epsilon = o->epsilon;
  s.min_component = o->min_component;
  s.detect_centres = o->detect_centres != 0;
  s.centre_class = o->centre_class;
  s.centre_options.window_radius = o->window_radius;
  s.centre_options.min_distance = o->min_distance;
  s.centre_options.threshold = o->threshold;
  s.centre_options.sigma = o->sigma;
  s.workers = o->workers;
  return s;
}

ServerLimits to_limits(const pp_server_limits* l) {
  ServerLimits s;
  if (l) {
    s.max_sessions = l->max_sessions;
    s.max_body_bytes = l->max_body_bytes;
    s.max_jobs = l->max_jobs;
  }
  return s;
}

}  // namespace

extern "C" {

const char* pp_version(void) { return "1.0.0"; }

const char* pp_status_name(pp_status status) {
  switch (status) {
    case PP_OK: return "ok";
    case PP_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case PP_ERR_INTERNAL: return "internal";
    default:
      if (status >= PP_ERR_BOUNDS && status <= PP_ERR_NOT_FOUND) {
        return error_code_name(static_cast<ErrorCode>(status));
      }
      return "unknown";
  }
}

const char* pp_last_error(void) { return g_last_error.c_str(); }

void pp_set_log_callback(pp_log_fn fn, void* user) {
  if (!fn) {
    set_log_sink({});
    return;
  }
  set_log_sink([fn, user](LogLevel level, const std::string& message) {
    fn(static_cast<pp_log_level>(level), message.c_str(), user);
  });
}

void pp_set_log_level(pp_log_level level) { set_log_level(static_cast<LogLevel>(level)); }

void pp_set_threads(unsigned threads) { set_worker_threads(threads); }

// ---------------------------------------------------------------- images

pp_status pp_image_load(const char* path, pp_image** out) {
  PP_REQUIRE(path && out, "path and out are required");
  return guard([&] { *out = new pp_image{read_image_stack(path)}; });
}

pp_status pp_image_decode(const uint8_t* bytes, size_t size, pp_image** out) {
  PP_REQUIRE(bytes && out, "bytes and out are required");
  return guard([&] { *out = new pp_image{decode_image_stack({bytes, size})}; });
}

pp_status pp_image_wrap(int width, int height, int channels, const double* values,
                        pp_image** out) {
  PP_REQUIRE(values && out && width > 0 && height > 0 && channels > 0,
             "positive dimensions, values and out are required");
  return guard([&] {
    const std::size_t n = static_cast<std::size_t>(width) * height * channels;
    std::vector<PixelGrid> slices;
    slices.emplace_back(width, height, channels, std::vector<double>(values, values + n));
    *out = new pp_image{std::move(slices)};
  });
}

void pp_image_free(pp_image* image) { delete image; }

pp_status pp_image_info(const pp_image* image, int* width, int* height, int* channels,
                        int* slices) {
  PP_REQUIRE(image && !image->slices.empty(), "image is required");
  const PixelGrid& g = image->slices.front();
  if (width) *width = g.width();
  if (height) *height = g.height();
  if (channels) *channels = g.channels();
  if (slices) *slices = static_cast<int>(image->slices.size());
  return PP_OK;
}

// ---------------------------------------------------------------- engine

pp_status pp_extractor_parse(const char* name, pp_extractor* out) {
  PP_REQUIRE(name && out, "name and out are required");
  return guard([&] { *out = static_cast<pp_extractor>(parse_extractor_kind(name)); });
}

void pp_config_default(pp_config* config) {
  if (!config) return;
  const EngineConfig e;
  config->patch_size = e.patch_size;
  config->branching = e.tree.branching;
  config->layers = e.tree.layers;
  config->iterations = e.tree.iterations;
  config->seed = e.tree.seed;
  config->extractor = static_cast<pp_extractor>(e.extractor);
  config->subsample = e.subsample;
  config->classes = e.classes;
}

void pp_update_options_default(pp_update_options* options) {
  if (!options) return;
  const UpdateOptions u;
  options->steps = u.steps;
  options->binarise = u.binarise;
  options->overwrite = u.overwrite;
  options->epsilon = u.epsilon;
}

pp_status pp_engine_build(const pp_image* image, const pp_config* config, pp_engine** out) {
  PP_REQUIRE(image && !image->slices.empty() && config && out,
             "image, config and out are required");
  return guard([&] {
    Engine engine = Engine::build(image->slices.front(), to_config(*config));
    UserMarking marks = engine.new_marking();
    *out = new pp_engine{std::move(engine), std::move(marks), std::nullopt, {}, {}};
  });
}

void pp_engine_free(pp_engine* engine) { delete engine; }

pp_status pp_engine_stats(const pp_engine* engine, pp_build_stats* out) {
  PP_REQUIRE(engine && out, "engine and out are required");
  const Engine& e = engine->engine;
  out->width = e.image().width();
  out->height = e.image().height();
  out->nodes = e.tree()->node_count();
  out->nnz = e.graph().nnz();
  out->features_ms = e.timings().features_ms;
  out->tree_ms = e.timings().tree_ms;
  out->assign_ms = e.timings().assign_ms;
  out->graph_ms = e.timings().graph_ms;
  out->normalize_ms = e.timings().normalize_ms;
  return PP_OK;
}

pp_status pp_engine_set_marks_png(pp_engine* engine, const char* path) {
  PP_REQUIRE(engine && path, "engine and path are required");
  return guard([&] {
    const IndexedImage img = read_indexed_png(path);
    const PixelGrid& g = engine->engine.image();
    if (img.width != g.width() || img.height != g.height()) {
      fail(ErrorCode::kShapeMismatch, "marks image is " + std::to_string(img.width) + "x" +
                                          std::to_string(img.height) + ", image is " +
                                          std::to_string(g.width()) + "x" +
                                          std::to_string(g.height()));
    }
    engine->marks = marks_from_image(img, engine->engine.config().classes);
    engine->image_name = std::filesystem::path(path).filename().string();
  });
}

pp_status pp_engine_set_marks(pp_engine* engine, const uint8_t* classes, size_t count) {
  PP_REQUIRE(engine && classes, "engine and classes are required");
  return guard([&] {
    const PixelGrid& g = engine->engine.image();
    if (count != g.pixel_count()) fail(ErrorCode::kShapeMismatch, "one class per pixel expected");
    engine->marks = marks_from_image(
        IndexedImage{g.width(), g.height(), std::vector<std::uint8_t>(classes, classes + count)},
        engine->engine.config().classes);
  });
}

pp_status pp_engine_add_stroke(pp_engine* engine, const double* xy, size_t points, double radius,
                               int cls) {
  PP_REQUIRE(engine && (xy || points == 0), "engine and points are required");
  return guard([&] {
    Stroke s;
    s.radius = radius;
    s.cls = cls;
    for (size_t i = 0; i < points; ++i) s.points.push_back({xy[2 * i], xy[2 * i + 1]});
    const PixelGrid& g = engine->engine.image();
    apply_strokes(engine->marks, {s}, g.width(), g.height());
  });
}

pp_status pp_engine_marked_pixels(const pp_engine* engine, size_t* out) {
  PP_REQUIRE(engine && out, "engine and out are required");
  *out = engine->marks.size();
  return PP_OK;
}

pp_status pp_engine_update(pp_engine* engine, const pp_update_options* options) {
  PP_REQUIRE(engine, "engine is required");
  return guard([&] {
    const UpdateOptions o = to_options(options);
    engine->result = engine->engine.update(engine->marks, o);
    engine->options = o;
  });
}

pp_status pp_engine_probabilities(const pp_engine* engine, double* out, size_t count) {
  PP_REQUIRE(engine && out, "engine and out are required");
  return guard([&] {
    if (!engine->result) fail(ErrorCode::kNotReady, "no update has run");
    const auto values = engine->result->probabilities.values();
    if (count != values.size()) {
      fail(ErrorCode::kShapeMismatch, "expected " + std::to_string(values.size()) + " values");
    }
    std::copy(values.begin(), values.end(), out);
  });
}

pp_status pp_engine_segmentation(const pp_engine* engine, uint8_t* out, size_t count) {
  PP_REQUIRE(engine && out, "engine and out are required");
  return guard([&] {
    if (!engine->result) fail(ErrorCode::kNotReady, "no update has run");
    const auto labels = segment(engine->result->probabilities, engine->options.epsilon);
    if (count != labels.size()) {
      fail(ErrorCode::kShapeMismatch, "expected " + std::to_string(labels.size()) + " labels");
    }
    std::copy(labels.begin(), labels.end(), out);
  });
}

pp_status pp_engine_write_outputs(const pp_engine* engine, const char* dir) {
  PP_REQUIRE(engine && dir, "engine and dir are required");
  return guard([&] {
    if (!engine->result) fail(ErrorCode::kNotReady, "no update has run");
    const PixelGrid& g = engine->engine.image();
    StackResult r;
    r.width = g.width();
    r.height = g.height();
    r.classes = engine->engine.config().classes;
    r.probabilities.push_back(engine->result->probabilities);
    r.labels = LabelVolume{r.width, r.height, 1,
                           segment(engine->result->probabilities, engine->options.epsilon)};
    write_stack_outputs(r, dir, false);
    const auto palette = class_palette(r.classes);
    const std::filesystem::path root(dir);
    write_file_bytes((root / "segmentation.png").string(),
                     encode_indexed_png(IndexedImage{r.width, r.height, r.labels.labels}, palette));
    write_file_bytes((root / "marks.png").string(),
                     encode_indexed_png(marks_to_image(engine->marks, r.width, r.height), palette));
  });
}

pp_status pp_engine_export_model(const pp_engine* engine, const char* path) {
  PP_REQUIRE(engine && path, "engine and path are required");
  return guard([&] {
    if (!engine->result) fail(ErrorCode::kNotReady, "no update has run");
    engine->engine
        .export_model(*engine->result, engine->image_name, engine->marks.size(), engine->options)
        .save(path);
  });
}

// ---------------------------------------------------------------- models

pp_status pp_model_load(const char* path, pp_model** out) {
  PP_REQUIRE(path && out, "path and out are required");
  return guard([&] { *out = new pp_model{TrainedModel::load(path)}; });
}

void pp_model_free(pp_model* model) { delete model; }

pp_status pp_model_info(const pp_model* model, int* classes, int* patch_size, size_t* nodes) {
  PP_REQUIRE(model, "model is required");
  if (classes) *classes = model->model.classes;
  if (patch_size) *patch_size = model->model.tree->patch_size();
  if (nodes) *nodes = model->model.tree->node_count();
  return PP_OK;
}

void pp_stack_options_default(pp_stack_options* options) {
  if (!options) return;
  const StackOptions s;
  options->epsilon = s.epsilon;
  options->min_component = s.min_component;
  options->detect_centres = s.detect_centres;
  options->centre_class = s.centre_class;
  options->window_radius = s.centre_options.window_radius;
  options->min_distance = s.centre_options.min_distance;
  options->threshold = s.centre_options.threshold;
  options->sigma = s.centre_options.sigma;
  options->workers = s.workers;
}

pp_status pp_model_apply(const pp_model* model, const pp_image* image,
                         const pp_stack_options* options, const char* dir,
                         pp_progress_fn progress, void* user) {
  PP_REQUIRE(model && image && dir, "model, image and dir are required");
  return guard([&] {
    const StackOptions opt = to_stack_options(options);
    ProgressCallback cb;
    if (progress) cb = [progress, user](std::size_t done, std::size_t total) {
      progress(done, total, user);
    };
    const StackResult r = apply_to_stack(image->slices, model->model, opt, cb);
    write_stack_outputs(r, dir, opt.detect_centres);
  });
}

pp_status pp_model_apply_probabilities(const pp_model* model, const pp_image* image, double* out,
                                       size_t count) {
  PP_REQUIRE(model && image && !image->slices.empty() && out,
             "model, image and out are required");
  return guard([&] {
    const ProbabilityStack p = apply_to_image(image->slices.front(), model->model);
    if (count != p.values().size()) {
      fail(ErrorCode::kShapeMismatch, "expected " + std::to_string(p.values().size()) + " values");
    }
    std::copy(p.values().begin(), p.values().end(), out);
  });
}

// ---------------------------------------------------------------- bench

pp_status pp_bench_run(const int* sizes, size_t n_sizes, const int* patch_sizes,
                       size_t n_patch_sizes, const int* branchings, size_t n_branchings,
                       const int* layers, size_t n_layers, int repeats,
                       const pp_update_options* options, pp_bench_row* rows, size_t capacity,
                       size_t* count) {
  PP_REQUIRE(sizes && patch_sizes && branchings && layers && count,
             "grids and count are required");
  PP_REQUIRE(rows || capacity == 0, "rows are required when capacity > 0");
  return guard([&] {
    BenchOptions b;
    b.sizes.assign(sizes, sizes + n_sizes);
    b.patch_sizes.assign(patch_sizes, patch_sizes + n_patch_sizes);
    b.branchings.assign(branchings, branchings + n_branchings);
    b.layer_counts.assign(layers, layers + n_layers);
    b.repeats = repeats;
    b.update = to_options(options);
    const auto result = run_bench(b);
    *count = result.size();
    for (size_t i = 0; i < result.size() && i < capacity; ++i) {
      const BenchRow& r = result[i];
      rows[i] = pp_bench_row{r.size,    r.patch_size,    r.branching,     r.layers,
                             r.nodes,   r.nnz,           r.tree_ms,       r.graph_ms,
                             r.normalize_ms, r.update_p50_ms, r.update_p90_ms, r.update_p99_ms};
    }
  });
}

// ---------------------------------------------------------------- phantoms

pp_status pp_phantom_kind_parse(const char* name, pp_phantom_kind* out) {
  PP_REQUIRE(name && out, "name and out are required");
  return guard([&] { *out = static_cast<pp_phantom_kind>(parse_phantom_kind(name)); });
}

void pp_phantom_params_default(pp_phantom_params* params) {
  if (!params) return;
  const PhantomParams p;
  *params = pp_phantom_params{static_cast<pp_phantom_kind>(p.kind),
                              p.width,
                              p.height,
                              p.slices,
                              p.seed,
                              p.noise,
                              p.count,
                              p.radius,
                              p.min_gap,
                              p.marked_objects,
                              p.dot_radius,
                              p.scribble_radius};
}

pp_status pp_phantom_write(const pp_phantom_params* params, const char* dir) {
  PP_REQUIRE(params && dir, "params and dir are required");
  return guard([&] {
    PhantomParams p;
    p.kind = static_cast<PhantomKind>(params->kind);
    p.width = params->width;
    p.height = params->height;
    p.slices = params->slices;
    p.seed = params->seed;
    p.noise = params->noise;
    p.count = params->count;
    p.radius = params->radius;
    p.min_gap = params->min_gap;
    p.marked_objects = params->marked_objects;
    p.dot_radius = params->dot_radius;
    p.scribble_radius = params->scribble_radius;
    write_phantom(generate_phantom(p), dir);
  });
}

// ---------------------------------------------------------------- server

void pp_server_limits_default(pp_server_limits* limits) {
  if (!limits) return;
  const ServerLimits s;
  limits->max_sessions = s.max_sessions;
  limits->max_body_bytes = s.max_body_bytes;
  limits->max_jobs = s.max_jobs;
}

pp_status pp_server_start(const char* host, int port, const pp_server_limits* limits,
                          pp_server** out, int* bound_port) {
  PP_REQUIRE(host && out, "host and out are required");
  return guard([&] {
    auto server = std::make_unique<pp_server>(to_limits(limits));
    const int bound = server->server.start(host, port);
    if (bound_port) *bound_port = bound;
    *out = server.release();
  });
}

pp_status pp_server_run(const char* host, int port, const pp_server_limits* limits) {
  PP_REQUIRE(host, "host is required");
  return guard([&] {
    HttpServer server(to_limits(limits));
    server.run(host, port);
  });
}

void pp_server_stop(pp_server* server) {
  if (server) server->server.stop();
}

void pp_server_free(pp_server* server) { delete server; }

}  // extern "C"
