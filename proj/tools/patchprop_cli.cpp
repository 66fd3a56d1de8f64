// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line driver: serve, train, apply, bench, phantom.

#include <atomic>
#include <charconv>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <toml.hpp>

#include "patchprop.h"

namespace {

struct CliError {
  pp_status status;
  std::string message;
};

void check(pp_status status) {
  if (status != PP_OK) throw CliError{status, pp_last_error()};
}

// TOML config reader for CLI11. Top-level keys apply to the selected
// subcommand, [section] tables to the subcommand of that name. Keys are
// the long flag names; underscores are accepted for dashes.
class TomlConfig : public CLI::Config {
 public:
  explicit TomlConfig(CLI::App* app) : app_(app) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return {}; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    toml::table table;
    try {
      table = toml::parse(in);
    } catch (const toml::parse_error& e) {
      throw CLI::ConfigError("config file: " + std::string(e.description()));
    }
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, node] : table) {
      const std::string name = normalize(std::string(key.str()));
      if (const auto* section = node.as_table()) {
        CLI::App* sub = find_subcommand(name);
        if (!sub) throw CLI::ConfigError("unknown section [" + name + "] in config file");
        if (!app_->got_subcommand(sub)) continue;
        for (const auto& [k, v] : *section) {
          const std::string opt = normalize(std::string(k.str()));
          if (!sub->get_option_no_throw("--" + opt)) {
            throw CLI::ConfigError("unknown key '" + std::string(k.str()) + "' in [" + name +
                                   "] of config file");
          }
          items.push_back({{name}, opt, inputs(v, opt)});
        }
        continue;
      }
      bool known = app_->get_option_no_throw("--" + name) != nullptr;
      if (known) items.push_back({{}, name, inputs(node, name)});
      for (CLI::App* sub : app_->get_subcommands([](CLI::App*) { return true; })) {
        if (!sub->get_option_no_throw("--" + name)) continue;
        known = true;
        if (app_->got_subcommand(sub)) items.push_back({{sub->get_name()}, name, inputs(node, name)});
      }
      if (!known) throw CLI::ConfigError("unknown key '" + std::string(key.str()) + "' in config file");
    }
    return items;
  }

 private:
  static std::string normalize(std::string key) {
    for (char& c : key)
      if (c == '_') c = '-';
    return key;
  }

  CLI::App* find_subcommand(const std::string& name) const {
    for (CLI::App* sub : app_->get_subcommands([](CLI::App*) { return true; }))
      if (sub->get_name() == name) return sub;
    return nullptr;
  }

  static std::vector<std::string> inputs(const toml::node& node, const std::string& key) {
    std::vector<std::string> out;
    if (const auto* arr = node.as_array()) {
      for (const auto& v : *arr) out.push_back(scalar(v, key));
    } else {
      out.push_back(scalar(node, key));
    }
    return out;
  }

  static std::string scalar(const toml::node& node, const std::string& key) {
    if (auto v = node.value_exact<bool>()) return *v ? "true" : "false";
    if (auto v = node.value_exact<std::int64_t>()) return std::to_string(*v);
    if (auto v = node.value_exact<double>()) {
      char buf[64];
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, *v);
      return std::string(buf, end);
    }
    if (auto v = node.value_exact<std::string>()) return *v;
    throw CLI::ConversionError("config", "unsupported value for '" + key + "'");
  }

  CLI::App* app_;
};

struct UpdateFlags {
  pp_update_options options{};
  bool binarise = true;
  bool overwrite = true;

  pp_update_options resolve() const {
    pp_update_options o = options;
    o.binarise = binarise;
    o.overwrite = overwrite;
    return o;
  }
};

void add_update_flags(CLI::App* cmd, UpdateFlags& u) {
  pp_update_options_default(&u.options);
  u.binarise = u.options.binarise != 0;
  u.overwrite = u.options.overwrite != 0;
  cmd->add_option("--steps", u.options.steps, "Diffusion steps (1 or 2)")->capture_default_str();
  cmd->add_flag("--binarise,!--no-binarise", u.binarise, "Binarise between steps")
      ->capture_default_str();
  cmd->add_flag("--overwrite,!--no-overwrite", u.overwrite, "Re-impose marks between steps")
      ->capture_default_str();
  cmd->add_option("--epsilon", u.options.epsilon, "Tie tolerance")->capture_default_str();
}

struct EngineFlags {
  pp_config config{};
  UpdateFlags update;
  std::string extractor = "intensity";
};

void add_engine_flags(CLI::App* cmd, EngineFlags& f) {
  pp_config_default(&f.config);
  cmd->add_option("--patch-size", f.config.patch_size, "Patch side M (odd)")->capture_default_str();
  cmd->add_option("--branching", f.config.branching, "Tree branching factor b")
      ->capture_default_str();
  cmd->add_option("--layers", f.config.layers, "Tree layers t")->capture_default_str();
  cmd->add_option("--iterations", f.config.iterations, "k-means iterations per node")
      ->capture_default_str();
  cmd->add_option("--seed", f.config.seed, "Random seed")->capture_default_str();
  cmd->add_option("--subsample", f.config.subsample, "Training patches for the tree")
      ->capture_default_str();
  cmd->add_option("--classes", f.config.classes, "Number of classes C")->capture_default_str();
  cmd->add_option("--extractor", f.extractor, "intensity or multichannel")->capture_default_str();
}

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

void print_progress(size_t done, size_t total, void*) {
  std::fprintf(stderr, "\rslice %zu/%zu", done, total);
  if (done == total) std::fprintf(stderr, "\n");
}

void log_to_stderr(pp_log_level level, const char* message, void*) {
  static const char* names[] = {"debug", "info", "warning", "error"};
  std::fprintf(stderr, "[%s] %s\n", names[level], message);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"patch-dictionary label propagation for interactive segmentation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML file mirroring the flags (flags win)");
  app.config_formatter(std::make_shared<TomlConfig>(&app));
  unsigned threads = 0;
  std::string log_level = "info";
  app.add_option("--threads", threads, "Worker threads (0 = all cores)");
  app.add_option("--log-level", log_level, "debug, info, warning or error")
      ->check(CLI::IsMember({"debug", "info", "warning", "error"}));

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP session server");
  std::string host = "127.0.0.1";
  int port = 8080;
  pp_server_limits limits;
  pp_server_limits_default(&limits);
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "Port (0 = any free port)")->capture_default_str();
  serve->add_option("--max-sessions", limits.max_sessions)->capture_default_str();
  serve->add_option("--max-body-bytes", limits.max_body_bytes)->capture_default_str();
  serve->add_option("--max-jobs", limits.max_jobs)->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Build, propagate marks and export a model");
  EngineFlags tf;
  std::string train_image, train_marks, train_model, train_out;
  train->add_option("--image", train_image, "Training image (PNG or TIFF)")->required();
  train->add_option("--marks", train_marks, "Indexed marks PNG (index = class)")->required();
  train->add_option("--model", train_model, "Output model file")->required();
  train->add_option("--out-dir", train_out, "Directory for probability and label outputs");
  add_engine_flags(train, tf);
  add_update_flags(train, tf.update);

  // apply
  auto* apply = app.add_subcommand("apply", "Apply a model to an image or stack");
  std::string apply_model, apply_input, apply_out;
  pp_stack_options so;
  pp_stack_options_default(&so);
  bool centres = false;
  apply->add_option("--model", apply_model, "Model file")->required();
  apply->add_option("--input", apply_input, "Image or multi-page TIFF")->required();
  apply->add_option("--out-dir", apply_out, "Output directory")->required();
  apply->add_option("--min-component", so.min_component, "Remove components below this size")
      ->capture_default_str();
  apply->add_flag("--centres", centres, "Detect object centres");
  apply->add_option("--centre-class", so.centre_class, "Class whose maxima are centres (0 = last)")
      ->capture_default_str();
  apply->add_option("--min-distance", so.min_distance)->capture_default_str();
  apply->add_option("--threshold", so.threshold)->capture_default_str();
  apply->add_option("--sigma", so.sigma, "Smoothing before maxima search")->capture_default_str();
  apply->add_option("--window-radius", so.window_radius)->capture_default_str();
  apply->add_option("--epsilon", so.epsilon, "Tie tolerance for labels")->capture_default_str();
  apply->add_option("--workers", so.workers, "Slice workers (0 = all cores)")
      ->capture_default_str();

  // bench
  auto* bench = app.add_subcommand("bench", "Time graph construction and updates");
  std::vector<int> sizes{512}, patch_sizes{9}, branchings{5}, layers{4};
  int repeats = 21;
  UpdateFlags bench_update;
  bench->add_option("--sizes", sizes, "Square image sides")->delimiter(',')->capture_default_str();
  bench->add_option("--patch-size", patch_sizes, "Patch sides")->delimiter(',')
      ->capture_default_str();
  bench->add_option("--branching", branchings)->delimiter(',')->capture_default_str();
  bench->add_option("--layers", layers)->delimiter(',')->capture_default_str();
  bench->add_option("--repeats", repeats, "Timed updates per configuration")
      ->capture_default_str();
  add_update_flags(bench, bench_update);

  // phantom
  auto* phantom = app.add_subcommand("phantom", "Write a synthetic image with ground truth");
  pp_phantom_params pp;
  pp_phantom_params_default(&pp);
  std::string kind = "disks", phantom_out;
  phantom->add_option("--kind", kind, "disks, two-texture or cells")->capture_default_str();
  phantom->add_option("--out-dir", phantom_out, "Output directory")->required();
  phantom->add_option("--width", pp.width)->capture_default_str();
  phantom->add_option("--height", pp.height)->capture_default_str();
  phantom->add_option("--slices", pp.slices)->capture_default_str();
  phantom->add_option("--seed", pp.seed)->capture_default_str();
  phantom->add_option("--noise", pp.noise)->capture_default_str();
  phantom->add_option("--count", pp.count)->capture_default_str();
  phantom->add_option("--radius", pp.radius)->capture_default_str();
  phantom->add_option("--min-gap", pp.min_gap)->capture_default_str();
  phantom->add_option("--marked-objects", pp.marked_objects)->capture_default_str();
  phantom->add_option("--dot-radius", pp.dot_radius)->capture_default_str();
  phantom->add_option("--scribble-radius", pp.scribble_radius)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  pp_set_log_callback(log_to_stderr, nullptr);
  const pp_log_level levels[] = {PP_LOG_DEBUG, PP_LOG_INFO, PP_LOG_WARNING, PP_LOG_ERROR};
  const char* level_names[] = {"debug", "info", "warning", "error"};
  for (int i = 0; i < 4; ++i)
    if (log_level == level_names[i]) pp_set_log_level(levels[i]);
  pp_set_threads(threads);

  try {
    if (*serve) {
      pp_server* server = nullptr;
      int bound = 0;
      check(pp_server_start(host.c_str(), port, &limits, &server, &bound));
      std::printf("listening on http://%s:%d\n", host.c_str(), bound);
      std::fflush(stdout);
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(200));
      pp_server_stop(server);
      pp_server_free(server);
    } else if (*train) {
      pp_extractor ex;
      check(pp_extractor_parse(tf.extractor.c_str(), &ex));
      tf.config.extractor = ex;
      pp_image* image = nullptr;
      check(pp_image_load(train_image.c_str(), &image));
      pp_engine* engine = nullptr;
      const pp_status built = pp_engine_build(image, &tf.config, &engine);
      pp_image_free(image);
      check(built);
      try {
        pp_build_stats st;
        check(pp_engine_stats(engine, &st));
        std::printf("image %dx%d  K=%zu  nnz=%zu\n", st.width, st.height, st.nodes, st.nnz);
        std::printf("features %.1f ms  tree %.1f ms  assign %.1f ms  graph %.1f ms  "
                    "normalize %.1f ms\n",
                    st.features_ms, st.tree_ms, st.assign_ms, st.graph_ms, st.normalize_ms);
        check(pp_engine_set_marks_png(engine, train_marks.c_str()));
        size_t marked = 0;
        check(pp_engine_marked_pixels(engine, &marked));
        const auto t0 = std::chrono::steady_clock::now();
        const pp_update_options uo = tf.update.resolve();
        check(pp_engine_update(engine, &uo));
        const double ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
        std::printf("marked %zu pixels  update %.1f ms\n", marked, ms);
        if (!train_out.empty()) check(pp_engine_write_outputs(engine, train_out.c_str()));
        check(pp_engine_export_model(engine, train_model.c_str()));
        std::printf("model written to %s\n", train_model.c_str());
      } catch (...) {
        pp_engine_free(engine);
        throw;
      }
      pp_engine_free(engine);
    } else if (*apply) {
      so.detect_centres = centres ? 1 : 0;
      pp_model* model = nullptr;
      check(pp_model_load(apply_model.c_str(), &model));
      pp_image* image = nullptr;
      pp_status st = pp_image_load(apply_input.c_str(), &image);
      if (st == PP_OK) {
        st = pp_model_apply(model, image, &so, apply_out.c_str(), print_progress, nullptr);
      }
      pp_image_free(image);
      pp_model_free(model);
      check(st);
      std::printf("outputs written to %s\n", apply_out.c_str());
    } else if (*bench) {
      std::vector<pp_bench_row> rows(sizes.size() * patch_sizes.size() * branchings.size() *
                                     layers.size());
      size_t count = 0;
      const pp_update_options uo = bench_update.resolve();
      check(pp_bench_run(sizes.data(), sizes.size(), patch_sizes.data(), patch_sizes.size(),
                         branchings.data(), branchings.size(), layers.data(), layers.size(),
                         repeats, &uo, rows.data(), rows.size(), &count));
      std::printf("size\tM\tb\tt\tK\tnnz\ttree_ms\tgraph_ms\tnormalize_ms\tp50_ms\tp90_ms\tp99_ms\n");
      for (size_t i = 0; i < count && i < rows.size(); ++i) {
        const pp_bench_row& r = rows[i];
        std::printf("%d\t%d\t%d\t%d\t%zu\t%zu\t%.1f\t%.1f\t%.1f\t%.1f\t%.1f\t%.1f\n", r.size,
                    r.patch_size, r.branching, r.layers, r.nodes, r.nnz, r.tree_ms, r.graph_ms,
                    r.normalize_ms, r.update_p50_ms, r.update_p90_ms, r.update_p99_ms);
      }
    } else if (*phantom) {
      check(pp_phantom_kind_parse(kind.c_str(), &pp.kind));
      check(pp_phantom_write(&pp, phantom_out.c_str()));
      std::printf("phantom written to %s\n", phantom_out.c_str());
    }
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s: %s\n", pp_status_name(e.status), e.message.c_str());
    return 1;
  }
  return 0;
}
