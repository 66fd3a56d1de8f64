// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "patchprop/http_server.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "patchprop/container.hpp"
#include "patchprop/io.hpp"
#include "patchprop/log.hpp"

namespace patchprop {

namespace {

using nlohmann::json;
using std::chrono::milliseconds;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kNotReady: return 409;
    case ErrorCode::kIo: return 500;
    default: return 400;
  }
}

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", code}, {"message", message}}.dump(), "application/json");
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
auto guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), error_code_name(e.code()), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "bad_request", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

std::span<const std::uint8_t> body_bytes(const httplib::Request& req) {
  return {reinterpret_cast<const std::uint8_t*>(req.body.data()), req.body.size()};
}

template <typename T>
T param(const httplib::Request& req, const char* name, T fallback) {
  if (!req.has_param(name)) return fallback;
  const std::string text = req.get_param_value(name);
  if constexpr (std::is_same_v<T, bool>) {
    if (text == "1" || text == "true") return true;
    if (text == "0" || text == "false") return false;
  } else if constexpr (std::is_same_v<T, std::string>) {
    return text;
  } else {
    T value{};
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec == std::errc() && end == text.data() + text.size()) return value;
  }
  fail(ErrorCode::kConfig, std::string("bad value for query parameter '") + name + "'");
}

UpdateOptions options_from_json(const json& j, UpdateOptions base) {
  if (j.contains("steps")) base.steps = j.at("steps").get<int>();
  if (j.contains("binarise")) base.binarise = j.at("binarise").get<bool>();
  if (j.contains("overwrite")) base.overwrite = j.at("overwrite").get<bool>();
  if (j.contains("epsilon")) base.epsilon = j.at("epsilon").get<double>();
  base.validate();
  return base;
}

json options_to_json(const UpdateOptions& o) {
  return {{"steps", o.steps}, {"binarise", o.binarise}, {"overwrite", o.overwrite},
          {"epsilon", o.epsilon}};
}

std::vector<Stroke> strokes_from_json(const json& j) {
  std::vector<Stroke> strokes;
  for (const auto& item : j.at("strokes")) {
    Stroke s;
    for (const auto& p : item.at("points")) {
      if (!p.is_array() || p.size() != 2) fail(ErrorCode::kConfig, "stroke points are [x, y]");
      s.points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    s.radius = item.value("radius", 1.0);
    s.cls = item.at("class").get<int>();
    strokes.push_back(std::move(s));
  }
  return strokes;
}

json session_status(const Session& s) {
  const BuildTimings t = s.timings();
  auto snap = s.result(0, milliseconds(0));
  json j{{"id", s.id()},
         {"width", s.width()},
         {"height", s.height()},
         {"classes", s.config().classes},
         {"patch_size", s.config().patch_size},
         {"nodes", tree_node_count(s.config().tree.branching, s.config().tree.layers)},
         {"ready", s.ready()},
         {"revision", s.revision()},
         {"computed_revision", snap ? json(snap->revision) : json(nullptr)},
         {"nnz", s.nnz()},
         {"options", options_to_json(s.options())},
         {"timing",
          {{"build_ms", t.total_ms()},
           {"graph_ms", t.graph_ms},
           {"normalize_ms", t.normalize_ms},
           {"update_ms", snap ? snap->update_ms : 0.0}}}};
  if (auto err = s.build_error()) j["error"] = *err;
  return j;
}

json job_status(const BatchJob& job) {
  json j{{"id", job.id},
         {"state", batch_state_name(job.state)},
         {"done", job.done},
         {"total", job.total},
         {"files", job.files}};
  if (!job.error.empty()) j["error"] = job.error;
  return j;
}

const char* content_type_for(const std::string& file) {
  if (file.ends_with(".tif")) return "image/tiff";
  if (file.ends_with(".csv")) return "text/csv";
  return "application/octet-stream";
}

}  // namespace

struct HttpServer::Impl {
  explicit Impl(ServerLimits limits) : manager(limits) {}

  SessionManager manager;
  httplib::Server server;
  std::thread thread;
  std::atomic<bool> stopping{false};
  std::atomic<int> port{0};

  void routes();
  int bind(const std::string& host, int port);
};

void HttpServer::Impl::routes() {
  server.set_payload_max_length(manager.limits().max_body_bytes);
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });

  server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
    std::vector<PixelGrid> slices = decode_image_stack(body_bytes(req));
    if (slices.size() != 1) {
      fail(ErrorCode::kUnsupported, "a session needs a single-slice image");
    }
    EngineConfig cfg;
    cfg.patch_size = param(req, "patch_size", cfg.patch_size);
    cfg.tree.branching = param(req, "branching", cfg.tree.branching);
    cfg.tree.layers = param(req, "layers", cfg.tree.layers);
    cfg.tree.iterations = param(req, "iterations", cfg.tree.iterations);
    cfg.tree.seed = param(req, "seed", cfg.tree.seed);
    cfg.classes = param(req, "classes", cfg.classes);
    cfg.subsample = param(req, "subsample", cfg.subsample);
    if (req.has_param("extractor")) {
      cfg.extractor = parse_extractor_kind(req.get_param_value("extractor"));
    }
    const int channels = slices[0].channels();
    auto session = manager.create_session(std::move(slices[0]), cfg,
                                          param<std::string>(req, "name", ""));
    json body = session_status(*session);
    body["channels"] = channels;
    send_json(res, body, 201);
  }));

  server.Get(R"(/sessions/([^/]+))",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               send_json(res, session_status(*manager.session(req.matches[1])));
             }));

  server.Delete(R"(/sessions/([^/]+))",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  manager.remove_session(req.matches[1]);
                  send_json(res, json{{"deleted", std::string(req.matches[1])}});
                }));

  server.Post(R"(/sessions/([^/]+)/strokes)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto session = manager.session(req.matches[1]);
                const json j = json::parse(req.body);
                std::optional<UpdateOptions> options;
                if (j.contains("options")) {
                  options = options_from_json(j.at("options"), session->options());
                }
                const auto rev = session->submit_strokes(strokes_from_json(j), options);
                send_json(res, json{{"revision", rev}}, 202);
              }));

  server.Post(R"(/sessions/([^/]+)/marks)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto session = manager.session(req.matches[1]);
                const IndexedImage img = decode_indexed_png(body_bytes(req));
                if (img.width != session->width() || img.height != session->height()) {
                  fail(ErrorCode::kShapeMismatch, "marks image size differs from the session");
                }
                const auto rev =
                    session->set_marks(marks_from_image(img, session->config().classes));
                send_json(res, json{{"revision", rev}}, 202);
              }));

  server.Post(R"(/sessions/([^/]+)/options)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto session = manager.session(req.matches[1]);
                const auto options = options_from_json(json::parse(req.body), session->options());
                send_json(res, json{{"revision", session->set_options(options)}}, 202);
              }));

  server.Post(R"(/sessions/([^/]+)/undo)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                send_json(res, json{{"revision", manager.session(req.matches[1])->undo()}}, 202);
              }));

  server.Post(R"(/sessions/([^/]+)/redo)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                send_json(res, json{{"revision", manager.session(req.matches[1])->redo()}}, 202);
              }));

  server.Get(R"(/sessions/([^/]+)/result)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               auto session = manager.session(req.matches[1]);
               const ResultKind kind =
                   parse_result_kind(param<std::string>(req, "kind", "segmentation"));
               const int layer = param(req, "layer", 1);
               const auto rev = param<std::uint64_t>(req, "rev", 0);
               const auto wait = milliseconds(param(req, "wait_ms", 10000));
               auto snap = session->result(rev, wait);
               if (!snap) {
                 fail(ErrorCode::kNotReady, "no result at revision " + std::to_string(rev) +
                                                " or later yet");
               }
               const auto png = session->render(snap, kind, layer);
               res.set_header("X-Revision", std::to_string(snap->revision));
               res.set_content(reinterpret_cast<const char*>(png.data()), png.size(),
                               "image/png");
             }));

  server.Get(R"(/sessions/([^/]+)/events)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               auto session = manager.session(req.matches[1]);
               std::size_t from = param<std::size_t>(req, "from", 0);
               if (req.has_header("Last-Event-ID")) {
                 std::size_t last = 0;
                 const std::string text = req.get_header_value("Last-Event-ID");
                 if (std::from_chars(text.data(), text.data() + text.size(), last).ec ==
                     std::errc()) {
                   from = last + 1;
                 }
               }
               res.set_header("Cache-Control", "no-cache");
               res.set_chunked_content_provider(
                   "text/event-stream",
                   [this, session, from, idle = 0](std::size_t, httplib::DataSink& sink) mutable {
                     if (stopping) return false;
                     std::size_t next = from;
                     const auto batch = session->events(from, milliseconds(250), next);
                     for (std::size_t i = 0; i < batch.size(); ++i) {
                       const std::string msg = "id: " + std::to_string(from + i) +
                                               "\ndata: " + batch[i] + "\n\n";
                       if (!sink.write(msg.data(), msg.size())) return false;
                     }
                     from = next;
                     if (batch.empty() && ++idle >= 60) {
                       idle = 0;
                       static const std::string keepalive = ": keepalive\n\n";
                       if (!sink.write(keepalive.data(), keepalive.size())) return false;
                     }
                     return sink.is_writable();
                   });
             }));

  server.Post(R"(/sessions/([^/]+)/export)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto session = manager.session(req.matches[1]);
                auto model = std::make_shared<const TrainedModel>(
                    session->export_model(milliseconds(param(req, "wait_ms", 30000))));
                const auto bytes = model->serialize();
                const std::string id = manager.add_model(model);
                res.set_header("X-Model-Id", id);
                res.set_content(reinterpret_cast<const char*>(bytes.data()), bytes.size(),
                                "application/octet-stream");
              }));

  server.Post("/models", guarded([this](const httplib::Request& req, httplib::Response& res) {
    auto model =
        std::make_shared<const TrainedModel>(TrainedModel::deserialize(body_bytes(req)));
    const std::string id = manager.add_model(model);
    send_json(res,
              json{{"id", id},
                   {"classes", model->classes},
                   {"patch_size", model->tree->patch_size()},
                   {"nodes", model->tree->node_count()}},
              201);
  }));

  server.Post("/batch", guarded([this](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("model")) fail(ErrorCode::kConfig, "missing query parameter 'model'");
    StackOptions opt;
    opt.epsilon = param(req, "epsilon", opt.epsilon);
    opt.min_component = param(req, "min_component", opt.min_component);
    opt.detect_centres = param(req, "centres", opt.detect_centres);
    opt.centre_class = param(req, "centre_class", opt.centre_class);
    opt.centre_options.window_radius =
        param(req, "window_radius", opt.centre_options.window_radius);
    opt.centre_options.min_distance = param(req, "min_distance", opt.centre_options.min_distance);
    opt.centre_options.threshold = param(req, "threshold", opt.centre_options.threshold);
    opt.centre_options.sigma = param(req, "sigma", opt.centre_options.sigma);
    const std::string id = manager.start_batch(req.get_param_value("model"),
                                               decode_image_stack(body_bytes(req)), opt);
    send_json(res, job_status(manager.job(id)), 202);
  }));

  server.Get(R"(/batch/([^/]+))",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               send_json(res, job_status(manager.job(req.matches[1])));
             }));

  server.Get(R"(/batch/([^/]+)/result)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               const BatchJob job = manager.job(req.matches[1]);
               if (job.state != BatchJob::State::kDone) {
                 fail(ErrorCode::kNotReady, "job " + job.id + " is " +
                                                batch_state_name(job.state));
               }
               const std::string file = param<std::string>(req, "file", "");
               if (std::find(job.files.begin(), job.files.end(), file) == job.files.end()) {
                 fail(ErrorCode::kNotFound, "job " + job.id + " has no file '" + file + "'");
               }
               const auto bytes =
                   read_file_bytes((std::filesystem::path(job.output_dir) / file).string());
               res.set_content(reinterpret_cast<const char*>(bytes.data()), bytes.size(),
                               content_type_for(file));
             }));

  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    std::string message = "HTTP status " + std::to_string(res.status);
    if (res.status == 413 &&
        req.get_header_value("Content-Type") == "application/x-www-form-urlencoded") {
      message += "; send binary bodies as application/octet-stream";
    }
    send_error(res, res.status, res.status == 404 ? "not_found" : "http_error", message);
  });
}

int HttpServer::Impl::bind(const std::string& host, int requested) {
  routes();
  int bound = requested;
  if (requested == 0) {
    bound = server.bind_to_any_port(host);
  } else if (!server.bind_to_port(host, requested)) {
    bound = -1;
  }
  if (bound <= 0) {
    fail(ErrorCode::kIo, "cannot listen on " + host + ":" + std::to_string(requested));
  }
  port = bound;
  return bound;
}

HttpServer::HttpServer(ServerLimits limits) : impl_(std::make_unique<Impl>(limits)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  const int bound = impl_->bind(host, port);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  log_info("listening on " + host + ":" + std::to_string(bound));
  return bound;
}

void HttpServer::run(const std::string& host, int port) {
  const int bound = impl_->bind(host, port);
  log_info("listening on " + host + ":" + std::to_string(bound));
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  impl_->stopping = true;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int HttpServer::port() const { return impl_->port; }

SessionManager& HttpServer::manager() { return impl_->manager; }

}  // namespace patchprop
