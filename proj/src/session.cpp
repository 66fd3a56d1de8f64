// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "patchprop/session.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <random>

#include <json.hpp>

#include "patchprop/io.hpp"
#include "patchprop/log.hpp"

namespace patchprop {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

ResultKind parse_result_kind(const std::string& name) {
  if (name == "segmentation") return ResultKind::kSegmentation;
  if (name == "probability") return ResultKind::kProbability;
  if (name == "marks") return ResultKind::kMarks;
  fail(ErrorCode::kConfig, "unknown result kind '" + name + "'");
}

// ---------------------------------------------------------------- Session

Session::Session(std::string id, PixelGrid image, EngineConfig config, std::string image_name)
    : id_(std::move(id)),
      image_name_(std::move(image_name)),
      config_(config),
      width_(image.width()),
      height_(image.height()),
      pending_image_(std::move(image)) {
  config_.validate(width_, height_, pending_image_.channels());
  worker_ = std::thread([this] { run(); });
}

Session::~Session() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  changed_.notify_all();
  if (worker_.joinable()) worker_.join();
}

void Session::push_event(std::string event) {
  events_.push_back(std::move(event));
  changed_.notify_all();
}

void Session::run() {
  try {
    auto progress = [this](const std::string& stage) {
      std::lock_guard lock(mutex_);
      push_event(json{{"type", "progress"}, {"stage", stage}, {"revision", 0},
                      {"ready", false}, {"timing", json::object()}}
                     .dump());
    };
    auto engine = std::make_unique<Engine>(
        Engine::build(std::move(pending_image_), config_, progress));
    pending_image_ = PixelGrid();
    std::lock_guard lock(mutex_);
    const BuildTimings& t = engine->timings();
    const std::size_t nnz = engine->graph().nnz();
    marks_ = engine->new_marking();
    engine_ = std::move(engine);
    built_ = true;
    push_event(json{{"type", "built"},
                    {"revision", revision_},
                    {"ready", false},
                    {"nnz", nnz},
                    {"timing",
                     {{"features_ms", t.features_ms},
                      {"tree_ms", t.tree_ms},
                      {"assign_ms", t.assign_ms},
                      {"graph_ms", t.graph_ms},
                      {"normalize_ms", t.normalize_ms},
                      {"build_ms", t.total_ms()}}}}
                   .dump());
  } catch (const std::exception& e) {
    std::lock_guard lock(mutex_);
    build_error_ = e.what();
    log_warning("session " + id_ + " build failed: " + e.what());
    push_event(json{{"type", "error"}, {"error", e.what()}, {"revision", revision_},
                    {"ready", false}, {"timing", json::object()}}
                   .dump());
    return;
  }

  for (;;) {
    std::unique_lock lock(mutex_);
    changed_.wait(lock, [this] { return stop_ || !latest_ || latest_->revision != revision_; });
    if (stop_) return;
    auto snap = std::make_shared<Snapshot>();
    snap->revision = revision_;
    snap->marks = marks_;
    snap->options = options_;
    lock.unlock();

    const auto t0 = Clock::now();
    try {
      snap->result = engine_->update(snap->marks, snap->options);
      snap->segmentation = segment(snap->result.probabilities, snap->options.epsilon);
    } catch (const std::exception& e) {
      log_warning("session " + id_ + " update failed: " + e.what());
    }
    snap->update_ms = ms_since(t0);

    lock.lock();
    latest_ = snap;
    ++computations_;
    push_event(json{{"type", "update"},
                    {"revision", snap->revision},
                    {"ready", true},
                    {"marked_pixels", snap->marks.size()},
                    {"timing", {{"update_ms", snap->update_ms}}}}
                   .dump());
  }
}

bool Session::ready() const {
  std::lock_guard lock(mutex_);
  return built_;
}

std::optional<std::string> Session::build_error() const {
  std::lock_guard lock(mutex_);
  return build_error_;
}

bool Session::wait_ready(std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  changed_.wait_for(lock, timeout, [this] { return built_ || build_error_.has_value(); });
  return built_;
}

BuildTimings Session::timings() const {
  std::lock_guard lock(mutex_);
  return engine_ ? engine_->timings() : BuildTimings{};
}

std::size_t Session::nnz() const {
  std::lock_guard lock(mutex_);
  return engine_ ? engine_->graph().nnz() : 0;
}

void Session::require_ready() const {
  if (build_error_) fail(ErrorCode::kNotReady, "session build failed: " + *build_error_);
  if (!built_) fail(ErrorCode::kNotReady, "session " + id_ + " is still building");
}

std::uint64_t Session::commit(UserMarking marks, bool record_history) {
  if (record_history) {
    undo_.push_back(std::move(marks_));
    redo_.clear();
  }
  marks_ = std::move(marks);
  ++revision_;
  changed_.notify_all();
  return revision_;
}

std::uint64_t Session::submit_strokes(const std::vector<Stroke>& strokes,
                                      const std::optional<UpdateOptions>& options) {
  if (options) options->validate();
  std::lock_guard lock(mutex_);
  require_ready();
  UserMarking next = marks_;
  apply_strokes(next, strokes, width_, height_);
  if (options) options_ = *options;
  return commit(std::move(next), true);
}

std::uint64_t Session::set_marks(UserMarking marks) {
  std::lock_guard lock(mutex_);
  require_ready();
  if (marks.pixel_count() != marks_.pixel_count() || marks.classes() != marks_.classes()) {
    fail(ErrorCode::kShapeMismatch, "marking does not match the session");
  }
  return commit(std::move(marks), true);
}

std::uint64_t Session::set_options(const UpdateOptions& options) {
  options.validate();
  std::lock_guard lock(mutex_);
  require_ready();
  options_ = options;
  ++revision_;
  changed_.notify_all();
  return revision_;
}

std::uint64_t Session::undo() {
  std::lock_guard lock(mutex_);
  require_ready();
  if (undo_.empty()) fail(ErrorCode::kNotFound, "nothing to undo");
  redo_.push_back(std::move(marks_));
  UserMarking previous = std::move(undo_.back());
  undo_.pop_back();
  return commit(std::move(previous), false);
}

std::uint64_t Session::redo() {
  std::lock_guard lock(mutex_);
  require_ready();
  if (redo_.empty()) fail(ErrorCode::kNotFound, "nothing to redo");
  undo_.push_back(std::move(marks_));
  UserMarking next = std::move(redo_.back());
  redo_.pop_back();
  return commit(std::move(next), false);
}

std::uint64_t Session::revision() const {
  std::lock_guard lock(mutex_);
  return revision_;
}

UserMarking Session::marks() const {
  std::lock_guard lock(mutex_);
  return marks_;
}

UpdateOptions Session::options() const {
  std::lock_guard lock(mutex_);
  return options_;
}

std::size_t Session::computations() const {
  std::lock_guard lock(mutex_);
  return computations_;
}

std::shared_ptr<const Snapshot> Session::result(std::uint64_t min_revision,
                                                std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  changed_.wait_for(lock, timeout, [&] {
    return stop_ || build_error_ || (latest_ && latest_->revision >= min_revision);
  });
  if (latest_ && latest_->revision >= min_revision) return latest_;
  return nullptr;
}

std::vector<std::uint8_t> Session::render(const std::shared_ptr<const Snapshot>& snap,
                                          ResultKind kind, int layer) {
  const int classes = config_.classes;
  if (kind == ResultKind::kProbability && (layer < 1 || layer > classes)) {
    fail(ErrorCode::kUnknownClass,
         "probability layer must be within 1.." + std::to_string(classes));
  }
  if (kind != ResultKind::kProbability) layer = 0;
  const auto key = std::make_tuple(snap->revision, static_cast<int>(kind), layer);
  {
    std::lock_guard lock(render_mutex_);
    if (auto it = render_cache_.find(key); it != render_cache_.end()) return it->second;
  }

  std::vector<std::uint8_t> png;
  const auto palette = class_palette(classes);
  switch (kind) {
    case ResultKind::kSegmentation:
      png = encode_indexed_png(IndexedImage{width_, height_, snap->segmentation}, palette);
      break;
    case ResultKind::kMarks:
      png = encode_indexed_png(marks_to_image(snap->marks, width_, height_), palette);
      break;
    case ResultKind::kProbability: {
      const auto& probs = snap->result.probabilities;
      std::vector<std::uint8_t> gray(probs.rows());
      for (std::size_t i = 0; i < probs.rows(); ++i) {
        gray[i] = quantize_u8(probs(i, static_cast<std::size_t>(layer - 1)));
      }
      png = encode_gray8_png(gray, width_, height_);
      break;
    }
  }

  std::lock_guard lock(render_mutex_);
  constexpr std::uint64_t kKeepRevisions = 8;
  std::erase_if(render_cache_, [&](const auto& entry) {
    return std::get<0>(entry.first) + kKeepRevisions < snap->revision;
  });
  render_cache_.emplace(key, png);
  return png;
}

TrainedModel Session::export_model(std::chrono::milliseconds timeout) {
  std::uint64_t rev;
  {
    std::lock_guard lock(mutex_);
    require_ready();
    rev = revision_;
  }
  auto snap = result(rev, timeout);
  if (!snap) fail(ErrorCode::kNotReady, "no result for revision " + std::to_string(rev) + " yet");
  return engine_->export_model(snap->result, image_name_, snap->marks.size(), snap->options);
}

std::vector<std::string> Session::events(std::size_t from, std::chrono::milliseconds timeout,
                                         std::size_t& next) const {
  std::unique_lock lock(mutex_);
  changed_.wait_for(lock, timeout, [&] { return stop_ || events_.size() > from; });
  std::vector<std::string> out;
  for (std::size_t i = from; i < events_.size(); ++i) out.push_back(events_[i]);
  next = std::max(from, events_.size());
  return out;
}

// ---------------------------------------------------------------- manager

const char* batch_state_name(BatchJob::State state) {
  switch (state) {
    case BatchJob::State::kQueued: return "queued";
    case BatchJob::State::kRunning: return "running";
    case BatchJob::State::kDone: return "done";
    case BatchJob::State::kFailed: return "failed";
  }
  return "unknown";
}

SessionManager::SessionManager(ServerLimits limits, std::string work_dir)
    : limits_(limits), work_dir_(std::move(work_dir)) {
  if (work_dir_.empty()) {
    std::random_device rd;
    char tag[17];
    std::snprintf(tag, sizeof tag, "%08x%08x", rd(), rd());
    work_dir_ = (std::filesystem::temp_directory_path() / ("patchprop-" + std::string(tag)))
                    .string();
    owns_work_dir_ = true;
  }
}

SessionManager::~SessionManager() {
  for (auto& t : job_threads_) {
    if (t.joinable()) t.join();
  }
  if (owns_work_dir_) {
    std::error_code ec;
    std::filesystem::remove_all(work_dir_, ec);
  }
}

std::string SessionManager::next_id(const char* prefix) {
  return prefix + std::to_string(++counters_[prefix]);
}

std::shared_ptr<Session> SessionManager::create_session(PixelGrid image,
                                                        const EngineConfig& config,
                                                        const std::string& image_name) {
  std::string id;
  {
    std::lock_guard lock(mutex_);
    if (sessions_.size() >= limits_.max_sessions) {
      fail(ErrorCode::kConfig,
           "session limit of " + std::to_string(limits_.max_sessions) + " reached");
    }
    id = next_id("s");
  }
  auto session = std::make_shared<Session>(id, std::move(image), config, image_name);
  std::lock_guard lock(mutex_);
  sessions_.emplace(id, session);
  return session;
}

std::shared_ptr<Session> SessionManager::session(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(ErrorCode::kNotFound, "no session '" + id + "'");
  return it->second;
}

void SessionManager::remove_session(const std::string& id) {
  std::shared_ptr<Session> doomed;
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(ErrorCode::kNotFound, "no session '" + id + "'");
  doomed = std::move(it->second);
  sessions_.erase(it);
}

std::string SessionManager::add_model(std::shared_ptr<const TrainedModel> model) {
  std::lock_guard lock(mutex_);
  std::string id = next_id("m");
  models_.emplace(id, std::move(model));
  return id;
}

std::shared_ptr<const TrainedModel> SessionManager::model(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = models_.find(id);
  if (it == models_.end()) fail(ErrorCode::kNotFound, "no model '" + id + "'");
  return it->second;
}

std::string SessionManager::start_batch(const std::string& model_id,
                                        std::vector<PixelGrid> slices,
                                        const StackOptions& options) {
  auto model = this->model(model_id);
  std::lock_guard lock(mutex_);
  if (jobs_.size() >= limits_.max_jobs) {
    fail(ErrorCode::kConfig, "job limit of " + std::to_string(limits_.max_jobs) + " reached");
  }
  const std::string id = next_id("j");
  BatchJob& job = jobs_[id];
  job.id = id;
  job.total = slices.size();
  job.output_dir = (std::filesystem::path(work_dir_) / id).string();

  job_threads_.emplace_back([this, id, model, options, slices = std::move(slices)] {
    std::string dir;
    {
      std::lock_guard lock(mutex_);
      jobs_[id].state = BatchJob::State::kRunning;
      dir = jobs_[id].output_dir;
    }
    job_changed_.notify_all();
    try {
      auto progress = [this, &id](std::size_t done, std::size_t total) {
        std::lock_guard lock(mutex_);
        jobs_[id].done = done;
        jobs_[id].total = total;
      };
      const StackResult result = apply_to_stack(slices, *model, options, progress);
      std::filesystem::create_directories(dir);
      write_stack_outputs(result, dir, options.detect_centres);
      std::vector<std::string> files;
      for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        files.push_back(entry.path().filename().string());
      }
      std::sort(files.begin(), files.end());
      std::lock_guard lock(mutex_);
      jobs_[id].files = std::move(files);
      jobs_[id].state = BatchJob::State::kDone;
    } catch (const std::exception& e) {
      std::lock_guard lock(mutex_);
      jobs_[id].error = e.what();
      jobs_[id].state = BatchJob::State::kFailed;
    }
    job_changed_.notify_all();
  });
  return id;
}

BatchJob SessionManager::job(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) fail(ErrorCode::kNotFound, "no job '" + id + "'");
  return it->second;
}

bool SessionManager::wait_job(const std::string& id, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  if (!jobs_.contains(id)) fail(ErrorCode::kNotFound, "no job '" + id + "'");
  return job_changed_.wait_for(lock, timeout, [&] {
    const auto state = jobs_.at(id).state;
    return state == BatchJob::State::kDone || state == BatchJob::State::kFailed;
  });
}

}  // namespace patchprop
