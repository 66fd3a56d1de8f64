// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHPROP_SESSION_HPP
#define PATCHPROP_SESSION_HPP

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "patchprop/engine.hpp"
#include "patchprop/strokes.hpp"
#include "patchprop/transfer.hpp"

namespace patchprop {

enum class ResultKind { kSegmentation, kProbability, kMarks };

ResultKind parse_result_kind(const std::string& name);

/// A computed update tagged with the revision whose state it reflects.
struct Snapshot {
  std::uint64_t revision = 0;
  UpdateOptions options;
  UserMarking marks;
  UpdateResult result;
  std::vector<std::uint8_t> segmentation;
  double update_ms = 0;
};

/// One interactive segmentation session.
///
/// The engine is built on a background worker, which afterwards runs every
/// update. Mutations bump the revision and wake the worker; mutations that
/// arrive while it computes are folded into a single follow-up run.
class Session {
 public:
  Session(std::string id, PixelGrid image, EngineConfig config, std::string image_name = {});
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const noexcept { return id_; }
  const EngineConfig& config() const noexcept { return config_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  bool ready() const;
  // Message of a failed build, if any.
  std::optional<std::string> build_error() const;
  // Blocks until the build finished or failed; false on timeout.
  bool wait_ready(std::chrono::milliseconds timeout) const;
  BuildTimings timings() const;
  std::size_t nnz() const;

  // Each returns the new revision. Throw kNotReady before the build is done.
  std::uint64_t submit_strokes(const std::vector<Stroke>& strokes,
                               const std::optional<UpdateOptions>& options = std::nullopt);
  std::uint64_t set_marks(UserMarking marks);
  std::uint64_t set_options(const UpdateOptions& options);
  // Throw kNotFound when there is nothing to undo / redo.
  std::uint64_t undo();
  std::uint64_t redo();

  std::uint64_t revision() const;
  UserMarking marks() const;
  UpdateOptions options() const;
  std::size_t computations() const;

  // Newest snapshot with revision >= min_revision, waiting up to `timeout`.
  // Null when none is available in time.
  std::shared_ptr<const Snapshot> result(std::uint64_t min_revision,
                                         std::chrono::milliseconds timeout) const;

  // PNG payload for a snapshot; cached so repeated reads are byte-identical.
  std::vector<std::uint8_t> render(const std::shared_ptr<const Snapshot>& snap, ResultKind kind,
                                   int layer);

  // Model from the snapshot of the current revision.
  TrainedModel export_model(std::chrono::milliseconds timeout);

  // Event JSON strings from index `from` on; waits up to `timeout` when
  // none are pending. `next` receives the index after the last returned.
  std::vector<std::string> events(std::size_t from, std::chrono::milliseconds timeout,
                                  std::size_t& next) const;

 private:
  void run();
  void push_event(std::string json);
  std::uint64_t commit(UserMarking marks, bool record_history);
  void require_ready() const;

  std::string id_;
  std::string image_name_;
  EngineConfig config_;
  int width_ = 0;
  int height_ = 0;
  PixelGrid pending_image_;

  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  bool stop_ = false;
  bool built_ = false;
  std::optional<std::string> build_error_;
  std::unique_ptr<Engine> engine_;

  std::uint64_t revision_ = 0;
  UserMarking marks_;
  UpdateOptions options_;
  std::vector<UserMarking> undo_;
  std::vector<UserMarking> redo_;
  std::shared_ptr<const Snapshot> latest_;
  std::size_t computations_ = 0;
  std::vector<std::string> events_;

  std::mutex render_mutex_;
  std::map<std::tuple<std::uint64_t, int, int>, std::vector<std::uint8_t>> render_cache_;

  std::thread worker_;
};

struct BatchJob {
  enum class State { kQueued, kRunning, kDone, kFailed };
  std::string id;
  State state = State::kQueued;
  std::size_t done = 0;
  std::size_t total = 0;
  std::string error;
  std::string output_dir;
  std::vector<std::string> files;
};

const char* batch_state_name(BatchJob::State state);

struct ServerLimits {
  std::size_t max_sessions = 16;
  std::size_t max_body_bytes = 512u << 20;
  std::size_t max_jobs = 64;
};

/// Registry of sessions, trained models and batch jobs.
class SessionManager {
 public:
  explicit SessionManager(ServerLimits limits = {}, std::string work_dir = {});
  ~SessionManager();

  const ServerLimits& limits() const noexcept { return limits_; }

  std::shared_ptr<Session> create_session(PixelGrid image, const EngineConfig& config,
                                          const std::string& image_name = {});
  // Throws kNotFound.
  std::shared_ptr<Session> session(const std::string& id) const;
  void remove_session(const std::string& id);

  std::string add_model(std::shared_ptr<const TrainedModel> model);
  std::shared_ptr<const TrainedModel> model(const std::string& id) const;

  std::string start_batch(const std::string& model_id, std::vector<PixelGrid> slices,
                          const StackOptions& options);
  BatchJob job(const std::string& id) const;
  // Blocks until the job leaves the queued/running states; false on timeout.
  bool wait_job(const std::string& id, std::chrono::milliseconds timeout) const;

 private:
  std::string next_id(const char* prefix);

  ServerLimits limits_;
  std::string work_dir_;
  bool owns_work_dir_ = false;
  mutable std::mutex mutex_;
  mutable std::condition_variable job_changed_;
  std::map<std::string, std::uint64_t> counters_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::map<std::string, std::shared_ptr<const TrainedModel>> models_;
  std::map<std::string, BatchJob> jobs_;
  std::vector<std::thread> job_threads_;
};

}  // namespace patchprop

#endif  // PATCHPROP_SESSION_HPP
