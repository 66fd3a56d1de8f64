// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "patchprop/error.hpp"
#include "patchprop/log.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>

namespace patchprop {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBounds: return "bounds";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kNoPatch: return "no_patch";
    case ErrorCode::kCorruption: return "corruption";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kNotReady: return "not_ready";
    case ErrorCode::kUnknownClass: return "unknown_class";
    case ErrorCode::kNotFound: return "not_found";
  }
  return "unknown";
}

namespace {

std::mutex g_sink_mutex;
LogSink g_sink;
std::atomic<int> g_min_level{static_cast<int>(LogLevel::kInfo)};

const char* level_tag(LogLevel level) {
  switch (level) {
    case LogLevel::kDebug: return "debug";
    case LogLevel::kInfo: return "info";
    case LogLevel::kWarning: return "warning";
    case LogLevel::kError: return "error";
  }
  return "?";
}

}  // namespace

void set_log_sink(LogSink sink) {
  std::lock_guard lock(g_sink_mutex);
  g_sink = std::move(sink);
}

void set_log_level(LogLevel min_level) {
  g_min_level = static_cast<int>(min_level);
}

void log(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) < g_min_level.load()) return;
  std::lock_guard lock(g_sink_mutex);
  if (g_sink) {
    g_sink(level, message);
  } else {
    std::fprintf(stderr, "[patchprop %s] %s\n", level_tag(level), message.c_str());
  }
}

}  // namespace patchprop
