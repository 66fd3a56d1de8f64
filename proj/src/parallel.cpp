// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "patchprop/parallel.hpp"

#include <atomic>

namespace patchprop {

namespace {
std::atomic<unsigned> g_worker_threads{0};
}

void set_worker_threads(unsigned count) { g_worker_threads = count; }

unsigned worker_threads() {
  const unsigned configured = g_worker_threads.load();
  if (configured != 0) return configured;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace patchprop
