/*
 * Copyright (c) 2026 The Strata Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef STRATA_TRACER_HPP
#define STRATA_TRACER_HPP

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "strata/span.hpp"

namespace strata {

// ---------------------------------------------------------------------------
// Clocks
//
// The tracer stamps host-side spans from a Clock so tests and simulations can
// substitute a virtual timeline. Device-side EXEC spans carry timestamps from
// their own clock domain and bypass the host clock entirely.

class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::uint64_t now_ns() = 0;
};

/// Wall-clock time from std::chrono::steady_clock.
class MonotonicClock final : public Clock {
 public:
  std::uint64_t now_ns() override;
};

/// Manually driven clock. Never moves backwards.
class VirtualClock final : public Clock {
 public:
  explicit VirtualClock(std::uint64_t start_ns = 0) : now_(start_ns) {}

  std::uint64_t now_ns() override { return now_.load(); }
  void advance(std::uint64_t delta_ns) { now_.fetch_add(delta_ns); }
  void set(std::uint64_t absolute_ns);

 private:
  std::atomic<std::uint64_t> now_;
};

// ---------------------------------------------------------------------------
// Sinks

class SpanSink {
 public:
  virtual ~SpanSink() = default;
  virtual void accept(Span span) = 0;
  virtual void flush() {}
};

/// Collects spans in memory. Thread-safe.
class MemorySink final : public SpanSink {
 public:
  void accept(Span span) override;

  /// Moves out everything collected so far, in emission order.
  std::vector<Span> take();
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::vector<Span> spans_;
};

/// Streams one span record per line. Thread-safe. The caller owns the stream
/// and is responsible for writing the meta record.
class JsonlSink final : public SpanSink {
 public:
  explicit JsonlSink(std::ostream& out) : out_(out) {}

  void accept(Span span) override;
  void flush() override;

 private:
  std::mutex mutex_;
  std::ostream& out_;
};

// ---------------------------------------------------------------------------
// Tracer

struct TracerConfig {
  std::uint64_t trace_id = 0;
  /// Spans at levels outside this set are silently dropped; profilers call
  /// the tracer unconditionally and the set decides what a run records.
  LevelSet enabled_levels;
  std::shared_ptr<Clock> clock;  ///< defaults to MonotonicClock
};

/// Ticket for an in-flight span. Obtained from Tracer::start_span and spent
/// by Tracer::finish_span; a handle is finished at most once.
struct SpanHandle {
  std::uint64_t span_id = 0;
  std::uint64_t begin_ns = 0;
  bool open = false;
};

/// Emits spans for one trace. All operations are safe to call concurrently;
/// span ids are unique across threads and increase in allocation order.
class Tracer {
 public:
  explicit Tracer(TracerConfig config, SpanSink& sink);

  Tracer(const Tracer&) = delete;
  Tracer& operator=(const Tracer&) = delete;

  /// Opens a span stamped with the current clock. Returns a closed (inert)
  /// handle when the level is disabled; finishing an inert handle is a no-op.
  SpanHandle start_span(std::string name, Level level,
                        SpanKind kind = SpanKind::Sync,
                        std::optional<std::uint64_t> parent_id = std::nullopt,
                        std::optional<std::uint64_t> correlation_id = std::nullopt,
                        TagMap tags = {});

  /// Stamps the end timestamp and hands the span to the sink. Tags given
  /// here are merged over those from start_span. Throws UsageError if the
  /// handle was already finished.
  void finish_span(SpanHandle& handle, TagMap tags = {});

  /// Records a span whose interval is already known — device-side EXEC spans
  /// and replayed events. Dropped silently when the level is disabled.
  /// Returns the span id (0 when dropped). Throws TraceError if end < begin.
  std::uint64_t record_span(std::string name, Level level, SpanKind kind,
                            std::uint64_t begin_ns, std::uint64_t end_ns,
                            std::optional<std::uint64_t> parent_id = std::nullopt,
                            std::optional<std::uint64_t> correlation_id = std::nullopt,
                            TagMap tags = {});

  /// Fresh correlation id for a launch/exec pair.
  std::uint64_t next_correlation_id();

  /// Throws UsageError if any span is still open, then flushes the sink.
  void flush();

  std::uint64_t trace_id() const { return config_.trace_id; }
  const LevelSet& enabled_levels() const { return config_.enabled_levels; }
  bool level_enabled(Level level) const;
  Clock& clock() { return *config_.clock; }

 private:
  struct Pending {
    Span span;
  };

  TracerConfig config_;
  SpanSink& sink_;
  std::atomic<std::uint64_t> next_span_id_{1};
  std::atomic<std::uint64_t> next_correlation_id_{1};
  mutable std::mutex mutex_;
  /// Open spans by span_id.
  std::vector<Pending> open_;
};

}  // namespace strata

#endif  // STRATA_TRACER_HPP
