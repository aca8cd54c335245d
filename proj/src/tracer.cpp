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

#include "strata/tracer.hpp"

#include <algorithm>
#include <chrono>

#include "strata/collector.hpp"

namespace strata {

std::uint64_t MonotonicClock::now_ns() {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(
          std::chrono::steady_clock::now().time_since_epoch())
          .count());
}

void VirtualClock::set(std::uint64_t absolute_ns) {
  // Monotonicity: never rewind, even under racy setters.
  std::uint64_t current = now_.load();
  while (absolute_ns > current &&
         !now_.compare_exchange_weak(current, absolute_ns)) {
  }
}

void MemorySink::accept(Span span) {
  std::lock_guard lock(mutex_);
  spans_.push_back(std::move(span));
}

std::vector<Span> MemorySink::take() {
  std::lock_guard lock(mutex_);
  std::vector<Span> out;
  out.swap(spans_);
  return out;
}

std::size_t MemorySink::size() const {
  std::lock_guard lock(mutex_);
  return spans_.size();
}

void JsonlSink::accept(Span span) {
  std::string line = encode_span_record(span);
  std::lock_guard lock(mutex_);
  out_ << line << '\n';
}

void JsonlSink::flush() {
  std::lock_guard lock(mutex_);
  out_.flush();
}

Tracer::Tracer(TracerConfig config, SpanSink& sink)
    : config_(std::move(config)), sink_(sink) {
  if (!config_.clock) config_.clock = std::make_shared<MonotonicClock>();
}

bool Tracer::level_enabled(Level level) const {
  return config_.enabled_levels.contains(level);
}

SpanHandle Tracer::start_span(std::string name, Level level, SpanKind kind,
                              std::optional<std::uint64_t> parent_id,
                              std::optional<std::uint64_t> correlation_id,
                              TagMap tags) {
  if (!level_enabled(level)) return SpanHandle{};  // inert
  Span span;
  span.span_id = next_span_id_.fetch_add(1);
  span.trace_id = config_.trace_id;
  span.parent_id = parent_id;
  span.name = std::move(name);
  span.level = level;
  span.kind = kind;
  span.begin_ns = config_.clock->now_ns();
  span.end_ns = span.begin_ns;
  span.correlation_id = correlation_id;
  span.tags = std::move(tags);
  SpanHandle handle{span.span_id, span.begin_ns, true};
  std::lock_guard lock(mutex_);
  open_.push_back(Pending{std::move(span)});
  return handle;
}

void Tracer::finish_span(SpanHandle& handle, TagMap tags) {
  if (!handle.open) {
    if (handle.span_id == 0) return;  // inert handle from a disabled level
    throw UsageError("span " + std::to_string(handle.span_id) +
                     " finished twice");
  }
  handle.open = false;
  std::uint64_t end_ns = config_.clock->now_ns();
  Span span;
  {
    std::lock_guard lock(mutex_);
    auto it = std::find_if(open_.begin(), open_.end(), [&](const Pending& p) {
      return p.span.span_id == handle.span_id;
    });
    if (it == open_.end()) {
      throw UsageError("span " + std::to_string(handle.span_id) +
                       " is not open");
    }
    span = std::move(it->span);
    open_.erase(it);
  }
  // A clock stall can leave end == begin; it must never go backwards.
  span.end_ns = std::max(end_ns, span.begin_ns);
  for (auto& [key, value] : tags) span.tags[key] = std::move(value);
  sink_.accept(std::move(span));
}

std::uint64_t Tracer::record_span(std::string name, Level level, SpanKind kind,
                                  std::uint64_t begin_ns, std::uint64_t end_ns,
                                  std::optional<std::uint64_t> parent_id,
                                  std::optional<std::uint64_t> correlation_id,
                                  TagMap tags) {
  if (!level_enabled(level)) return 0;
  if (end_ns < begin_ns) {
    throw TraceError("span '" + name + "' ends before it begins");
  }
  Span span;
  span.span_id = next_span_id_.fetch_add(1);
  span.trace_id = config_.trace_id;
  span.parent_id = parent_id;
  span.name = std::move(name);
  span.level = level;
  span.kind = kind;
  span.begin_ns = begin_ns;
  span.end_ns = end_ns;
  span.correlation_id = correlation_id;
  span.tags = std::move(tags);
  std::uint64_t id = span.span_id;
  sink_.accept(std::move(span));
  return id;
}

std::uint64_t Tracer::next_correlation_id() {
  return next_correlation_id_.fetch_add(1);
}

void Tracer::flush() {
  {
    std::lock_guard lock(mutex_);
    if (!open_.empty()) {
      throw UsageError("flush with " + std::to_string(open_.size()) +
                       " span(s) still open (first: " +
                       std::to_string(open_.front().span.span_id) + ")");
    }
  }
  sink_.flush();
}

}  // namespace strata
