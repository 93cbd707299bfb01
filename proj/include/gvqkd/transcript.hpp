// Session event log and its line-delimited text form.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gvqkd/spacetime.hpp"

namespace gvqkd {

enum class EntryKind : std::uint8_t {
  SchedulePublish,
  Emit,
  Arrive,
  Detect,
  Announce,
  AnnounceReceive,
  EveCapture,
  EveStore,
  EveApplyUnitary,
  EveMeasure,
  EveEmit,
  EveReroute,
  EveRead,
};

std::string_view to_string(EntryKind k);
EntryKind entry_kind_from_string(std::string_view s);
bool is_eve_operation(EntryKind k);

struct TranscriptEntry {
  Event at;
  EntryKind kind = EntryKind::Emit;
  std::int64_t bit = -1;
  int wavepacket = 0;
  /// Event whose information this entry depends on, if any.
  std::optional<Event> cause;
  /// Free text without tabs or newlines.
  std::string payload;

  bool operator==(const TranscriptEntry&) const = default;
};

struct Transcript {
  std::vector<TranscriptEntry> entries;
  bool complete = false;

  bool operator==(const Transcript&) const = default;

  /// Stable sort by time; ties keep insertion order.
  void finalize();
};

/// One entry per line: time, kind, x, bit, wavepacket, cause, payload, tab
/// separated. The cause column is "-" or "x,t". Doubles use the shortest
/// representation that round-trips.
void write_transcript(std::ostream& out, const Transcript& transcript);
Transcript read_transcript(std::istream& in);

std::string format_double(double v);

}  // namespace gvqkd
