#include "gvqkd/transcript.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace gvqkd {

namespace {

constexpr std::array<std::string_view, 13> kKindNames{
    "schedule", "emit", "arrive", "detect", "announce", "announce-rx", "eve-capture",
    "eve-store", "eve-unitary", "eve-measure", "eve-emit", "eve-reroute", "eve-read"};

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw std::invalid_argument("transcript: bad number '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string_view to_string(EntryKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

EntryKind entry_kind_from_string(std::string_view s) {
  const auto it = std::find(kKindNames.begin(), kKindNames.end(), s);
  if (it == kKindNames.end()) throw std::invalid_argument("transcript: unknown kind '" + std::string(s) + "'");
  return static_cast<EntryKind>(it - kKindNames.begin());
}

bool is_eve_operation(EntryKind k) { return k >= EntryKind::EveCapture; }

void Transcript::finalize() {
  std::stable_sort(entries.begin(), entries.end(),
                   [](const TranscriptEntry& a, const TranscriptEntry& b) { return a.at.t < b.at.t; });
  complete = true;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

void write_transcript(std::ostream& out, const Transcript& transcript) {
  out << "# time\tkind\tx\tbit\twavepacket\tcause\tpayload\n";
  for (const auto& e : transcript.entries) {
    out << format_double(e.at.t) << '\t' << to_string(e.kind) << '\t' << format_double(e.at.x) << '\t'
        << e.bit << '\t' << e.wavepacket << '\t';
    if (e.cause)
      out << format_double(e.cause->x) << ',' << format_double(e.cause->t);
    else
      out << '-';
    out << '\t' << (e.payload.empty() ? std::string("-") : e.payload) << '\n';
  }
  if (transcript.complete) out << "# end\n";
}

Transcript read_transcript(std::istream& in) {
  Transcript t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line == "# end") t.complete = true;
      continue;
    }
    const auto f = split(line, '\t');
    if (f.size() != 7) throw std::invalid_argument("transcript line " + std::to_string(lineno) + ": expected 7 fields");
    TranscriptEntry e;
    e.at.t = parse_double(f[0]);
    e.kind = entry_kind_from_string(f[1]);
    e.at.x = parse_double(f[2]);
    e.bit = static_cast<std::int64_t>(parse_double(f[3]));
    e.wavepacket = static_cast<int>(parse_double(f[4]));
    if (f[5] != "-") {
      const auto c = split(f[5], ',');
      if (c.size() != 2) throw std::invalid_argument("transcript line " + std::to_string(lineno) + ": bad cause");
      e.cause = Event{parse_double(c[0]), parse_double(c[1])};
    }
    if (f[6] != "-") e.payload = std::string(f[6]);
    t.entries.push_back(std::move(e));
  }
  return t;
}

}  // namespace gvqkd
