// Batch configuration: a flat key = value file, overridable by flags.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gvqkd/adversary.hpp"
#include "gvqkd/protocol.hpp"

namespace gvqkd {

/// Configuration error naming the offending key.
class SpecError : public std::invalid_argument {
 public:
  SpecError(std::string key, const std::string& what)
      : std::invalid_argument(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct RunSpec {
  SessionConfig session;

  std::string attack = "none";
  Point2 center{5.0, 1.0};
  GuessPolicy guess;
  std::optional<double> eve_x;
  double dummy_jitter = 0.0;
  double resend_angle = 0.0;
  double resend_phase = 0.0;
  double angle_scale = 1.5707963267948966;

  std::int64_t sessions = 1;
  int jobs = 1;
  std::string out_dir = "out";

  std::string sweep_axis = "tau";
  std::vector<double> sweep_values;
  std::int64_t samples = 1000;
  std::int64_t sample_bits = 2000;
  double frontier_detection = 0.01;
  double frontier_mi = 0.05;

  bool operator==(const RunSpec& other) const;
};

inline constexpr std::string_view kAttackNames[] = {
    "none", "intercept-first", "intercept-resend", "dummy", "dummy-gv2", "mirror-team", "sampler", "superluminal"};

/// Every accepted key, in echo order.
const std::vector<std::string>& spec_keys();

/// Sets one key from its text value. Unknown keys and bad values throw
/// SpecError naming the key.
void set_key(RunSpec& spec, std::string_view key, std::string_view value);

/// Applies a key = value document on top of `base`. '#' starts a comment.
RunSpec parse_config_text(std::string_view text, RunSpec base = {});
std::string to_config_text(const RunSpec& spec);

/// Cross-field checks, e.g. attack preconditions that do not need a session.
void validate(const RunSpec& spec);

}  // namespace gvqkd
