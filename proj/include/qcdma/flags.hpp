#pragma once

#include <cstdint>
#include <string>

namespace qcdma {

/// Diagnostic markers attached to per-user results. None of them abort a
/// computation; they are carried into every JSON/CSV record.
enum class Flag : std::uint32_t {
  kNone = 0,
  kSubVacuumEve = 1u << 0,          // an unconditional Eve value was clamped to 1
  kSubVacuumConditional = 1u << 1,  // a conditional Eve value was clamped to 1
  kNegativeRate = 1u << 2,
  kBlockTooSmall = 1u << 3,         // eta_min hit the floor
  kNegativeRadicand = 1u << 4,      // closed-form square root argument < 0
  kEvaluationFailed = 1u << 5,      // sweep point threw; row kept
};

class Flags {
 public:
  constexpr Flags() = default;
  constexpr Flags(Flag f) : bits_(static_cast<std::uint32_t>(f)) {}  // NOLINT

  constexpr bool has(Flag f) const { return (bits_ & static_cast<std::uint32_t>(f)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint32_t bits() const { return bits_; }

  constexpr Flags& operator|=(Flags other) {
    bits_ |= other.bits_;
    return *this;
  }
  friend constexpr Flags operator|(Flags a, Flags b) { return a |= b; }
  friend constexpr bool operator==(Flags, Flags) = default;

  /// Pipe-separated names, e.g. "sub_vacuum_eve|negative_rate"; empty when clear.
  std::string to_string() const {
    static constexpr struct {
      Flag flag;
      const char* name;
    } kNames[] = {
        {Flag::kSubVacuumEve, "sub_vacuum_eve"},
        {Flag::kSubVacuumConditional, "sub_vacuum_conditional"},
        {Flag::kNegativeRate, "negative_rate"},
        {Flag::kBlockTooSmall, "block_too_small"},
        {Flag::kNegativeRadicand, "negative_radicand"},
        {Flag::kEvaluationFailed, "evaluation_failed"},
    };
    std::string out;
    for (const auto& entry : kNames) {
      if (!has(entry.flag)) continue;
      if (!out.empty()) out += '|';
      out += entry.name;
    }
    return out;
  }

 private:
  std::uint32_t bits_ = 0;
};

}  // namespace qcdma
