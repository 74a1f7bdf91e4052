#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "dmatwin/em_model.hpp"

namespace dmatwin::proto {

// Frame: 0xAA | msg_type | length | payload[length] | XOR(msg_type, length, payload).
// Multi-byte integers are big-endian.
inline constexpr std::uint8_t kSync = 0xAA;
inline constexpr std::size_t kFrameOverhead = 4;
inline constexpr std::size_t kMaxCodeList = 16;
inline constexpr std::size_t kMaxPayload = 2 * kMaxCodeList;  // longer lengths are rejected
inline constexpr double kTickSeconds = 10e-9;  // 100 MHz fabric clock
inline constexpr std::size_t kWordBits = 16;

enum class MsgType : std::uint8_t {
  SetCode = 0x01,
  SetCodeList = 0x02,
  SetSwitchInterval = 0x03,
  SteeringEnable = 0x04,
  SetMode = 0x05,
};

enum class Mode : std::uint8_t { Single = 0, Multi = 1 };

struct SetCode {
  std::uint16_t code = 0;
  friend bool operator==(const SetCode&, const SetCode&) = default;
};
struct SetCodeList {
  std::vector<std::uint16_t> codes;
  friend bool operator==(const SetCodeList&, const SetCodeList&) = default;
};
struct SetSwitchInterval {
  std::uint32_t ticks = 1;
  friend bool operator==(const SetSwitchInterval&, const SetSwitchInterval&) = default;
};
struct SteeringEnable {
  bool enabled = true;
  friend bool operator==(const SteeringEnable&, const SteeringEnable&) = default;
};
struct SetMode {
  Mode mode = Mode::Single;
  friend bool operator==(const SetMode&, const SetMode&) = default;
};

using ControlCommand = std::variant<SetCode, SetCodeList, SetSwitchInterval, SteeringEnable, SetMode>;

enum class DecodeStatus {
  Ok,
  NeedMoreBytes,
  FrameError,      // checksum mismatch
  Unsupported,     // unknown msg_type
  InvalidPayload,  // known type, malformed body
};

const char* to_string(DecodeStatus s);

struct DecodeResult {
  DecodeStatus status = DecodeStatus::NeedMoreBytes;
  std::optional<ControlCommand> command;
  // Bytes to drop from the front of the input, including skipped garbage.
  std::size_t consumed = 0;
};

std::vector<std::uint8_t> encode(const ControlCommand& cmd);

// Decodes the first frame in `bytes`, skipping anything before a sync byte.
// A bad checksum or a length above kMaxPayload consumes only the sync byte so
// decoding resumes after it.
DecodeResult decode(std::span<const std::uint8_t> bytes);

enum class Radix { Bin, Hex, Dec };

em::CodeWord parse_code_text(std::string_view text, Radix radix);

struct SwitchingRate {
  double ratio = 0.0;
  bool symbol_rate_capable = false;
};

SwitchingRate switching_rate_check(std::uint64_t interval_ticks, double symbol_rate);

struct TimelineEvent {
  enum class Kind { Word, Nack };
  Kind kind = Kind::Word;
  std::uint64_t tick = 0;
  std::uint16_t radiation_word = 0;
  DecodeStatus reason = DecodeStatus::Ok;  // for Nack
  friend bool operator==(const TimelineEvent&, const TimelineEvent&) = default;
};

struct PendingCommand {
  std::uint64_t apply_tick = 0;
  std::optional<ControlCommand> command;  // empty: NACK for a rejected frame
  DecodeStatus status = DecodeStatus::Ok;
  friend bool operator==(const PendingCommand&, const PendingCommand&) = default;
};

// Beam controller state. The diodes are driven with the complement of the
// radiation word: an element radiates when its diode is off.
struct EmulatorState {
  std::uint64_t clock_ticks = 0;
  std::uint16_t active_diode_word = 0x0000;
  std::uint16_t active_radiation_word = 0xFFFF;
  Mode mode = Mode::Single;
  std::uint16_t single_code = 0xFFFF;
  std::vector<std::uint16_t> code_list;
  std::uint32_t interval_ticks = 1;
  bool enabled = true;
  std::size_t list_index = 0;
  std::optional<std::uint64_t> next_switch_tick;
  std::vector<std::uint8_t> rx_buffer;
  std::deque<PendingCommand> pending;

  friend bool operator==(const EmulatorState&, const EmulatorState&) = default;
};

struct StepResult {
  EmulatorState state;
  std::vector<TimelineEvent> timeline;
};

// Receives `bytes` at the current tick, then advances the clock by n_ticks.
// Complete frames take effect one tick after receipt.
StepResult emulator_step(const EmulatorState& state, std::span<const std::uint8_t> bytes, std::uint64_t n_ticks);

void write_timeline_csv(std::ostream& os, std::span<const TimelineEvent> timeline);

}  // namespace dmatwin::proto
