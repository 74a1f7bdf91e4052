#include "dmatwin/control_proto.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace dmatwin::proto {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>((p[0] << 8) | p[1]); }

std::uint8_t checksum(std::span<const std::uint8_t> body) {
  std::uint8_t x = 0;
  for (auto b : body) x ^= b;
  return x;
}

std::optional<ControlCommand> parse_body(MsgType type, std::span<const std::uint8_t> p) {
  switch (type) {
    case MsgType::SetCode:
      if (p.size() != 2) return std::nullopt;
      return SetCode{get_u16(p.data())};
    case MsgType::SetCodeList: {
      if (p.empty() || p.size() % 2 != 0 || p.size() / 2 > kMaxCodeList) return std::nullopt;
      SetCodeList l;
      for (std::size_t i = 0; i < p.size(); i += 2) l.codes.push_back(get_u16(p.data() + i));
      return l;
    }
    case MsgType::SetSwitchInterval: {
      if (p.size() != 4) return std::nullopt;
      const std::uint32_t t = (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
                              (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
      if (t == 0) return std::nullopt;
      return SetSwitchInterval{t};
    }
    case MsgType::SteeringEnable:
      if (p.size() != 1 || p[0] > 1) return std::nullopt;
      return SteeringEnable{p[0] == 1};
    case MsgType::SetMode:
      if (p.size() != 1 || p[0] > 1) return std::nullopt;
      return SetMode{static_cast<Mode>(p[0])};
  }
  return std::nullopt;
}

bool known_type(std::uint8_t t) { return t >= 0x01 && t <= 0x05; }

}  // namespace

const char* to_string(DecodeStatus s) {
  switch (s) {
    case DecodeStatus::Ok: return "ok";
    case DecodeStatus::NeedMoreBytes: return "need_more_bytes";
    case DecodeStatus::FrameError: return "frame_error";
    case DecodeStatus::Unsupported: return "unsupported";
    case DecodeStatus::InvalidPayload: return "invalid_payload";
  }
  return "?";
}

std::vector<std::uint8_t> encode(const ControlCommand& cmd) {
  std::vector<std::uint8_t> body;
  std::visit(Overloaded{
                 [&](const SetCode& c) {
                   body.push_back(static_cast<std::uint8_t>(MsgType::SetCode));
                   body.push_back(2);
                   put_u16(body, c.code);
                 },
                 [&](const SetCodeList& c) {
                   if (c.codes.empty() || c.codes.size() > kMaxCodeList)
                     throw std::invalid_argument("encode: code list must hold 1 to 16 codes");
                   body.push_back(static_cast<std::uint8_t>(MsgType::SetCodeList));
                   body.push_back(static_cast<std::uint8_t>(2 * c.codes.size()));
                   for (auto v : c.codes) put_u16(body, v);
                 },
                 [&](const SetSwitchInterval& c) {
                   if (c.ticks == 0) throw std::invalid_argument("encode: switch interval must be >= 1 tick");
                   body.push_back(static_cast<std::uint8_t>(MsgType::SetSwitchInterval));
                   body.push_back(4);
                   for (int s = 24; s >= 0; s -= 8) body.push_back(static_cast<std::uint8_t>(c.ticks >> s));
                 },
                 [&](const SteeringEnable& c) {
                   body.push_back(static_cast<std::uint8_t>(MsgType::SteeringEnable));
                   body.push_back(1);
                   body.push_back(c.enabled ? 1 : 0);
                 },
                 [&](const SetMode& c) {
                   body.push_back(static_cast<std::uint8_t>(MsgType::SetMode));
                   body.push_back(1);
                   body.push_back(static_cast<std::uint8_t>(c.mode));
                 },
             },
             cmd);
  std::vector<std::uint8_t> frame{kSync};
  frame.insert(frame.end(), body.begin(), body.end());
  frame.push_back(checksum(body));
  return frame;
}

DecodeResult decode(std::span<const std::uint8_t> bytes) {
  DecodeResult r;
  const auto sync = std::find(bytes.begin(), bytes.end(), kSync);
  const auto skipped = static_cast<std::size_t>(sync - bytes.begin());
  if (sync == bytes.end()) {
    r.consumed = bytes.size();
    return r;
  }
  const auto frame = bytes.subspan(skipped);
  r.consumed = skipped;
  if (frame.size() < 3) return r;
  const std::size_t len = frame[2];
  if (len > kMaxPayload) {
    // No message is this long: treat the sync as noise instead of waiting.
    r.status = DecodeStatus::FrameError;
    r.consumed = skipped + 1;
    return r;
  }
  if (frame.size() < kFrameOverhead + len) return r;

  const auto body = frame.subspan(1, 2 + len);
  if (checksum(body) != frame[3 + len]) {
    r.status = DecodeStatus::FrameError;
    r.consumed = skipped + 1;
    return r;
  }
  r.consumed = skipped + kFrameOverhead + len;
  if (!known_type(frame[1])) {
    r.status = DecodeStatus::Unsupported;
    return r;
  }
  r.command = parse_body(static_cast<MsgType>(frame[1]), frame.subspan(3, len));
  r.status = r.command ? DecodeStatus::Ok : DecodeStatus::InvalidPayload;
  return r;
}

em::CodeWord parse_code_text(std::string_view text, Radix radix) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  int base = 10;
  if (radix == Radix::Bin) {
    base = 2;
    if (text.starts_with("0b") || text.starts_with("0B")) text.remove_prefix(2);
  } else if (radix == Radix::Hex) {
    base = 16;
    if (text.starts_with("0x") || text.starts_with("0X")) text.remove_prefix(2);
  }
  if (text.empty()) throw std::invalid_argument("parse_code_text: empty code");
  std::uint64_t value = 0;
  for (char c : text) {
    int digit;
    if (c >= '0' && c <= '9') digit = c - '0';
    else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') digit = c - 'A' + 10;
    else digit = 99;
    if (digit >= base) throw std::invalid_argument(std::string("parse_code_text: invalid digit '") + c + "'");
    value = value * static_cast<std::uint64_t>(base) + static_cast<std::uint64_t>(digit);
    if (value >= (std::uint64_t{1} << kWordBits)) throw std::out_of_range("parse_code_text: value exceeds 16 bits");
  }
  return em::CodeWord(static_cast<std::uint32_t>(value), kWordBits);
}

SwitchingRate switching_rate_check(std::uint64_t interval_ticks, double symbol_rate) {
  if (interval_ticks == 0 || !(symbol_rate > 0.0))
    throw std::invalid_argument("switching_rate_check: inputs must be positive");
  SwitchingRate s;
  s.ratio = 1.0 / (static_cast<double>(interval_ticks) * kTickSeconds) / symbol_rate;
  s.symbol_rate_capable = s.ratio >= 1.0;
  return s;
}

namespace {

class Machine {
 public:
  Machine(EmulatorState& s, std::vector<TimelineEvent>& tl) : s_(s), tl_(tl) {}

  void drive(std::uint16_t word, std::uint64_t tick) {
    if (word == s_.active_radiation_word) return;
    s_.active_radiation_word = word;
    s_.active_diode_word = static_cast<std::uint16_t>(~word);
    tl_.push_back({TimelineEvent::Kind::Word, tick, word, DecodeStatus::Ok});
  }

  void restart_schedule(std::uint64_t tick) {
    s_.list_index = 0;
    drive(s_.code_list.front(), tick);
    if (s_.code_list.size() > 1) s_.next_switch_tick = tick + s_.interval_ticks;
    else s_.next_switch_tick.reset();
  }

  void refresh(std::uint64_t tick) {
    s_.next_switch_tick.reset();
    if (!s_.enabled) return;
    if (s_.mode == Mode::Single) drive(s_.single_code, tick);
    else restart_schedule(tick);
  }

  void nack(std::uint64_t tick, DecodeStatus why) {
    tl_.push_back({TimelineEvent::Kind::Nack, tick, s_.active_radiation_word, why});
  }

  void apply(const PendingCommand& p) {
    const std::uint64_t t = p.apply_tick;
    if (!p.command) {
      nack(t, p.status);
      return;
    }
    std::visit(Overloaded{
                   [&](const SetCode& c) {
                     s_.single_code = c.code;
                     if (s_.enabled && s_.mode == Mode::Single) drive(c.code, t);
                   },
                   [&](const SetCodeList& c) {
                     s_.code_list = c.codes;
                     if (s_.enabled && s_.mode == Mode::Multi) restart_schedule(t);
                   },
                   [&](const SetSwitchInterval& c) {
                     s_.interval_ticks = c.ticks;
                     if (s_.next_switch_tick) s_.next_switch_tick = t + c.ticks;
                   },
                   [&](const SteeringEnable& c) {
                     if (c.enabled == s_.enabled) return;
                     s_.enabled = c.enabled;
                     refresh(t);
                   },
                   [&](const SetMode& c) {
                     if (c.mode == Mode::Multi && s_.code_list.empty()) {
                       nack(t, DecodeStatus::InvalidPayload);
                       return;
                     }
                     s_.mode = c.mode;
                     refresh(t);
                   },
               },
               *p.command);
  }

  void switch_code(std::uint64_t tick) {
    s_.list_index = (s_.list_index + 1) % s_.code_list.size();
    drive(s_.code_list[s_.list_index], tick);
    s_.next_switch_tick = tick + s_.interval_ticks;
  }

 private:
  EmulatorState& s_;
  std::vector<TimelineEvent>& tl_;
};

}  // namespace

StepResult emulator_step(const EmulatorState& state, std::span<const std::uint8_t> bytes, std::uint64_t n_ticks) {
  StepResult out{state, {}};
  EmulatorState& s = out.state;
  Machine m(s, out.timeline);

  s.rx_buffer.insert(s.rx_buffer.end(), bytes.begin(), bytes.end());
  std::size_t pos = 0;
  while (pos < s.rx_buffer.size()) {
    const auto r = decode(std::span(s.rx_buffer).subspan(pos));
    if (r.status == DecodeStatus::NeedMoreBytes) {
      pos += r.consumed;
      break;
    }
    pos += r.consumed;
    s.pending.push_back({s.clock_ticks + 1, r.command, r.status});
  }
  s.rx_buffer.erase(s.rx_buffer.begin(), s.rx_buffer.begin() + static_cast<std::ptrdiff_t>(pos));

  const std::uint64_t end = s.clock_ticks + n_ticks;
  for (;;) {
    std::optional<std::uint64_t> next;
    if (!s.pending.empty()) next = s.pending.front().apply_tick;
    if (s.next_switch_tick && (!next || *s.next_switch_tick < *next)) next = s.next_switch_tick;
    if (!next || *next > end) break;
    const std::uint64_t t = *next;
    s.clock_ticks = t;
    if (s.next_switch_tick && *s.next_switch_tick == t) m.switch_code(t);
    while (!s.pending.empty() && s.pending.front().apply_tick == t) {
      m.apply(s.pending.front());
      s.pending.pop_front();
    }
  }
  s.clock_ticks = end;
  return out;
}

void write_timeline_csv(std::ostream& os, std::span<const TimelineEvent> timeline) {
  os << "tick,radiation_word_hex\n";
  char buf[48];
  for (const auto& e : timeline) {
    if (e.kind != TimelineEvent::Kind::Word) continue;
    std::snprintf(buf, sizeof buf, "%llu,0x%04X\n", static_cast<unsigned long long>(e.tick), e.radiation_word);
    os << buf;
  }
}

}  // namespace dmatwin::proto
