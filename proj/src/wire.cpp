#include "dfw/wire.hpp"

namespace dfw::wire {

namespace {

class Writer {
 public:
  void u8(uint8_t v) { out_.push_back(v); }
  void u16(uint16_t v) {
    u8(static_cast<uint8_t>(v >> 8));
    u8(static_cast<uint8_t>(v));
  }
  void u32(uint32_t v) {
    u16(static_cast<uint16_t>(v >> 16));
    u16(static_cast<uint16_t>(v));
  }
  void u64(uint64_t v) {
    u32(static_cast<uint32_t>(v >> 32));
    u32(static_cast<uint32_t>(v));
  }
  void str(const std::string& s) {
    if (s.size() > 0xFFFF) throw WireError("string field longer than 65535 bytes");
    u16(static_cast<uint16_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void str_list(const std::vector<std::string>& v) {
    if (v.size() > 0xFFFF) throw WireError("too many list entries");
    u16(static_cast<uint16_t>(v.size()));
    for (const std::string& s : v) str(s);
  }

  std::vector<uint8_t> take() { return std::move(out_); }

 private:
  std::vector<uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  uint16_t u16() {
    uint16_t hi = u8();
    return static_cast<uint16_t>((hi << 8) | u8());
  }
  uint32_t u32() {
    uint32_t hi = u16();
    return (hi << 16) | u16();
  }
  uint64_t u64() {
    uint64_t hi = u32();
    return (hi << 32) | u32();
  }
  std::string str() {
    uint16_t len = u16();
    need(len);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
    pos_ += len;
    return s;
  }
  std::vector<std::string> str_list() {
    uint16_t count = u16();
    std::vector<std::string> v;
    v.reserve(count);
    for (uint16_t i = 0; i < count; ++i) v.push_back(str());
    return v;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(size_t n) {
    if (bytes_.size() - pos_ < n) throw WireError("truncated message body");
  }
  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
};

}  // namespace

Kind kind_of(const Message& m) {
  return static_cast<Kind>(m.index() + 1);
}

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::Request:
      return "REQUEST";
    case Kind::AllowFull:
      return "ALLOW_FULL";
    case Kind::AllowPartial:
      return "ALLOW_PARTIAL";
    case Kind::Reject:
      return "REJECT";
    case Kind::Confirm:
      return "CONFIRM";
    case Kind::Delete:
      return "DELETE";
    case Kind::Renew:
      return "RENEW";
    case Kind::Ack:
      return "ACK";
    case Kind::Error:
      return "ERROR";
  }
  return "UNKNOWN";
}

std::vector<uint8_t> encode(const Message& m) {
  Writer w;
  for (uint8_t b : kMagic) w.u8(b);
  w.u8(kVersion);
  w.u8(static_cast<uint8_t>(kind_of(m)));
  std::visit(
      [&](const auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, Request>) {
          w.u32(body.user_id);
          w.u32(body.expiry_seconds);
          w.str_list(body.rules);
        } else if constexpr (std::is_same_v<T, AllowFull>) {
          w.u64(body.update_id);
        } else if constexpr (std::is_same_v<T, AllowPartial>) {
          w.u64(body.update_id);
          w.str_list(body.rows);
        } else if constexpr (std::is_same_v<T, Reject>) {
          w.u64(body.update_id);
          w.str(body.reason);
        } else if constexpr (std::is_same_v<T, Confirm>) {
          w.u32(body.user_id);
          w.u64(body.update_id);
        } else if constexpr (std::is_same_v<T, Delete>) {
          w.u32(body.user_id);
          w.u64(body.update_id);
        } else if constexpr (std::is_same_v<T, Renew>) {
          w.u32(body.user_id);
          w.u64(body.update_id);
          w.u32(body.expiry_seconds);
        } else if constexpr (std::is_same_v<T, Ack>) {
          w.u64(body.update_id);
          w.str(body.reason);
        } else if constexpr (std::is_same_v<T, Error>) {
          w.u64(body.update_id);
          w.str(body.reason);
        }
      },
      m);
  return w.take();
}

Message decode(std::span<const uint8_t> bytes) {
  if (bytes.size() > kMaxDatagram) throw WireError("datagram too large");
  Reader r(bytes);
  for (uint8_t expected : kMagic) {
    if (r.u8() != expected) throw WireError("bad magic");
  }
  if (r.u8() != kVersion) throw WireError("unsupported version");
  uint8_t kind = r.u8();

  Message m;
  switch (static_cast<Kind>(kind)) {
    case Kind::Request: {
      Request b;
      b.user_id = r.u32();
      b.expiry_seconds = r.u32();
      b.rules = r.str_list();
      m = std::move(b);
      break;
    }
    case Kind::AllowFull: {
      AllowFull b;
      b.update_id = r.u64();
      m = b;
      break;
    }
    case Kind::AllowPartial: {
      AllowPartial b;
      b.update_id = r.u64();
      b.rows = r.str_list();
      m = std::move(b);
      break;
    }
    case Kind::Reject: {
      Reject b;
      b.update_id = r.u64();
      b.reason = r.str();
      m = std::move(b);
      break;
    }
    case Kind::Confirm: {
      Confirm b;
      b.user_id = r.u32();
      b.update_id = r.u64();
      m = b;
      break;
    }
    case Kind::Delete: {
      Delete b;
      b.user_id = r.u32();
      b.update_id = r.u64();
      m = b;
      break;
    }
    case Kind::Renew: {
      Renew b;
      b.user_id = r.u32();
      b.update_id = r.u64();
      b.expiry_seconds = r.u32();
      m = b;
      break;
    }
    case Kind::Ack: {
      Ack b;
      b.update_id = r.u64();
      b.reason = r.str();
      m = std::move(b);
      break;
    }
    case Kind::Error: {
      Error b;
      b.update_id = r.u64();
      b.reason = r.str();
      m = std::move(b);
      break;
    }
    default:
      throw WireError("unknown message kind " + std::to_string(kind));
  }
  if (!r.done()) throw WireError("trailing bytes after message body");
  return m;
}

}  // namespace dfw::wire
