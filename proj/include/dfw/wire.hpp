#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

// Datagram wire format for the dynamic-update protocol. Every message is
// magic "DFW1", a version byte, a kind byte, then a kind-specific body with
// all integers big-endian and all strings length-prefixed (2 bytes).

namespace dfw::wire {

inline constexpr std::array<uint8_t, 4> kMagic{'D', 'F', 'W', '1'};
inline constexpr uint8_t kVersion = 0x01;
inline constexpr uint16_t kDefaultPort = 7997;
inline constexpr size_t kMaxDatagram = 8192;

enum class Kind : uint8_t {
  Request = 1,
  AllowFull = 2,
  AllowPartial = 3,
  Reject = 4,
  Confirm = 5,
  Delete = 6,
  Renew = 7,
  Ack = 8,
  Error = 9,
};

struct Request {
  uint32_t user_id = 0;
  uint32_t expiry_seconds = 0;
  std::vector<std::string> rules;
  friend bool operator==(const Request&, const Request&) = default;
};
struct AllowFull {
  uint64_t update_id = 0;
  friend bool operator==(const AllowFull&, const AllowFull&) = default;
};
struct AllowPartial {
  uint64_t update_id = 0;
  std::vector<std::string> rows;
  friend bool operator==(const AllowPartial&, const AllowPartial&) = default;
};
struct Reject {
  uint64_t update_id = 0;  // zero if none was assigned
  std::string reason;
  friend bool operator==(const Reject&, const Reject&) = default;
};
struct Confirm {
  uint32_t user_id = 0;
  uint64_t update_id = 0;
  friend bool operator==(const Confirm&, const Confirm&) = default;
};
struct Delete {
  uint32_t user_id = 0;
  uint64_t update_id = 0;
  friend bool operator==(const Delete&, const Delete&) = default;
};
struct Renew {
  uint32_t user_id = 0;
  uint64_t update_id = 0;
  uint32_t expiry_seconds = 0;
  friend bool operator==(const Renew&, const Renew&) = default;
};
struct Ack {
  uint64_t update_id = 0;
  std::string reason;
  friend bool operator==(const Ack&, const Ack&) = default;
};
struct Error {
  uint64_t update_id = 0;
  std::string reason;
  friend bool operator==(const Error&, const Error&) = default;
};

using Message =
    std::variant<Request, AllowFull, AllowPartial, Reject, Confirm, Delete, Renew, Ack, Error>;

class WireError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Kind kind_of(const Message& m);
const char* kind_name(Kind k);

std::vector<uint8_t> encode(const Message& m);  // throws WireError on oversize fields
Message decode(std::span<const uint8_t> bytes); // throws WireError

}  // namespace dfw::wire
