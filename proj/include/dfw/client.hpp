#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "dfw/net.hpp"
#include "dfw/wire.hpp"

namespace dfw::client {

class TimeoutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::chrono::milliseconds timeout{2000};
  int retries = 3;  // resends for idempotent kinds; REQUEST is sent once
};

// Each call sends one datagram exchange and returns the decoded reply
// (which may be an ERROR message). Throws TimeoutError when every attempt
// goes unanswered.
wire::Message request(const net::Endpoint& server, uint32_t user_id, uint32_t expiry_seconds,
                      const std::vector<std::string>& rules, const Options& opts = {});
wire::Message confirm(const net::Endpoint& server, uint32_t user_id, uint64_t update_id,
                      const Options& opts = {});
wire::Message remove(const net::Endpoint& server, uint32_t user_id, uint64_t update_id,
                     const Options& opts = {});
wire::Message renew(const net::Endpoint& server, uint32_t user_id, uint64_t update_id,
                    uint32_t expiry_seconds, const Options& opts = {});

}  // namespace dfw::client
