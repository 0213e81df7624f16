#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>

namespace dreplay {

struct ServeOptions {
  std::string bind = "127.0.0.1:7878";  // port 0 picks a free port
  std::function<void(std::uint16_t port)> on_listening;
  const std::atomic<bool>* stop = nullptr;
  std::size_t max_clients = 0;  // 0 = unlimited
};

/// Newline-delimited JSON over TCP, one client (and one session) at a time.
/// Throws Error(Io) if the address cannot be bound.
void serve(const ServeOptions& options);

}  // namespace dreplay
