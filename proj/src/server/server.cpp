#include "dreplay/server/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>

#include "dreplay/error.hpp"
#include "dreplay/server/protocol.hpp"

namespace dreplay {
namespace {

class Fd {
 public:
  explicit Fd(int fd = -1) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  int get() const { return fd_; }

 private:
  int fd_;
};

sockaddr_in parse_bind(const std::string& bind) {
  auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::Io, "bind address must be host:port");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  auto host = bind.substr(0, colon);
  if (host == "localhost") host = "127.0.0.1";
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) throw Error(ErrorCode::Io, "bad bind host " + host);
  unsigned long port = 0;
  try {
    port = std::stoul(bind.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::Io, "bad bind port in " + bind);
  }
  if (port > 65535) throw Error(ErrorCode::Io, "bad bind port in " + bind);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  return addr;
}

bool send_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    auto n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

bool stopping(const ServeOptions& o) { return o.stop && o.stop->load(); }

// Waits for readability, waking periodically to honour the stop flag.
bool wait_readable(int fd, const ServeOptions& o) {
  while (!stopping(o)) {
    pollfd p{fd, POLLIN, 0};
    int r = ::poll(&p, 1, 100);
    if (r > 0) return true;
    if (r < 0 && errno != EINTR) return false;
  }
  return false;
}

void serve_client(int fd, const ServeOptions& o) {
  Dispatcher d;
  std::string buffer;
  char chunk[4096];
  while (wait_readable(fd, o)) {
    auto n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t nl;
    while ((nl = buffer.find('\n')) != std::string::npos) {
      auto line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      std::string out;
      for (const auto& doc : d.handle_line(line)) out += doc.dump() + "\n";
      if (!send_all(fd, out)) return;
    }
  }
}

}  // namespace

void serve(const ServeOptions& o) {
  auto addr = parse_bind(o.bind);
  Fd listener(::socket(AF_INET, SOCK_STREAM, 0));
  if (listener.get() < 0) throw Error(ErrorCode::Io, std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listener.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(listener.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
    throw Error(ErrorCode::Io, "cannot bind " + o.bind + ": " + std::strerror(errno));
  if (::listen(listener.get(), 4) != 0) throw Error(ErrorCode::Io, std::string("listen: ") + std::strerror(errno));
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(listener.get(), reinterpret_cast<sockaddr*>(&bound), &len);
  if (o.on_listening) o.on_listening(ntohs(bound.sin_port));

  std::size_t served = 0;
  while (!stopping(o) && (o.max_clients == 0 || served < o.max_clients)) {
    if (!wait_readable(listener.get(), o)) break;
    Fd client(::accept(listener.get(), nullptr, nullptr));
    if (client.get() < 0) continue;
    ++served;
    serve_client(client.get(), o);
  }
}

}  // namespace dreplay
