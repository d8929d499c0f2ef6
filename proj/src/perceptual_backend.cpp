#include "editforge/perceptual_backend.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <thread>

#include "editforge/common.hpp"

static_assert(std::endian::native == std::endian::little,
              "wire protocol assumes a little-endian host");

namespace editforge::diffmask {

namespace {

void write_all(int fd, const void* data, size_t len) {
  const char* p = static_cast<const char*>(data);
  while (len > 0) {
    ssize_t n = ::write(fd, p, len);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw DataError("perceptual backend: write failed");
    }
    p += n;
    len -= static_cast<size_t>(n);
  }
}

bool read_all(int fd, void* data, size_t len) {
  char* p = static_cast<char*>(data);
  while (len > 0) {
    ssize_t n = ::read(fd, p, len);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    if (n == 0) return false;
    p += n;
    len -= static_cast<size_t>(n);
  }
  return true;
}

void put_u32(std::vector<char>& buf, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  buf.insert(buf.end(), b, b + 4);
}

std::vector<std::string> split_command(const std::string& cmd) {
  std::vector<std::string> out;
  for (const std::string& tok : split(cmd, ' '))
    if (!trim(tok).empty()) out.push_back(trim(tok));
  return out;
}

}  // namespace

ExternalPerceptualBackend::ExternalPerceptualBackend(
    const std::vector<std::string>& argv) {
  if (argv.empty()) throw ConfigError("perceptual backend: empty command");
  name_ = std::filesystem::path(argv[0]).filename().string();

  int to_child[2], from_child[2];
  if (::pipe(to_child) != 0 || ::pipe(from_child) != 0)
    throw ConfigError("perceptual backend: pipe failed");

  pid_t pid = ::fork();
  if (pid < 0) throw ConfigError("perceptual backend: fork failed");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    std::vector<char*> cargv;
    for (const std::string& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);
    ::execvp(cargv[0], cargv.data());
    _exit(127);
  }
  pid_ = pid;
  stdin_fd_ = to_child[1];
  stdout_fd_ = from_child[0];
  ::close(to_child[0]);
  ::close(from_child[1]);

  char magic[5];
  if (!read_all(stdout_fd_, magic, 5) || std::memcmp(magic, kEfpbMagic, 5) != 0) {
    shutdown();
    throw ConfigError("perceptual backend '" + name_ + "': handshake failed");
  }
}

ExternalPerceptualBackend::~ExternalPerceptualBackend() { shutdown(); }

void ExternalPerceptualBackend::shutdown() {
  if (stdin_fd_ >= 0) {
    ::close(stdin_fd_);
    stdin_fd_ = -1;
  }
  if (stdout_fd_ >= 0) {
    ::close(stdout_fd_);
    stdout_fd_ = -1;
  }
  if (pid_ > 0) {
    int status = 0;
    for (int i = 0; i < 100; ++i) {
      pid_t r = ::waitpid(static_cast<pid_t>(pid_), &status, WNOHANG);
      if (r != 0) {
        pid_ = -1;
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    ::kill(static_cast<pid_t>(pid_), SIGKILL);
    ::waitpid(static_cast<pid_t>(pid_), &status, 0);
    pid_ = -1;
  }
}

GridF ExternalPerceptualBackend::diff_map(const ImageU8& a, const ImageU8& b) {
  if (a.width != b.width || a.height != b.height)
    throw DataError("perceptual backend: dimension mismatch");
  std::vector<char> req;
  req.reserve(5 + 2 * (8 + a.rgb.size()));
  req.insert(req.end(), kEfpbMagic, kEfpbMagic + 5);
  for (const ImageU8* img : {&a, &b}) {
    put_u32(req, static_cast<std::uint32_t>(img->width));
    put_u32(req, static_cast<std::uint32_t>(img->height));
    req.insert(req.end(), img->rgb.begin(), img->rgb.end());
  }
  write_all(stdin_fd_, req.data(), req.size());

  std::uint32_t dims[2];
  if (!read_all(stdout_fd_, dims, 8))
    throw DataError("perceptual backend '" + name_ + "': truncated response");
  if (dims[0] != static_cast<std::uint32_t>(a.width) ||
      dims[1] != static_cast<std::uint32_t>(a.height))
    throw DataError("perceptual backend '" + name_ +
                    "': response dimensions disagree with request");
  std::vector<float> f(static_cast<size_t>(dims[0]) * dims[1]);
  if (!read_all(stdout_fd_, f.data(), f.size() * sizeof(float)))
    throw DataError("perceptual backend '" + name_ + "': truncated response");
  GridF out(a.width, a.height);
  for (size_t i = 0; i < f.size(); ++i) out.v[i] = static_cast<double>(f[i]);
  return out;
}

std::string ExternalPerceptualBackend::identity() const {
  return "external:" + name_;
}

std::unique_ptr<ExternalPerceptualBackend> spawn_external_backend(
    const std::string& command_line) {
  return std::make_unique<ExternalPerceptualBackend>(split_command(command_line));
}

}  // namespace editforge::diffmask
