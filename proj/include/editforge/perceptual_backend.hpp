#pragma once

#include <memory>
#include <string>
#include <vector>

#include "editforge/diffmask.hpp"

namespace editforge::diffmask {

// Wire protocol for out-of-process perceptual models, over the child's
// stdin/stdout. All integers are little-endian u32; floats are little-endian
// IEEE-754 binary32.
//
//   handshake:  child writes the 5 magic bytes "EFPB1" once at startup.
//   request:    magic "EFPB1",
//               u32 width, u32 height, width*height*3 bytes RGB8 row-major (image A),
//               u32 width, u32 height, width*height*3 bytes RGB8 row-major (image B).
//   response:   u32 width, u32 height, width*height f32 row-major difference map.
//
// Response dimensions must equal the request dimensions (the backend owns any
// internal rescaling). Requests repeat until stdin closes; the child then
// exits. One connection is owned by exactly one worker thread.
inline constexpr char kEfpbMagic[5] = {'E', 'F', 'P', 'B', '1'};

class ExternalPerceptualBackend final : public PerceptualBackend {
 public:
  // Spawns `argv` (argv[0] = executable path). Throws ConfigError when the
  // process cannot be started or fails the handshake.
  explicit ExternalPerceptualBackend(const std::vector<std::string>& argv);
  ~ExternalPerceptualBackend() override;

  ExternalPerceptualBackend(const ExternalPerceptualBackend&) = delete;
  ExternalPerceptualBackend& operator=(const ExternalPerceptualBackend&) = delete;

  GridF diff_map(const ImageU8& a, const ImageU8& b) override;
  std::string identity() const override;

 private:
  void shutdown();

  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  long pid_ = -1;
  std::string name_;
};

std::unique_ptr<ExternalPerceptualBackend> spawn_external_backend(
    const std::string& command_line);

}  // namespace editforge::diffmask
