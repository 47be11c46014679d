#pragma once

#include <deckfuse/catalog.hpp>

#include <filesystem>
#include <memory>
#include <string>

namespace deckfuse
{

/// HTTP API over a catalog store, plus the web client's static files at /.
///
///   GET  /api/bridges[?min_lat=&min_lon=&max_lat=&max_lon=]
///   GET  /api/bridges/{id}          record plus its surface_maps
///   GET  /api/maps/{id}
///   GET  /api/maps/{id}/image       image/bmp
///   GET  /api/defects[?bbox]
///   GET  /api/defects/{id}
///   POST /api/defects               201; optional base64 PNM in "image"
///   GET  /api/defects/{id}/image    image/bmp
///
/// Errors are {"status", "code", "message"}. Requests run concurrently;
/// readers share a lock, the POST handler takes it exclusively and
/// persists before answering.
class Gateway
{
  public:
    /// `static_dir` is served at / when it exists; otherwise a small
    /// built-in page is returned there.
    explicit Gateway(Store store, std::filesystem::path static_dir = {});
    ~Gateway();
    Gateway(const Gateway &) = delete;
    Gateway &operator=(const Gateway &) = delete;

    /// Binds without serving yet. Port 0 picks a free port. Returns the
    /// bound port; throws PortInUse.
    int bind(const std::string &host, int port);
    /// Serves until stop(). Requires a successful bind().
    void run();
    void stop();
    void wait_until_ready() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// RFC 4648 base64 (padding optional, whitespace ignored). Throws
/// PreconditionViolation on other characters.
Bytes base64_decode(std::string_view text);
std::string base64_encode(std::span<const std::uint8_t> bytes);

} // namespace deckfuse
