#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>

#include <unistd.h>

namespace deckfuse::testing
{

// Fresh directory under $DECKFUSE_TEST_TMP (or the system temp dir),
// removed again on destruction.
class TempDir
{
  public:
    explicit TempDir(const std::string &name)
    {
        const char *base = std::getenv("DECKFUSE_TEST_TMP");
        path_ = (base ? std::filesystem::path(base) : std::filesystem::temp_directory_path()) /
                ("deckfuse-" + name + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    const std::filesystem::path &path() const { return path_; }
    std::filesystem::path operator/(const std::string &child) const { return path_ / child; }

  private:
    static int &counter()
    {
        static int n = 0;
        return n;
    }
    std::filesystem::path path_;
};

} // namespace deckfuse::testing
