#pragma once

#include <filesystem>
#include <string>

namespace navmorph {

// Configuration / argument problems that should surface as exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Writes content to a temp file in the target directory and renames it into
// place, so readers never observe a partial file.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

// Exclusive lock on a run directory; throws ConfigError if already held.
class DirLock {
public:
    explicit DirLock(const std::filesystem::path& dir);
    ~DirLock();
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    std::filesystem::path lock_path_;
    bool held_ = false;
};

} // namespace navmorph
