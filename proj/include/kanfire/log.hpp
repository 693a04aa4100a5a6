#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace kanfire::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

// Messages below the threshold are dropped. Default: warn.
void set_level(Level level);
Level level();

void write(Level level, std::string_view message);

inline void debug(std::string_view m) { write(Level::debug, m); }
inline void info(std::string_view m) { write(Level::info, m); }
inline void warn(std::string_view m) { write(Level::warn, m); }
inline void error(std::string_view m) { write(Level::error, m); }

// Number of warnings emitted since start (or the last reset); used by tests.
std::size_t warning_count();
void reset_warning_count();

// Logs "<stage> finished in N ms" at info level when it goes out of scope.
class StageTimer {
public:
    explicit StageTimer(std::string stage);
    ~StageTimer();
    StageTimer(const StageTimer&) = delete;
    StageTimer& operator=(const StageTimer&) = delete;

private:
    std::string stage_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace kanfire::log
