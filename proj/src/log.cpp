#include "kanfire/log.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>

namespace kanfire::log {

namespace {

std::atomic<Level> g_level{Level::warn};
std::atomic<std::size_t> g_warnings{0};
std::mutex g_mutex;

const char* tag(Level level) {
    switch (level) {
        case Level::debug: return "debug";
        case Level::info: return "info";
        case Level::warn: return "warn";
        case Level::error: return "error";
        default: return "";
    }
}

}  // namespace

void set_level(Level level) { g_level = level; }
Level level() { return g_level; }

void write(Level lvl, std::string_view message) {
    if (lvl == Level::warn) ++g_warnings;
    if (lvl < g_level.load()) return;
    std::lock_guard lock(g_mutex);
    std::fprintf(stderr, "[kanfire] %s: %.*s\n", tag(lvl), static_cast<int>(message.size()), message.data());
}

std::size_t warning_count() { return g_warnings; }
void reset_warning_count() { g_warnings = 0; }

StageTimer::StageTimer(std::string stage) : stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}

StageTimer::~StageTimer() {
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_).count();
    info(stage_ + " finished in " + std::to_string(ms) + " ms");
}

}  // namespace kanfire::log
