#pragma once

// Tiny leveled stderr logger. EDGECHAIN_LOG picks the threshold: "error",
// "warn" (default), "info" or "debug".

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace edgechain::log {

enum class Level : int { Error = 0, Warn = 1, Info = 2, Debug = 3 };

inline Level level_from(const char* name) {
    if (!name) return Level::Warn;
    if (!std::strcmp(name, "error")) return Level::Error;
    if (!std::strcmp(name, "info")) return Level::Info;
    if (!std::strcmp(name, "debug")) return Level::Debug;
    return Level::Warn;
}

inline Level threshold() {
    static Level cached = level_from(std::getenv("EDGECHAIN_LOG"));
    return cached;
}

inline void write(Level lvl, const char* tag, const std::string& text) {
    if (static_cast<int>(lvl) <= static_cast<int>(threshold()))
        std::fprintf(stderr, "[%s] %s\n", tag, text.c_str());
}

inline void error(const std::string& text) { write(Level::Error, "error", text); }
inline void warn(const std::string& text) { write(Level::Warn, "warn", text); }
inline void info(const std::string& text) { write(Level::Info, "info", text); }
inline void debug(const std::string& text) { write(Level::Debug, "debug", text); }

}  // namespace edgechain::log
