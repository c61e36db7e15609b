#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace tiager::log {

enum class Level { Error = 0, Info = 1, Debug = 2 };

inline Level level() {
    static const Level lvl = [] {
        const char* env = std::getenv("TIAGER_LOG");
        if (!env) return Level::Error;
        const std::string s(env);
        if (s == "debug") return Level::Debug;
        if (s == "info") return Level::Info;
        return Level::Error;
    }();
    return lvl;
}

inline void error(const std::string& msg) {
    std::cerr << "error: " << msg << "\n";
}

inline void info(const std::string& msg) {
    if (level() >= Level::Info) std::cerr << "info: " << msg << "\n";
}

inline void debug(const std::string& msg) {
    if (level() >= Level::Debug) std::cerr << "debug: " << msg << "\n";
}

} // namespace tiager::log
