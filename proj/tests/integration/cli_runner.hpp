#pragma once

#include "test_support.hpp"

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <sys/wait.h>

namespace tdvim::testing {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

// Runs the built CLI with `args` (already shell-quoted where needed).
inline CliResult run_cli(const TempDir& scratch, const std::string& args) {
    static int n = 0;
    const auto out = scratch / ("cli_stdout_" + std::to_string(n));
    const auto err = scratch / ("cli_stderr_" + std::to_string(n));
    ++n;
    const std::string cmd = std::string("'") + TDVIM_CLI_PATH + "' " + args + " >'" + out.string() + "' 2>'" +
                            err.string() + "'";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    std::filesystem::remove(out);
    std::filesystem::remove(err);
    return r;
}

// Relative path -> file contents for every regular file under root.
inline std::map<std::string, std::string> tree_contents(const std::filesystem::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
        if (entry.is_regular_file()) {
            files[std::filesystem::relative(entry.path(), root).generic_string()] = slurp(entry.path());
        }
    }
    return files;
}

inline std::size_t line_count(const std::string& text) {
    std::size_t n = 0;
    for (const char c : text) {
        if (c == '\n') ++n;
    }
    return n;
}

}  // namespace tdvim::testing
