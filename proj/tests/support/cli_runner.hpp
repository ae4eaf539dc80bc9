#pragma once

#include <sys/wait.h>

#include <cstdio>
#include <string>

namespace chordlab::testing {

struct CmdResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

#ifndef CHORDLAB_BIN_PATH
#define CHORDLAB_BIN_PATH "chordlab"
#endif

// Runs the CLI through the shell; `env_prefix` may carry VAR=value pairs.
inline CmdResult run_cli(const std::string& args, const std::string& env_prefix = "") {
    const std::string cmd = env_prefix + " " + CHORDLAB_BIN_PATH + " " + args + " 2>&1";
    CmdResult result;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) return result;
    char buf[4096];
    std::size_t n;
    while ((n = ::fread(buf, 1, sizeof buf, pipe)) > 0) result.output.append(buf, n);
    const int status = ::pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

}  // namespace chordlab::testing
