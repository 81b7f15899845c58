// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "schemakit/cli.h"
#include "schemakit/error.h"

int main(int argc, char** argv) {
    schemakit::cli::Session s;
    s.in = &std::cin;
    s.out = &std::cout;
    s.diag = &std::cerr;
    try {
        s.mode = schemakit::cli::mode_from_env();
    } catch (const schemakit::Error& e) {
        s.report(e.to_json());
        return 2;
    }
    return schemakit::cli::run_command(s, std::vector<std::string>(argv + 1, argv + argc));
}
