// Copyright 2026 The kpsca Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

int main(int argc, char** argv) { return kpsca::cli::run(std::vector<std::string>(argv + 1, argv + argc)); }
