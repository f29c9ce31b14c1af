// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <doctest.h>

#include "asynppg/errors.hpp"
#include "asynppg/textio.hpp"

using namespace asynppg;

TEST_CASE("format_double round-trips bit-exactly through strtod") {
    const double values[] = {0.0,    1.0,     -1.0,   0.5,
                             0.1,    1.0 / 3, 1e300,  5e-324,
                             -2.5e-7, 179.1,  6.789154, -1151.071980};
    for (double v : values) {
        const std::string s = format_double(v);
        char* end = nullptr;
        const double back = std::strtod(s.c_str(), &end);
        CHECK(*end == '\0');
        CHECK(back == v);
    }
}

TEST_CASE("format_double emits shortest representations") {
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(-2.5) == "-2.5");
    CHECK(format_double(1e300) == "1e+300");
    CHECK(format_double(179.1) == "179.1");
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("csv_row emits one newline-terminated line") {
    CHECK(csv_row({"a", "b", "c"}) == "a,b,c\n");
    CHECK(csv_row({"solo"}) == "solo\n");
    CHECK(csv_row({}) == "\n");
}

TEST_CASE("write_file then read_file round-trips content") {
    const auto path =
        (std::filesystem::temp_directory_path() / "asynppg_textio_roundtrip.txt").string();
    const std::string content = "line one\nline two\n";
    write_file(path, content);
    CHECK(read_file(path) == content);
    std::filesystem::remove(path);
}

TEST_CASE("read_file on a missing path reports an io error") {
    bool threw = false;
    try {
        read_file("/nonexistent/asynppg/nope.txt");
    } catch (const Error& e) {
        threw = true;
        CHECK(e.code() == ErrorCode::IoError);
    }
    CHECK(threw);
}
