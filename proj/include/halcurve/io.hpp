#pragma once

#include <string>

namespace halcurve {

// Shortest round-trip decimal form of a double (std::to_chars). Deterministic,
// locale-free; what every CSV/JSON writer in this project uses.
std::string format_double(double v);

// Writes content to `path` via a temp file in the same directory plus an
// atomic rename, so readers never observe a partial file. Throws
// ValidationError on I/O failure.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace halcurve
