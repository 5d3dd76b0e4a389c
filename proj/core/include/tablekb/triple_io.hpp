#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "tablekb/fact_store.hpp"

namespace tablekb {

// One triple per line, N-Triples syntax (nulls as _:n<id>), lines sorted
// bytewise, '\n' terminated. An empty store serializes to "".
std::string serialize(const FactStore& store);

// Inverse of serialize. Blank lines and '#' comments are skipped. Throws
// ParseError("line N: ...") on malformed input.
FactStore parse_triples(std::string_view text);

void write_triples(const std::filesystem::path& path, const FactStore& store);
FactStore read_triples(const std::filesystem::path& path);

}  // namespace tablekb
