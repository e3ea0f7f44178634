#pragma once

// Plain-text element files: one mode per line, `k_1 ... k_n re im`,
// modes in lexicographic order. Blank lines and lines starting with '#'
// are ignored on input.

#include <filesystem>
#include <iosfwd>

#include "nctori/element.hpp"

namespace nctori {

void write_element(std::ostream& os, const Element& u);
Element read_element(std::istream& is, const ThetaPtr& theta);

void save_element(const std::filesystem::path& path, const Element& u);
Element load_element(const std::filesystem::path& path, const ThetaPtr& theta);

}  // namespace nctori
