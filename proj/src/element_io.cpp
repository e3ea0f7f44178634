#include "nctori/element_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "nctori/errors.hpp"

namespace nctori {

void write_element(std::ostream& os, const Element& u) {
  const int n = u.dim();
  std::ostringstream line;
  line << std::setprecision(17);
  for (const auto& t : u.terms()) {
    line.str("");
    for (int c : unpack(t.key, n)) line << c << ' ';
    line << t.value.real() << ' ' << t.value.imag() << '\n';
    os << line.str();
  }
}

Element read_element(std::istream& is, const ThetaPtr& theta) {
  const int n = theta->dim();
  std::vector<std::pair<Index, cplx>> terms;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    Index k(n);
    double re = 0.0, im = 0.0;
    for (int i = 0; i < n; ++i) ls >> k[i];
    ls >> re >> im;
    std::string rest;
    if (!ls || (ls >> rest))
      throw InvalidArgument("element file line " + std::to_string(lineno) + ": expected " + std::to_string(n) +
                            " integers and two reals");
    terms.emplace_back(std::move(k), cplx(re, im));
  }
  return Element::from_terms(theta, std::move(terms));
}

void save_element(const std::filesystem::path& path, const Element& u) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot write element file " + path.string());
  write_element(os, u);
}

Element load_element(const std::filesystem::path& path, const ThetaPtr& theta) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot read element file " + path.string());
  return read_element(is, theta);
}

}  // namespace nctori
