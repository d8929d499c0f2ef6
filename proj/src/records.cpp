#include "editforge/records.hpp"

#include <sstream>

namespace editforge {

std::string render_chain_header(const ChainHeader& h) {
  std::ostringstream os;
  os << "[category=" << to_string(h.category) << ", scope=" << to_string(h.scope)
     << ", difficulty=" << to_string(h.difficulty)
     << ", source=" << to_string(h.source) << "]";
  return os.str();
}

std::string ReasoningChain::render() const {
  std::ostringstream os;
  os << render_chain_header(header) << "\n";
  for (size_t i = 0; i < steps.size(); ++i) os << steps[i] << "\n";
  return os.str();
}

}  // namespace editforge
