#include "kpsec/bytes.hpp"

#include <algorithm>

namespace kpsec {

bool contains(ByteView haystack, ByteView needle) {
  if (needle.empty()) return true;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
         haystack.end();
}

}  // namespace kpsec
