#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace kpsec::cli {

std::string_view version();

// Entry point of the kpsec-sim tool. Output goes to --out, or to `out` when the
// flag is absent or "-". Errors produce one line on `err` and a nonzero status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "0.1,0.2", "0.05:0.6:0.05" (inclusive) or a mix of both.
std::vector<double> parse_real_list(std::string_view text);
// "1,2,5", "1-8" or a mix of both.
std::vector<std::size_t> parse_count_list(std::string_view text);

}  // namespace kpsec::cli
