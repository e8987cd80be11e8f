#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace relaxkv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitContract = 3;

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Reports go to files under --out; progress goes to `out`,
/// structured errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace relaxkv::cli
