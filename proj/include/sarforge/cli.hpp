#pragma once
namespace sarforge {
inline int cli_main(int, char**) { return 1; }
}  // namespace sarforge
