#pragma once

#include <iosfwd>

namespace cubify {

// Entry point of the `cubify` tool: render-gt, eval, iou and decode
// subcommands. Returns 0 on success, 1 on usage or validation errors, 2 on
// I/O errors.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cubify
