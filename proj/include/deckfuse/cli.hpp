#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace deckfuse
{

/// The deckfuse command line (synth, ipm, stitch, ingest, serve, query,
/// seed-demo). `args` excludes the program name. Returns 0 on success,
/// 1 on usage errors, 2 on data errors; diagnostics go to `err`.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace deckfuse
