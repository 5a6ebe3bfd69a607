// Stage machine behind the seqsft binary. A run configuration names a model,
// an observable, and a list of stages; the pipeline executes the requested
// stages in canonical order, writes one artifact set per stage into the
// output directory, and finishes with a manifest recording the config hash,
// seeds, versions, and per-stage wall times.
//
// Exit codes: 0 all assertions held, 1 an assertion failed, 2 configuration
// or model construction error, 3 a computation failed after a valid setup.
#pragma once

#include <string>
#include <vector>

#include <seqsft/io.hpp>

namespace seqsft::cli {

struct RunReport {
  int exit_code = 0;
  std::vector<std::string> lines;  // one outcome line per stage or failure
};

// Executes the run described by `doc` (a parsed config document, overrides
// already applied). Artifacts land in `out_dir`, which is created if absent.
// `threads` caps worker threads in the stage computations; it changes wall
// time only, never any artifact byte. ConfigError and Error propagate to the
// caller, which owns the exception-to-exit-code mapping.
RunReport run_pipeline(const Json& doc, const std::string& out_dir, int threads);

}  // namespace seqsft::cli
