#pragma once

namespace preqsim {

/// Worker pool size: an explicit request wins, then the PREQSIM_THREADS
/// environment variable, then the OpenMP default.
int worker_count(int requested = 0);

}  // namespace preqsim
