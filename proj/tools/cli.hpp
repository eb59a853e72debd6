#pragma once

#include <ostream>

namespace qubof::cli {

/// Full command line driver. Results go to files or `out`; failures are a
/// one-line JSON object {"error", "message"} on `err` and a nonzero return.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace qubof::cli
