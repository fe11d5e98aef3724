#pragma once

#include <string>

#include "edgechain/ledger.hpp"

namespace edgechain {

/// The summary a peer would report for this ledger: height, hashes,
/// per-validity transaction counts, and what lives in the world state.
std::string node_summary_json(const Chain& chain);

}  // namespace edgechain
