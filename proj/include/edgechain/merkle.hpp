#pragma once

#include <span>

#include "edgechain/bytes.hpp"

namespace edgechain {

/// Merkle root over the given leaves, in order.
///
/// Leaf hashes are domain-separated with a 0x00 prefix, interior nodes with
/// 0x01, so a leaf can never be confused with an interior node. An odd node
/// at any level is paired with a copy of itself. The empty list maps to the
/// all-zero sentinel; a single leaf maps to its (rehashed) leaf hash.
Hash merkle_root(std::span<const Hash> leaves);

}  // namespace edgechain
