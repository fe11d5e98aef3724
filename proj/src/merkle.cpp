#include "edgechain/merkle.hpp"

#include <vector>

#include "edgechain/crypto.hpp"

namespace edgechain {

namespace {

Hash hash_leaf(const Hash& leaf) {
    Bytes buf;
    buf.reserve(33);
    buf.push_back(0x00);
    buf.insert(buf.end(), leaf.bytes.begin(), leaf.bytes.end());
    return crypto::sha256(buf);
}

Hash hash_interior(const Hash& left, const Hash& right) {
    Bytes buf;
    buf.reserve(65);
    buf.push_back(0x01);
    buf.insert(buf.end(), left.bytes.begin(), left.bytes.end());
    buf.insert(buf.end(), right.bytes.begin(), right.bytes.end());
    return crypto::sha256(buf);
}

}  // namespace

Hash merkle_root(std::span<const Hash> leaves) {
    if (leaves.empty()) return Hash::zero();

    std::vector<Hash> level;
    level.reserve(leaves.size());
    for (const Hash& leaf : leaves) level.push_back(hash_leaf(leaf));

    while (level.size() > 1) {
        std::vector<Hash> next;
        next.reserve((level.size() + 1) / 2);
        for (size_t i = 0; i < level.size(); i += 2) {
            const Hash& left = level[i];
            const Hash& right = (i + 1 < level.size()) ? level[i + 1] : level[i];
            next.push_back(hash_interior(left, right));
        }
        level = std::move(next);
    }
    return level.front();
}

}  // namespace edgechain
