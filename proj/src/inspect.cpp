#include "edgechain/inspect.hpp"

#include <nlohmann/json.hpp>

#include "edgechain/contracts.hpp"

namespace edgechain {

using nlohmann::json;
using nlohmann::ordered_json;

std::string node_summary_json(const Chain& chain) {
    WorldState state = replay_chain(chain);
    size_t counts[4] = {0, 0, 0, 0};
    for (const Block& b : chain)
        for (Validity v : b.validity) ++counts[static_cast<size_t>(v)];
    ordered_json vehicles = json::array();
    for (const auto& [key, entry] : state.prefix("vehicle/")) {
        auto rec = contracts::VehicleRecord::decode(ByteView(entry.value));
        vehicles.push_back({{"pseudonym", rec.pseudonym.hex()},
                            {"connected_edge", rec.connected_edge},
                            {"owners", rec.owners.size()}});
    }
    std::vector<std::string> zones;
    for (const auto& [key, entry] : state.prefix("zone-head/"))
        zones.push_back(key.substr(std::string("zone-head/").size()));
    ordered_json j{
        {"height", chain.size()},
        {"tip_hash", chain.empty() ? Hash::zero().hex() : hash_header(chain.back().header).hex()},
        {"state_hash", state.state_hash().hex()},
        {"state_entries", state.size()},
        {"transactions",
         {{"valid", counts[0]},
          {"conflict_invalid", counts[1]},
          {"endorsement_invalid", counts[2]},
          {"signature_invalid", counts[3]}}},
        {"vehicles", vehicles},
        {"incidents", state.prefix("incident/").size()},
        {"zones", zones}};
    return j.dump(2);
}

}  // namespace edgechain
