#include "edgechain/contracts.hpp"

#include <functional>
#include <map>

#include "edgechain/codec.hpp"
#include "edgechain/crypto.hpp"

namespace edgechain::contracts {

Bytes VehicleRecord::encode() const {
    Writer w;
    w.hash(pseudonym.value);
    w.u32(static_cast<uint32_t>(owners.size()));
    for (const Pseudonym& o : owners) w.hash(o.value);
    w.u32(static_cast<uint32_t>(inspection_history.size()));
    for (TimestampMs t : inspection_history) w.u64(static_cast<uint64_t>(t));
    w.f64(gps.lat);
    w.f64(gps.lon);
    w.str(connected_edge);
    w.str(insurance_ref);
    return w.take();
}

VehicleRecord VehicleRecord::decode(ByteView data) {
    Reader r(data);
    VehicleRecord rec;
    rec.pseudonym.value = r.hash();
    uint32_t n_owners = r.u32();
    for (uint32_t i = 0; i < n_owners; ++i) rec.owners.push_back(Pseudonym{r.hash()});
    uint32_t n_insp = r.u32();
    for (uint32_t i = 0; i < n_insp; ++i)
        rec.inspection_history.push_back(static_cast<TimestampMs>(r.u64()));
    rec.gps.lat = r.f64();
    rec.gps.lon = r.f64();
    rec.connected_edge = r.str();
    rec.insurance_ref = r.str();
    r.expect_done();
    return rec;
}

const char* incident_kind_name(IncidentKind k) {
    switch (k) {
        case IncidentKind::Accident: return "accident";
        case IncidentKind::Congestion: return "congestion";
        case IncidentKind::RoadCondition: return "road-condition";
        case IncidentKind::Weather: return "weather";
    }
    return "unknown";
}

Bytes IncidentReport::encode() const {
    Writer w;
    w.hash(reporter.value);
    w.f64(gps.lat);
    w.f64(gps.lon);
    w.u8(static_cast<uint8_t>(kind));
    w.hash(image_hash);
    w.str(zone);
    w.u64(static_cast<uint64_t>(reported_at));
    return w.take();
}

IncidentReport IncidentReport::decode(ByteView data) {
    Reader r(data);
    IncidentReport rep;
    rep.reporter.value = r.hash();
    rep.gps.lat = r.f64();
    rep.gps.lon = r.f64();
    rep.kind = static_cast<IncidentKind>(r.u8());
    rep.image_hash = r.hash();
    rep.zone = r.str();
    rep.reported_at = static_cast<TimestampMs>(r.u64());
    r.expect_done();
    return rep;
}

Priority classify_priority(const ContractCall& call) {
    if (call.contract == "situation" && call.operation == "report") return Priority::High;
    return Priority::Low;
}

const char* exec_error_name(ExecError e) {
    switch (e) {
        case ExecError::None: return "none";
        case ExecError::UnknownContract: return "unknown-contract";
        case ExecError::MalformedArgs: return "malformed-args";
        case ExecError::PseudonymMismatch: return "pseudonym-mismatch";
        case ExecError::ImageHashMismatch: return "image-hash-mismatch";
        case ExecError::ContractRuntime: return "contract-runtime";
    }
    return "unknown";
}

std::string key_vehicle(const Pseudonym& p) { return "vehicle/" + p.hex(); }

std::string key_incident(const std::string& zone, const Hash& proposal_hash) {
    return "incident/" + zone + "/" + proposal_hash.hex();
}

std::string key_zone_head(const std::string& zone) { return "zone-head/" + zone; }

namespace {

/// Read-recording view over committed state. Reads are deduplicated by key
/// so read sets keep distinct keys.
class StateView {
public:
    explicit StateView(const WorldState& state) : state_(state) {}

    std::optional<Bytes> get(const std::string& key) {
        auto entry = state_.get(key);
        record(key, entry ? std::optional<Version>(entry->version) : std::nullopt);
        if (!entry) return std::nullopt;
        return entry->value;
    }

    std::vector<std::pair<std::string, Bytes>> prefix(const std::string& p) {
        std::vector<std::pair<std::string, Bytes>> out;
        for (auto& [key, entry] : state_.prefix(p)) {
            record(key, entry.version);
            out.emplace_back(key, entry.value);
        }
        return out;
    }

    std::vector<ReadItem> take_reads() { return std::move(reads_); }

private:
    void record(const std::string& key, std::optional<Version> version) {
        for (const ReadItem& r : reads_)
            if (r.key == key) return;
        reads_.push_back(ReadItem{key, version});
    }

    const WorldState& state_;
    std::vector<ReadItem> reads_;
};

struct Ctx {
    StateView view;
    std::vector<WriteItem> writes;
    Bytes result;

    void put(const std::string& key, Bytes value) {
        for (WriteItem& w : writes) {
            if (w.key == key) {
                w.value = std::move(value);
                return;
            }
        }
        writes.push_back(WriteItem{key, std::move(value)});
    }
};

ExecResult fail(ExecError err, std::string message) {
    ExecResult res;
    res.error = err;
    res.message = std::move(message);
    return res;
}

ExecResult finish(Ctx& ctx) {
    ExecResult res;
    res.rw_set.reads = ctx.view.take_reads();
    res.rw_set.writes = std::move(ctx.writes);
    res.query_result = std::move(ctx.result);
    return res;
}

bool valid_gps(const GeoPoint& g) {
    return g.lat >= -90.0 && g.lat <= 90.0 && g.lon >= -180.0 && g.lon <= 180.0;
}

ExecResult vehicle_update(Ctx& ctx, const ContractCall& call, const Pseudonym& creator,
                          const Hash&) {
    if (call.args.size() != 1) return fail(ExecError::MalformedArgs, "expected 1 arg");
    VehicleRecord rec;
    try {
        rec = VehicleRecord::decode(ByteView(call.args[0].data(), call.args[0].size()));
    } catch (const CodecError& e) {
        return fail(ExecError::MalformedArgs, e.what());
    }
    if (rec.pseudonym != creator)
        return fail(ExecError::PseudonymMismatch, "caller may only update its own record");
    if (rec.owners.empty())
        return fail(ExecError::ContractRuntime, "owners must be non-empty");
    if (!valid_gps(rec.gps)) return fail(ExecError::ContractRuntime, "gps out of range");
    ctx.put(key_vehicle(rec.pseudonym), call.args[0]);
    return finish(ctx);
}

ExecResult vehicle_query(Ctx& ctx, const ContractCall& call, const Pseudonym&, const Hash&) {
    if (call.args.size() != 1 || call.args[0].size() != 32)
        return fail(ExecError::MalformedArgs, "expected a 32-byte pseudonym arg");
    Pseudonym target;
    std::memcpy(target.value.bytes.data(), call.args[0].data(), 32);
    if (auto value = ctx.view.get(key_vehicle(target))) ctx.result = *value;
    return finish(ctx);
}

ExecResult situation_report(Ctx& ctx, const ContractCall& call, const Pseudonym& creator,
                            const Hash& proposal_hash) {
    if (call.args.size() != 1) return fail(ExecError::MalformedArgs, "expected 1 arg");
    IncidentReport rep;
    try {
        rep = IncidentReport::decode(ByteView(call.args[0].data(), call.args[0].size()));
    } catch (const CodecError& e) {
        return fail(ExecError::MalformedArgs, e.what());
    }
    if (rep.reporter != creator)
        return fail(ExecError::PseudonymMismatch, "reporter must be the caller");
    if (rep.zone.empty()) return fail(ExecError::ContractRuntime, "zone must be non-empty");
    if (!valid_gps(rep.gps)) return fail(ExecError::ContractRuntime, "gps out of range");
    if (rep.image_hash != crypto::sha256(call.payload))
        return fail(ExecError::ImageHashMismatch, "image_hash does not match payload");

    // The zone-head read makes same-zone reports conflict at commit time.
    ctx.view.get(key_zone_head(rep.zone));
    ctx.put(key_incident(rep.zone, proposal_hash), call.args[0]);
    ctx.put(key_zone_head(rep.zone),
            Bytes(proposal_hash.bytes.begin(), proposal_hash.bytes.end()));
    return finish(ctx);
}

ExecResult situation_query(Ctx& ctx, const ContractCall& call, const Pseudonym&, const Hash&) {
    if (call.args.size() != 1) return fail(ExecError::MalformedArgs, "expected a zone arg");
    std::string zone = to_string(ByteView(call.args[0].data(), call.args[0].size()));
    if (zone.empty()) return fail(ExecError::MalformedArgs, "zone must be non-empty");
    ctx.view.get(key_zone_head(zone));
    auto hits = ctx.view.prefix("incident/" + zone + "/");
    Writer w;
    w.u32(static_cast<uint32_t>(hits.size()));
    for (auto& [key, value] : hits) w.bytes(value);
    ctx.result = w.take();
    return finish(ctx);
}

using ContractFn = ExecResult (*)(Ctx&, const ContractCall&, const Pseudonym&, const Hash&);

const std::map<std::pair<std::string, std::string>, ContractFn>& registry() {
    static const std::map<std::pair<std::string, std::string>, ContractFn> table = {
        {{"vehicle", "update"}, &vehicle_update},
        {{"vehicle", "query"}, &vehicle_query},
        {{"situation", "report"}, &situation_report},
        {{"situation", "query"}, &situation_query},
    };
    return table;
}

}  // namespace

bool contract_registered(const std::string& contract, const std::string& operation) {
    return registry().count({contract, operation}) > 0;
}

ExecResult execute(const ContractCall& call, const Pseudonym& creator, const Hash& proposal_hash,
                   const WorldState& state) {
    auto it = registry().find({call.contract, call.operation});
    if (it == registry().end())
        return fail(ExecError::UnknownContract, call.contract + "/" + call.operation);
    Ctx ctx{StateView(state), {}, {}};
    return it->second(ctx, call, creator, proposal_hash);
}

std::vector<IncidentReport> decode_incident_list(ByteView data) {
    Reader r(data);
    uint32_t n = r.u32();
    std::vector<IncidentReport> out;
    out.reserve(n);
    for (uint32_t i = 0; i < n; ++i) {
        Bytes item = r.bytes();
        out.push_back(IncidentReport::decode(ByteView(item.data(), item.size())));
    }
    r.expect_done();
    return out;
}

}  // namespace edgechain::contracts
