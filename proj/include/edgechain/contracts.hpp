#pragma once

#include <optional>
#include <string>
#include <vector>

#include "edgechain/bytes.hpp"
#include "edgechain/ledger.hpp"

namespace edgechain::contracts {

struct ContractCall {
    std::string contract;
    std::string operation;
    std::vector<Bytes> args;
    Bytes payload;
};

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    bool operator==(const GeoPoint&) const = default;
};

struct VehicleRecord {
    Pseudonym pseudonym;
    std::vector<Pseudonym> owners;
    std::vector<TimestampMs> inspection_history;
    GeoPoint gps;
    std::string connected_edge;
    std::string insurance_ref;

    bool operator==(const VehicleRecord&) const = default;

    Bytes encode() const;
    static VehicleRecord decode(ByteView data);
};

enum class IncidentKind : uint8_t {
    Accident = 0,
    Congestion = 1,
    RoadCondition = 2,
    Weather = 3,
};

const char* incident_kind_name(IncidentKind k);

/// Ledger-side incident record. The image bytes travel in the transaction
/// payload; state keeps only their hash so committed values stay small.
struct IncidentReport {
    Pseudonym reporter;
    GeoPoint gps;
    IncidentKind kind = IncidentKind::Accident;
    Hash image_hash;
    std::string zone;
    TimestampMs reported_at = 0;

    bool operator==(const IncidentReport&) const = default;

    Bytes encode() const;
    static IncidentReport decode(ByteView data);
};

enum class Priority : uint8_t { High = 0, Low = 1 };

/// Emergency-class reports rank high; record updates and queries rank low.
/// Pure function of the call, unknown contracts default to low.
Priority classify_priority(const ContractCall& call);

enum class ExecError : uint8_t {
    None = 0,
    UnknownContract,
    MalformedArgs,
    PseudonymMismatch,
    ImageHashMismatch,
    ContractRuntime,
};

const char* exec_error_name(ExecError e);

struct ExecResult {
    ExecError error = ExecError::None;
    std::string message;
    ReadWriteSet rw_set;
    Bytes query_result;  // populated by read-only operations

    bool ok() const { return error == ExecError::None; }
};

/// State key layout. Per-zone keys give incident reports conflict locality:
/// concurrent reports in one zone contend on the zone head and exercise
/// commit-time MVCC validation.
std::string key_vehicle(const Pseudonym& p);
std::string key_incident(const std::string& zone, const Hash& proposal_hash);
std::string key_zone_head(const std::string& zone);

/// Simulates the call against a read-only view of committed state and
/// returns the proposed read/write set. Never mutates state. Identical
/// call + identical state => byte-identical result.
ExecResult execute(const ContractCall& call, const Pseudonym& creator, const Hash& proposal_hash,
                   const WorldState& state);

bool contract_registered(const std::string& contract, const std::string& operation);

/// Decodes the result of a zone query back into reports.
std::vector<IncidentReport> decode_incident_list(ByteView data);

}  // namespace edgechain::contracts
