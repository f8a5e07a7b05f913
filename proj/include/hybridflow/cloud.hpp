#pragma once

// Hybrid resource pool: owned private capacity at zero marginal cost and
// public instances billed per started quantum.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "common.hpp"

namespace hybridflow {

enum class Venue { private_cloud, public_cloud };

inline std::string_view to_string(Venue v) { return v == Venue::private_cloud ? "private" : "public"; }

inline Venue parse_venue(std::string_view s) {
    if (s == "private") return Venue::private_cloud;
    if (s == "public") return Venue::public_cloud;
    throw Error(ErrorKind::config, "venue must be 'private' or 'public'", std::string(s));
}

struct InstanceType {
    std::string name;
    Venue venue = Venue::private_cloud;
    int cores = 1;
    double speed_factor = 1.0;        // work units per second, per task
    double price_per_quantum = 0.0;
    std::optional<int> capacity_limit;

    bool is_public() const noexcept { return venue == Venue::public_cloud; }
    bool operator==(InstanceType const &) const = default;
};

using Catalog = std::vector<InstanceType>;

struct PricingPolicy {
    std::int64_t quantum_seconds = 3600;
    std::int64_t min_quanta = 1;
};

inline void validate_policy(PricingPolicy const & p) {
    if (p.quantum_seconds <= 0) throw Error(ErrorKind::config, "quantum_seconds must be positive");
    if (p.min_quanta <= 0) throw Error(ErrorKind::config, "min_quanta must be positive");
}

inline void validate_catalog(Catalog const & catalog) {
    if (catalog.empty()) throw Error(ErrorKind::config, "catalog is empty");
    std::set<std::string> names;
    for (auto const & t : catalog) {
        if (t.name.empty() || t.name.find_first_of(" \t\r\n") != std::string::npos) {
            throw Error(ErrorKind::config, "instance type name must be non-empty without whitespace", t.name);
        }
        if (!names.insert(t.name).second) throw Error(ErrorKind::config, "duplicate instance type", t.name);
        if (t.cores < 1) throw Error(ErrorKind::config, "cores must be positive", t.name);
        if (!(t.speed_factor > 0.0)) throw Error(ErrorKind::config, "speed_factor must be positive", t.name);
        if (!(t.price_per_quantum >= 0.0)) throw Error(ErrorKind::config, "price must be non-negative", t.name);
        if (t.venue == Venue::private_cloud && t.price_per_quantum != 0.0) {
            throw Error(ErrorKind::config, "private instance types cost nothing", t.name);
        }
        if (t.capacity_limit && *t.capacity_limit < 1) {
            throw Error(ErrorKind::config, "capacity_limit must be positive", t.name);
        }
    }
}

inline InstanceType const & find_type(Catalog const & catalog, std::string_view name) {
    for (auto const & t : catalog) if (t.name == name) return t;
    throw Error(ErrorKind::not_found, "unknown instance type", std::string(name));
}

// Private side mirrors 48 owned VMs of 2 or 4 cores; public side is 25 large
// instances plus a cheaper, slower type to downgrade to. Speeds and prices
// are modeling defaults (prices in cents per hour).
inline Catalog default_catalog() {
    return {
        {"private-2core", Venue::private_cloud, 2, 1.0, 0.0, 24},
        {"private-4core", Venue::private_cloud, 4, 1.0, 0.0, 24},
        {"public-large", Venue::public_cloud, 2, 1.5, 32.0, 25},
        {"public-small", Venue::public_cloud, 2, 0.75, 12.0, 25},
    };
}

// max(min_quanta, ceil(duration / quantum))
inline std::int64_t billed_quanta(double duration, PricingPolicy const & policy) {
    auto q = static_cast<std::int64_t>(std::ceil(duration / static_cast<double>(policy.quantum_seconds)));
    return std::max(policy.min_quanta, q);
}

inline double span_cost(InstanceType const & type, double duration, PricingPolicy const & policy) {
    if (!type.is_public()) return 0.0;
    return type.price_per_quantum * static_cast<double>(billed_quanta(duration, policy));
}

struct Machine {
    int id = 0;
    InstanceType type;
    double lease_start = 0.0;
    std::optional<double> lease_end;
};

inline double lease_cost(Machine const & m, PricingPolicy const & policy) {
    if (!m.lease_end) throw Error(ErrorKind::runtime, "lease is still open", std::to_string(m.id));
    return span_cost(m.type, *m.lease_end - m.lease_start, policy);
}

class ResourcePool {
public:
    explicit ResourcePool(Catalog catalog) : catalog_(std::move(catalog)) { validate_catalog(catalog_); }

    Catalog const & catalog() const noexcept { return catalog_; }
    std::vector<Machine> const & active() const noexcept { return active_; }
    std::vector<Machine> const & released() const noexcept { return released_; }
    int next_id() const noexcept { return next_id_; }

    int active_count(std::string_view type_name) const {
        return static_cast<int>(std::count_if(active_.begin(), active_.end(),
                                              [&](Machine const & m) { return m.type.name == type_name; }));
    }

    bool can_provision(std::string_view type_name) const {
        auto const & t = find_type(catalog_, type_name);
        return !t.capacity_limit || active_count(type_name) < *t.capacity_limit;
    }

    Machine provision(std::string_view type_name, double now) {
        auto const & t = find_type(catalog_, type_name);
        if (!can_provision(type_name)) throw Error(ErrorKind::capacity, "capacity exhausted", t.name);
        active_.push_back({next_id_++, t, now, std::nullopt});
        return active_.back();
    }

    Machine release(int machine_id, double now) {
        auto it = std::find_if(active_.begin(), active_.end(), [&](Machine const & m) { return m.id == machine_id; });
        if (it == active_.end()) throw Error(ErrorKind::not_found, "machine is not active", std::to_string(machine_id));
        if (now < it->lease_start) throw Error(ErrorKind::runtime, "release before lease start", std::to_string(machine_id));
        it->lease_end = now;
        released_.push_back(*it);
        active_.erase(it);
        return released_.back();
    }

    // Active or released machine by id.
    Machine const & find(int machine_id) const {
        for (auto const * list : {&active_, &released_}) {
            for (auto const & m : *list) if (m.id == machine_id) return m;
        }
        throw Error(ErrorKind::not_found, "unknown machine", std::to_string(machine_id));
    }

    double total_cost(PricingPolicy const & policy) const {
        double sum = 0.0;
        for (auto const & m : released_) sum += lease_cost(m, policy);
        return sum;
    }

    // Cost if every active lease were closed at `now`.
    double cost_as_of(double now, PricingPolicy const & policy) const {
        double sum = total_cost(policy);
        for (auto const & m : active_) sum += span_cost(m.type, now - m.lease_start, policy);
        return sum;
    }

    std::map<std::string, int> active_by_type() const {
        std::map<std::string, int> out;
        for (auto const & m : active_) ++out[m.type.name];
        return out;
    }

private:
    Catalog catalog_;
    std::vector<Machine> active_;
    std::vector<Machine> released_;
    int next_id_ = 0;
};

} // namespace hybridflow
