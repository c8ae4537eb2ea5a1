#pragma once

// Augmented tuple store: standard out/rd/in plus book-kept variants
// fout/frd/fin whose distribution reuses the dispatcher's freshness rule —
// matching entries of minimum pick count first, seeded-uniform tie-break.
// Non-blocking by design: no match returns nullopt and waiting policy stays
// with the caller. One logical resource; callers on multiple execution
// contexts must serialize. Returned tuples are immutable copies.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "taskfarm/errors.hpp"
#include "taskfarm/freshness.hpp"

namespace taskfarm {

using FieldValue =
    std::variant<std::int64_t, double, std::string, std::vector<std::uint8_t>>;

enum class FieldType { Int, Real, String, Bytes };

FieldType type_of(const FieldValue& v);

// Ordered sequence of typed fields; arity >= 1.
struct Tuple {
    std::vector<FieldValue> fields;
    bool operator==(const Tuple&) const = default;
};

// Field matcher: an exact value or a typed wildcard.
struct ExactField {
    FieldValue value;
    bool operator==(const ExactField&) const = default;
};
struct WildcardField {
    FieldType type = FieldType::Int;
    bool operator==(const WildcardField&) const = default;
};
using FieldMatcher = std::variant<ExactField, WildcardField>;

// Matches tuples of equal arity with field-wise type and value agreement.
struct Pattern {
    std::vector<FieldMatcher> matchers;
    bool operator==(const Pattern&) const = default;

    bool matches(const Tuple& t) const;

    // Wildcard-everything pattern of the given arity and types.
    static Pattern any(const std::vector<FieldType>& types);
};

class TupleSpace {
  public:
    explicit TupleSpace(std::uint64_t seed);

    struct Handle {
        std::uint64_t id = 0;
        auto operator<=>(const Handle&) const = default;
    };

    // Book-kept layer. fout stores at count 0; frd picks a matching enabled
    // entry of minimum count (uniform tie-break), increments it and returns
    // a copy; fin picks the same way but removes the entry.
    Handle fout(Tuple t);
    std::optional<Tuple> frd(const Pattern& pat);
    std::optional<Tuple> fin(const Pattern& pat);

    // Excludes the entry from frd/fin until re-enabled. Idempotent; throws
    // StaleHandle after fin removed the entry.
    void disable(Handle h);

    // Resets every matching entry (disabled or not) to count 0; returns how
    // many were touched.
    std::size_t re_enable_all(const Pattern& pat);

    // Standard layer over the same store, freshness ignored: rd/in take the
    // first matching entry in insertion order.
    Handle out(Tuple t);
    std::optional<Tuple> rd(const Pattern& pat) const;
    std::optional<Tuple> in(const Pattern& pat);

    // Freshness of a live entry, for caller-side threshold policy.
    Freshness freshness_of(Handle h) const;

    std::size_t size() const;

    // One line per live entry: freshness then fields.
    std::string dump() const;

  private:
    struct Entry {
        std::uint64_t id = 0;
        Tuple tuple;
        Freshness freshness;
    };

    // Independent of the dispatcher's selection loop on purpose; only the
    // uniform_index draw contract is shared.
    std::optional<std::size_t> pick(const Pattern& pat);
    const Entry* find(Handle h) const;

    std::vector<Entry> entries_;  // insertion-ordered
    std::uint64_t next_id_ = 1;
    std::mt19937_64 rng_;
};

}  // namespace taskfarm
