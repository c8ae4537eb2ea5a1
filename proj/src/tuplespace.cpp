#include "taskfarm/tuplespace.hpp"

#include <algorithm>
#include <sstream>

namespace taskfarm {

FieldType type_of(const FieldValue& v) {
    switch (v.index()) {
        case 0: return FieldType::Int;
        case 1: return FieldType::Real;
        case 2: return FieldType::String;
        default: return FieldType::Bytes;
    }
}

bool Pattern::matches(const Tuple& t) const {
    if (matchers.size() != t.fields.size()) {
        return false;
    }
    for (std::size_t i = 0; i < matchers.size(); ++i) {
        const FieldValue& field = t.fields[i];
        if (const auto* exact = std::get_if<ExactField>(&matchers[i])) {
            if (type_of(exact->value) != type_of(field) ||
                !(exact->value == field)) {
                return false;
            }
        } else {
            if (std::get<WildcardField>(matchers[i]).type != type_of(field)) {
                return false;
            }
        }
    }
    return true;
}

Pattern Pattern::any(const std::vector<FieldType>& types) {
    Pattern p;
    p.matchers.reserve(types.size());
    for (FieldType t : types) {
        p.matchers.push_back(WildcardField{t});
    }
    return p;
}

TupleSpace::TupleSpace(std::uint64_t seed) : rng_(rng::engine(seed)) {}

TupleSpace::Handle TupleSpace::fout(Tuple t) {
    if (t.fields.empty()) {
        throw Error("tuples must have arity >= 1");
    }
    Entry e;
    e.id = next_id_++;
    e.tuple = std::move(t);
    e.freshness = Freshness::count(0);
    entries_.push_back(std::move(e));
    return Handle{entries_.back().id};
}

std::optional<std::size_t> TupleSpace::pick(const Pattern& pat) {
    std::optional<std::uint32_t> min;
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const Entry& e = entries_[i];
        if (e.freshness.is_disabled() || !pat.matches(e.tuple)) {
            continue;
        }
        std::uint32_t c = e.freshness.count_value();
        if (!min || c < *min) {
            min = c;
            candidates.clear();
            candidates.push_back(i);
        } else if (c == *min) {
            candidates.push_back(i);
        }
    }
    if (candidates.empty()) {
        return std::nullopt;
    }
    return candidates[rng::uniform_index(rng_, candidates.size())];
}

std::optional<Tuple> TupleSpace::frd(const Pattern& pat) {
    std::optional<std::size_t> i = pick(pat);
    if (!i) {
        return std::nullopt;
    }
    entries_[*i].freshness.increment();
    return entries_[*i].tuple;
}

std::optional<Tuple> TupleSpace::fin(const Pattern& pat) {
    std::optional<std::size_t> i = pick(pat);
    if (!i) {
        return std::nullopt;
    }
    Tuple taken = std::move(entries_[*i].tuple);
    entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(*i));
    return taken;
}

void TupleSpace::disable(Handle h) {
    for (Entry& e : entries_) {
        if (e.id == h.id) {
            e.freshness = Freshness::disabled();
            return;
        }
    }
    throw StaleHandle("entry " + std::to_string(h.id) + " no longer exists");
}

std::size_t TupleSpace::re_enable_all(const Pattern& pat) {
    std::size_t touched = 0;
    for (Entry& e : entries_) {
        if (pat.matches(e.tuple)) {
            e.freshness = Freshness::count(0);
            ++touched;
        }
    }
    return touched;
}

TupleSpace::Handle TupleSpace::out(Tuple t) { return fout(std::move(t)); }

std::optional<Tuple> TupleSpace::rd(const Pattern& pat) const {
    for (const Entry& e : entries_) {
        if (pat.matches(e.tuple)) {
            return e.tuple;
        }
    }
    return std::nullopt;
}

std::optional<Tuple> TupleSpace::in(const Pattern& pat) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (pat.matches(entries_[i].tuple)) {
            Tuple taken = std::move(entries_[i].tuple);
            entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(i));
            return taken;
        }
    }
    return std::nullopt;
}

const TupleSpace::Entry* TupleSpace::find(Handle h) const {
    for (const Entry& e : entries_) {
        if (e.id == h.id) {
            return &e;
        }
    }
    return nullptr;
}

Freshness TupleSpace::freshness_of(Handle h) const {
    const Entry* e = find(h);
    if (e == nullptr) {
        throw StaleHandle("entry " + std::to_string(h.id) + " no longer exists");
    }
    return e->freshness;
}

std::size_t TupleSpace::size() const { return entries_.size(); }

std::string TupleSpace::dump() const {
    std::ostringstream os;
    for (const Entry& e : entries_) {
        if (e.freshness.is_disabled()) {
            os << "disabled";
        } else {
            os << "count=" << e.freshness.count_value();
        }
        for (const FieldValue& f : e.tuple.fields) {
            os << ' ';
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, std::int64_t>) {
                        os << "int:" << v;
                    } else if constexpr (std::is_same_v<T, double>) {
                        os << "real:" << v;
                    } else if constexpr (std::is_same_v<T, std::string>) {
                        os << "str:\"" << v << '"';
                    } else {
                        os << "bytes[" << v.size() << ']';
                    }
                },
                f);
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace taskfarm
