#ifndef REPEATR_CORE_HPP
#define REPEATR_CORE_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "repeatr/error.hpp"

namespace repeatr {

/**
 * Balanced panel of repeated measurements: `n` subjects, each measured in
 * `s` sessions, every measurement a vector of `l` features.
 *
 * Values are stored session-major, so the measurement of subject `i` in
 * session `t` occupies `values[(t * n + i) * l, ... + l)`. This is the same
 * order as the rows of the combined distance matrix.
 *
 * Construction does not validate; use `validate()` to collect violations or
 * `MeasurementSet::checked()` to throw on the first one. The object is
 * immutable once built.
 */
class MeasurementSet {
public:
    MeasurementSet() = default;

    MeasurementSet(std::vector<std::string> subject_ids,
                   std::vector<std::string> session_ids,
                   std::size_t features,
                   std::vector<double> values);

    /// Same as the constructor, but throws `Error` if any invariant fails.
    static MeasurementSet checked(std::vector<std::string> subject_ids,
                                  std::vector<std::string> session_ids,
                                  std::size_t features,
                                  std::vector<double> values);

    /// Panel with generated labels "1".."n" and "1".."s".
    static MeasurementSet from_values(std::size_t subjects, std::size_t sessions,
                                      std::size_t features, std::vector<double> values);

    std::size_t subjects() const noexcept { return subject_ids_.size(); }
    std::size_t sessions() const noexcept { return session_ids_.size(); }
    std::size_t features() const noexcept { return features_; }
    /// n * s, the order of the combined distance matrix.
    std::size_t measurements() const noexcept { return subjects() * sessions(); }

    /// Measurement vector of subject `subject` at session `session` (0-based).
    std::span<const double> at(std::size_t subject, std::size_t session) const;
    /// Measurement vector by combined row index `session * n + subject`.
    std::span<const double> row(std::size_t index) const;

    std::span<const double> values() const noexcept { return values_; }
    const std::vector<std::string>& subject_ids() const noexcept { return subject_ids_; }
    const std::vector<std::string>& session_ids() const noexcept { return session_ids_; }

    /// Sub-panel keeping only the listed sessions, in the given order.
    MeasurementSet select_sessions(std::span<const std::size_t> sessions) const;

    bool operator==(const MeasurementSet& other) const = default;

private:
    std::vector<std::string> subject_ids_;
    std::vector<std::string> session_ids_;
    std::size_t features_ = 0;
    std::vector<double> values_;
};

struct Violation {
    ErrorKind kind;
    std::string message;
    /// 0-based location when the violation concerns one value or cell.
    std::optional<std::size_t> subject;
    std::optional<std::size_t> session;
    std::optional<std::size_t> feature;
};

/// Every invariant violation of `ms`; empty when the panel is valid.
std::vector<Violation> validate(const MeasurementSet& ms);

/// Reads a long-format CSV (`subject,session,f1,...,fl`). Throws `Error`.
MeasurementSet load_measurements(const std::filesystem::path& path);
MeasurementSet parse_measurements(std::string_view text);

/// Writes the long-format CSV, with values printed so they reload bitwise.
void save_measurements(const MeasurementSet& ms, const std::filesystem::path& path);
std::string format_measurements(const MeasurementSet& ms);

} // namespace repeatr

#endif
