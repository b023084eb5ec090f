#include "repeatr/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string_view>
#include <unordered_set>

namespace repeatr {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::MissingCell: return "MissingCell";
    case ErrorKind::DuplicateCell: return "DuplicateCell";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::RaggedRow: return "RaggedRow";
    case ErrorKind::TooFewSubjects: return "TooFewSubjects";
    case ErrorKind::TooFewSessions: return "TooFewSessions";
    case ErrorKind::DuplicateLabel: return "DuplicateLabel";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ConstantVector: return "ConstantVector";
    case ErrorKind::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorKind::DimensionError: return "DimensionError";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::SameSession: return "SameSession";
    case ErrorKind::DegenerateData: return "DegenerateData";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::EigenFailure: return "EigenFailure";
    case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

bool is_validation_error(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::DegenerateData:
    case ErrorKind::RankDeficient:
    case ErrorKind::NotPositiveDefinite:
    case ErrorKind::EigenFailure:
        return false;
    default:
        return true;
    }
}

MeasurementSet::MeasurementSet(std::vector<std::string> subject_ids,
                               std::vector<std::string> session_ids,
                               std::size_t features,
                               std::vector<double> values)
    : subject_ids_(std::move(subject_ids)),
      session_ids_(std::move(session_ids)),
      features_(features),
      values_(std::move(values)) {}

MeasurementSet MeasurementSet::checked(std::vector<std::string> subject_ids,
                                       std::vector<std::string> session_ids,
                                       std::size_t features,
                                       std::vector<double> values) {
    MeasurementSet ms(std::move(subject_ids), std::move(session_ids), features, std::move(values));
    auto problems = validate(ms);
    if (!problems.empty()) {
        throw Error(problems.front().kind, problems.front().message);
    }
    return ms;
}

MeasurementSet MeasurementSet::from_values(std::size_t subjects, std::size_t sessions,
                                           std::size_t features, std::vector<double> values) {
    std::vector<std::string> subject_ids(subjects);
    std::vector<std::string> session_ids(sessions);
    for (std::size_t i = 0; i < subjects; ++i) {
        subject_ids[i] = std::to_string(i + 1);
    }
    for (std::size_t t = 0; t < sessions; ++t) {
        session_ids[t] = std::to_string(t + 1);
    }
    return checked(std::move(subject_ids), std::move(session_ids), features, std::move(values));
}

std::span<const double> MeasurementSet::at(std::size_t subject, std::size_t session) const {
    return row(session * subjects() + subject);
}

std::span<const double> MeasurementSet::row(std::size_t index) const {
    return std::span<const double>(values_).subspan(index * features_, features_);
}

MeasurementSet MeasurementSet::select_sessions(std::span<const std::size_t> sessions) const {
    std::vector<std::string> ids;
    std::vector<double> values;
    values.reserve(sessions.size() * subjects() * features_);
    for (auto t : sessions) {
        if (t >= this->sessions()) {
            throw Error(ErrorKind::ShapeError, "session index out of range");
        }
        ids.push_back(session_ids_[t]);
        for (std::size_t i = 0; i < subjects(); ++i) {
            auto v = at(i, t);
            values.insert(values.end(), v.begin(), v.end());
        }
    }
    return MeasurementSet(subject_ids_, std::move(ids), features_, std::move(values));
}

namespace {

void check_unique(const std::vector<std::string>& ids, std::string_view what,
                  std::vector<Violation>& out) {
    std::unordered_set<std::string> seen;
    for (const auto& id : ids) {
        if (!seen.insert(id).second) {
            out.push_back({ErrorKind::DuplicateLabel,
                           std::string("duplicate ") + std::string(what) + " label '" + id + "'",
                           std::nullopt, std::nullopt, std::nullopt});
        }
    }
}

} // namespace

std::vector<Violation> validate(const MeasurementSet& ms) {
    std::vector<Violation> out;
    const auto n = ms.subjects();
    const auto s = ms.sessions();
    const auto l = ms.features();

    if (n < 2) {
        out.push_back({ErrorKind::TooFewSubjects,
                       "need at least 2 subjects, got " + std::to_string(n),
                       std::nullopt, std::nullopt, std::nullopt});
    }
    if (s < 2) {
        out.push_back({ErrorKind::TooFewSessions,
                       "need at least 2 sessions, got " + std::to_string(s),
                       std::nullopt, std::nullopt, std::nullopt});
    }
    if (l < 1) {
        out.push_back({ErrorKind::DimensionTooSmall, "feature dimension must be at least 1",
                       std::nullopt, std::nullopt, std::nullopt});
    }
    check_unique(ms.subject_ids(), "subject", out);
    check_unique(ms.session_ids(), "session", out);

    const auto values = ms.values();
    if (values.size() != n * s * l) {
        out.push_back({ErrorKind::ShapeError,
                       "expected " + std::to_string(n * s * l) + " values, got " +
                           std::to_string(values.size()),
                       std::nullopt, std::nullopt, std::nullopt});
        return out;
    }
    for (std::size_t t = 0; t < s; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < l; ++k) {
                if (!std::isfinite(values[(t * n + i) * l + k])) {
                    out.push_back({ErrorKind::NonFiniteValue,
                                   "non-finite value at (subject " + std::to_string(i + 1) +
                                       ", session " + std::to_string(t + 1) + ", feature " +
                                       std::to_string(k + 1) + ")",
                                   i, t, k});
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Long CSV
// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

// Accepts the spellings from_chars understands, including nan/inf so that
// they surface as NonFiniteValue rather than a parse failure.
std::optional<double> parse_double(std::string_view text) {
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        return std::nullopt;
    }
    return value;
}

// Labels that all parse as numbers are ordered numerically ("2" before "10"),
// anything else lexicographically.
std::vector<std::string> canonical_order(const std::set<std::string>& labels) {
    std::vector<std::string> out(labels.begin(), labels.end());
    bool numeric = std::all_of(out.begin(), out.end(),
                               [](const std::string& l) { return parse_double(l).has_value(); });
    if (numeric) {
        std::stable_sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
            return *parse_double(a) < *parse_double(b);
        });
    }
    return out;
}

} // namespace

MeasurementSet parse_measurements(std::string_view text) {
    std::vector<std::string_view> lines;
    {
        std::size_t start = 0;
        while (start <= text.size()) {
            auto nl = text.find('\n', start);
            auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
            if (!trim(line).empty()) lines.push_back(line);
            if (nl == std::string_view::npos) break;
            start = nl + 1;
        }
    }
    if (lines.empty()) {
        throw Error(ErrorKind::ParseError, "empty input: header row required");
    }

    auto header_line = lines.front();
    if (header_line.size() >= 3 && header_line.substr(0, 3) == "\xEF\xBB\xBF") {
        header_line.remove_prefix(3);
    }
    auto header = split_fields(header_line);
    if (header.size() < 3 || header[0] != "subject" || header[1] != "session") {
        throw Error(ErrorKind::ParseError,
                    "header must be 'subject,session,f1,...,fl' with at least one feature column");
    }
    const std::size_t l = header.size() - 2;

    struct Cell {
        std::vector<double> values;
        std::size_t line;
    };
    std::map<std::pair<std::string, std::string>, Cell> cells;
    std::set<std::string> subjects;
    std::set<std::string> sessions;

    for (std::size_t li = 1; li < lines.size(); ++li) {
        auto fields = split_fields(lines[li]);
        const auto line_no = li + 1;
        if (fields.size() != header.size()) {
            throw Error(ErrorKind::RaggedRow, "line " + std::to_string(line_no) + " has " +
                                                  std::to_string(fields.size()) + " fields, expected " +
                                                  std::to_string(header.size()));
        }
        std::string subject(fields[0]);
        std::string session(fields[1]);
        if (subject.empty() || session.empty()) {
            throw Error(ErrorKind::ParseError,
                        "line " + std::to_string(line_no) + ": empty subject or session label");
        }
        Cell cell{{}, line_no};
        cell.values.reserve(l);
        for (std::size_t k = 0; k < l; ++k) {
            auto v = parse_double(fields[k + 2]);
            if (!v) {
                throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) +
                                                       ": cannot parse '" + std::string(fields[k + 2]) +
                                                       "' as a number");
            }
            if (!std::isfinite(*v)) {
                throw Error(ErrorKind::NonFiniteValue,
                            "non-finite value at line " + std::to_string(line_no) + " (subject " +
                                subject + ", session " + session + ", feature " +
                                std::string(header[k + 2]) + ")");
            }
            cell.values.push_back(*v);
        }
        subjects.insert(subject);
        sessions.insert(session);
        auto [it, inserted] = cells.emplace(std::make_pair(subject, session), std::move(cell));
        if (!inserted) {
            throw Error(ErrorKind::DuplicateCell, "duplicate cell (subject " + subject + ", session " +
                                                      session + ") at lines " +
                                                      std::to_string(it->second.line) + " and " +
                                                      std::to_string(line_no));
        }
    }

    auto subject_ids = canonical_order(subjects);
    auto session_ids = canonical_order(sessions);
    if (subject_ids.size() < 2) {
        throw Error(ErrorKind::TooFewSubjects,
                    "need at least 2 subjects, got " + std::to_string(subject_ids.size()));
    }
    if (session_ids.size() < 2) {
        throw Error(ErrorKind::TooFewSessions,
                    "need at least 2 sessions, got " + std::to_string(session_ids.size()));
    }

    std::vector<double> values;
    values.reserve(subject_ids.size() * session_ids.size() * l);
    for (const auto& session : session_ids) {
        for (const auto& subject : subject_ids) {
            auto it = cells.find({subject, session});
            if (it == cells.end()) {
                throw Error(ErrorKind::MissingCell,
                            "missing cell (subject " + subject + ", session " + session + ")");
            }
            values.insert(values.end(), it->second.values.begin(), it->second.values.end());
        }
    }
    return MeasurementSet::checked(std::move(subject_ids), std::move(session_ids), l,
                                   std::move(values));
}

MeasurementSet load_measurements(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_measurements(buffer.str());
}

std::string format_measurements(const MeasurementSet& ms) {
    std::string out = "subject,session";
    for (std::size_t k = 0; k < ms.features(); ++k) {
        out += ",f" + std::to_string(k + 1);
    }
    out += '\n';
    char buf[64];
    for (std::size_t i = 0; i < ms.subjects(); ++i) {
        for (std::size_t t = 0; t < ms.sessions(); ++t) {
            out += ms.subject_ids()[i];
            out += ',';
            out += ms.session_ids()[t];
            for (double v : ms.at(i, t)) {
                auto res = std::to_chars(buf, buf + sizeof(buf), v);
                out += ',';
                out.append(buf, res.ptr);
            }
            out += '\n';
        }
    }
    return out;
}

void save_measurements(const MeasurementSet& ms, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::IoError, "cannot write '" + path.string() + "'");
    }
    out << format_measurements(ms);
}

} // namespace repeatr
