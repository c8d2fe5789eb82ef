#pragma once

#include "gridshare/harness.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridshare {

/// Malformed records file; the message carries the 1-based line number.
class RecordsFormatError : public std::runtime_error {
public:
    RecordsFormatError(std::size_t line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

/// One row per (t, node):
///   t,node,loss,constraint,violation,satisfaction,dual,generation,demand,alloc_0..alloc_{m-1}
/// where m is the largest neighborhood size. Shorter allocations leave the
/// trailing alloc fields empty.
void write_records_csv(std::ostream& out, std::span<const RoundRecord> records);
void write_records_csv(const std::filesystem::path& path, std::span<const RoundRecord> records);

/// Inverse of write_records_csv. `received` is not stored and comes back as 0.
std::vector<RoundRecord> read_records_csv(std::istream& in);
std::vector<RoundRecord> read_records_csv(const std::filesystem::path& path);

/// t, mean loss over nodes, cumulative mean loss, cumulative total violation.
void write_series_csv(const std::filesystem::path& path, std::span<const RoundRecord> records);

nlohmann::json summary_json(const RunSummary& summary);
void write_summary_json(const std::filesystem::path& path, const RunSummary& summary);

}  // namespace gridshare
