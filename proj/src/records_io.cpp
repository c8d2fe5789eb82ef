#include "gridshare/records_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace gridshare {

namespace {

constexpr const char* kFixedColumns[] = {"t",            "node", "loss",       "constraint", "violation",
                                         "satisfaction", "dual", "generation", "demand"};
constexpr std::size_t kFixed = std::size(kFixedColumns);

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_double(const std::string& field, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw RecordsFormatError(line, "not a number: '" + field + "'");
    }
    return v;
}

std::size_t parse_index(const std::string& field, std::size_t line) {
    std::size_t v = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw RecordsFormatError(line, "not a non-negative integer: '" + field + "'");
    }
    return v;
}

std::ofstream open_for_writing(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_records_csv(std::ostream& out, std::span<const RoundRecord> records) {
    std::size_t width = 0;
    for (const auto& rec : records)
        for (const auto& a : rec.agents) width = std::max(width, static_cast<std::size_t>(a.allocation.size()));

    for (std::size_t c = 0; c < kFixed; ++c) out << (c ? "," : "") << kFixedColumns[c];
    for (std::size_t k = 0; k < width; ++k) out << ",alloc_" << k;
    out << '\n';

    for (const auto& rec : records) {
        for (std::size_t i = 0; i < rec.agents.size(); ++i) {
            const AgentRound& a = rec.agents[i];
            out << rec.t << ',' << i << ',' << format_double(a.loss) << ',' << format_double(a.constraint) << ','
                << format_double(a.violation) << ',' << format_double(a.satisfaction) << ','
                << format_double(a.dual) << ',' << format_double(a.generation) << ',' << format_double(a.demand);
            for (std::size_t k = 0; k < width; ++k) {
                out << ',';
                if (k < static_cast<std::size_t>(a.allocation.size()))
                    out << format_double(a.allocation[static_cast<Eigen::Index>(k)]);
            }
            out << '\n';
        }
    }
}

void write_records_csv(const std::filesystem::path& path, std::span<const RoundRecord> records) {
    auto out = open_for_writing(path);
    write_records_csv(out, records);
}

std::vector<RoundRecord> read_records_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw RecordsFormatError(1, "missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split(line);
    if (header.size() < kFixed) throw RecordsFormatError(1, "header has too few columns");
    for (std::size_t c = 0; c < kFixed; ++c) {
        if (header[c] != kFixedColumns[c]) {
            throw RecordsFormatError(1, "expected column '" + std::string(kFixedColumns[c]) + "', got '" + header[c] + "'");
        }
    }
    for (std::size_t c = kFixed; c < header.size(); ++c) {
        if (header[c] != "alloc_" + std::to_string(c - kFixed)) {
            throw RecordsFormatError(1, "unexpected column '" + header[c] + "'");
        }
    }

    std::vector<RoundRecord> records;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != header.size()) {
            throw RecordsFormatError(lineno, "expected " + std::to_string(header.size()) + " fields, got " +
                                                 std::to_string(f.size()));
        }
        const std::size_t t = parse_index(f[0], lineno);
        const std::size_t node = parse_index(f[1], lineno);
        if (records.empty() || records.back().t != t) {
            if (!records.empty() && t <= records.back().t) throw RecordsFormatError(lineno, "rounds out of order");
            records.push_back(RoundRecord{t, {}});
        }
        auto& agents = records.back().agents;
        if (node != agents.size()) throw RecordsFormatError(lineno, "nodes must be listed as 0..N-1 within a round");
        AgentRound a;
        a.loss = parse_double(f[2], lineno);
        a.constraint = parse_double(f[3], lineno);
        a.violation = parse_double(f[4], lineno);
        a.satisfaction = parse_double(f[5], lineno);
        a.dual = parse_double(f[6], lineno);
        a.generation = parse_double(f[7], lineno);
        a.demand = parse_double(f[8], lineno);
        std::vector<double> alloc;
        bool ended = false;
        for (std::size_t c = kFixed; c < f.size(); ++c) {
            if (f[c].empty()) {
                ended = true;
                continue;
            }
            if (ended) throw RecordsFormatError(lineno, "allocation has a gap");
            alloc.push_back(parse_double(f[c], lineno));
        }
        a.allocation = Eigen::Map<const Eigen::VectorXd>(alloc.data(), static_cast<Eigen::Index>(alloc.size()));
        agents.push_back(std::move(a));
    }
    for (const auto& rec : records) {
        if (rec.agents.size() != records.front().agents.size()) {
            throw RecordsFormatError(lineno, "round " + std::to_string(rec.t) + " has a different node count");
        }
    }
    return records;
}

std::vector<RoundRecord> read_records_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return read_records_csv(in);
}

void write_series_csv(const std::filesystem::path& path, std::span<const RoundRecord> records) {
    auto out = open_for_writing(path);
    out << "t,mean_loss,cumulative_mean_loss,cumulative_violation\n";
    double cum_loss = 0.0, cum_violation = 0.0;
    for (const auto& rec : records) {
        double loss = 0.0;
        for (const auto& a : rec.agents) {
            loss += a.loss;
            cum_violation += a.violation;
        }
        loss /= static_cast<double>(std::max<std::size_t>(rec.agents.size(), 1));
        cum_loss += loss;
        out << rec.t << ',' << format_double(loss) << ',' << format_double(cum_loss) << ','
            << format_double(cum_violation) << '\n';
    }
}

nlohmann::json summary_json(const RunSummary& s) {
    nlohmann::json nodes = nlohmann::json::array();
    for (std::size_t i = 0; i < s.nodes.size(); ++i) {
        const NodeSummary& n = s.nodes[i];
        nlohmann::json j = {{"node", i},
                            {"cumulative_loss", n.cumulative_loss},
                            {"violation", n.violation},
                            {"final_ratio", n.final_ratio},
                            {"baseline_ratio", n.baseline_ratio}};
        if (n.dynamic_regret) j["dynamic_regret"] = *n.dynamic_regret;
        if (n.static_regret) j["static_regret"] = *n.static_regret;
        if (n.path_length) j["path_length"] = *n.path_length;
        nodes.push_back(std::move(j));
    }
    return {{"algorithm", s.algorithm},
            {"horizon", s.horizon},
            {"seed", s.seed},
            {"mean_cumulative_loss", s.mean_cumulative_loss},
            {"total_cumulative_loss", s.total_cumulative_loss},
            {"total_violation", s.total_violation},
            {"wall_clock_seconds", s.wall_clock_seconds},
            {"nodes", std::move(nodes)}};
}

void write_summary_json(const std::filesystem::path& path, const RunSummary& summary) {
    auto out = open_for_writing(path);
    out << summary_json(summary).dump(2) << '\n';
}

}  // namespace gridshare
