#include "gridshare/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace gridshare {

using nlohmann::json;

std::optional<Algorithm> parse_algorithm(std::string_view name) {
    if (name == "drs") return Algorithm::Drs;
    if (name == "drs-adj") return Algorithm::DrsAdjusted;
    if (name == "mansdrs") return Algorithm::MaNsdrs;
    if (name == "mansdrs-adj") return Algorithm::MaNsdrsAdjusted;
    if (name == "bansap") return Algorithm::BanSaP;
    return std::nullopt;
}

std::string_view to_string(Algorithm a) {
    switch (a) {
    case Algorithm::Drs: return "drs";
    case Algorithm::DrsAdjusted: return "drs-adj";
    case Algorithm::MaNsdrs: return "mansdrs";
    case Algorithm::MaNsdrsAdjusted: return "mansdrs-adj";
    case Algorithm::BanSaP: return "bansap";
    }
    return "?";
}

bool uses_adjustment(Algorithm a) { return a == Algorithm::DrsAdjusted || a == Algorithm::MaNsdrsAdjusted; }
bool uses_ensemble(Algorithm a) { return a == Algorithm::MaNsdrs || a == Algorithm::MaNsdrsAdjusted; }

NetworkGraph GraphSource::build() const {
    if (positions) return NetworkGraph::from_positions(*positions, threshold);
    return NetworkGraph::from_edges(nodes, edges);
}

namespace {

void check_keys(const json& obj, const std::string& section, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) throw ConfigError(section, "expected an object");
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError(section + "." + key, "unknown key");
        }
    }
}

template <typename T>
T get(const json& obj, const std::string& key, const std::string& field) {
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(field, obj.contains(key) ? "wrong type" : "missing");
    }
}

template <typename T>
T get_or(const json& obj, const std::string& key, const std::string& field, T fallback) {
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    return get<T>(obj, key, field);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

GraphSource parse_graph(const json& g, const std::filesystem::path& base, std::vector<DiscountSpec>& discounts) {
    check_keys(g, "graph", {"nodes", "edges", "edges_file", "positions", "positions_file", "threshold", "discounts"});
    GraphSource src;
    const bool by_pos = g.contains("positions") || g.contains("positions_file");
    const bool by_edge = g.contains("edges") || g.contains("edges_file");
    if (by_pos == by_edge) throw ConfigError("graph", "give exactly one of positions/positions_file or edges/edges_file");
    if (by_pos) {
        if (g.contains("positions")) {
            std::vector<Point2> pts;
            for (const auto& p : g.at("positions")) {
                if (!p.is_array() || p.size() != 2) throw ConfigError("graph.positions", "expected [x, y] pairs");
                pts.push_back(Point2{p[0].get<double>(), p[1].get<double>()});
            }
            src.positions = std::move(pts);
        } else {
            try {
                src.positions = read_positions_csv(resolve(base, get<std::string>(g, "positions_file", "graph.positions_file")));
            } catch (const std::exception& e) {
                throw ConfigError("graph.positions_file", e.what());
            }
        }
        src.threshold = get<double>(g, "threshold", "graph.threshold");
        src.nodes = src.positions->size();
    } else {
        if (g.contains("edges")) {
            for (const auto& e : g.at("edges")) {
                if (!e.is_array() || e.size() != 2) throw ConfigError("graph.edges", "expected [i, j] pairs");
                const auto i = e[0].get<long long>();
                const auto j = e[1].get<long long>();
                if (i < 0 || j < 0) throw ConfigError("graph.edges", "node ids must be >= 0");
                src.edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
            }
        } else {
            try {
                src.edges = read_edge_list(resolve(base, get<std::string>(g, "edges_file", "graph.edges_file")));
            } catch (const std::exception& e) {
                throw ConfigError("graph.edges_file", e.what());
            }
        }
        src.nodes = get<std::size_t>(g, "nodes", "graph.nodes");
    }
    if (g.contains("discounts")) {
        for (const auto& d : g.at("discounts")) {
            check_keys(d, "graph.discounts[]", {"i", "j", "c"});
            discounts.push_back(DiscountSpec{get<std::size_t>(d, "i", "graph.discounts.i"),
                                             get<std::size_t>(d, "j", "graph.discounts.j"),
                                             get<double>(d, "c", "graph.discounts.c")});
        }
    }
    return src;
}

GenerationSpec parse_generation(const json& g) {
    check_keys(g, "generation",
               {"kind", "means", "spread", "segments", "cycle", "mean_sets", "change_every", "amplitude", "period"});
    GenerationSpec spec;
    const auto kind = get<std::string>(g, "kind", "generation.kind");
    spec.spread = get_or<double>(g, "spread", "generation.spread", 0.0);
    if (kind == "constant" || kind == "iid-uniform" || kind == "drifting-mean") {
        spec.kind = kind == "constant"      ? GenerationKind::Constant
                    : kind == "iid-uniform" ? GenerationKind::IidUniform
                                            : GenerationKind::DriftingMean;
        spec.means = get<std::vector<double>>(g, "means", "generation.means");
        if (kind == "constant" && spec.spread != 0.0) throw ConfigError("generation.spread", "constant generation has no spread");
        if (spec.kind == GenerationKind::DriftingMean) {
            spec.drift_amplitude = get<double>(g, "amplitude", "generation.amplitude");
            spec.drift_period = get<double>(g, "period", "generation.period");
        }
    } else if (kind == "piecewise-stationary") {
        spec.kind = GenerationKind::PiecewiseStationary;
        if (g.contains("segments")) {
            for (const auto& s : g.at("segments")) {
                check_keys(s, "generation.segments[]", {"start", "means"});
                spec.segments.push_back(MeanSegment{get<std::size_t>(s, "start", "generation.segments.start"),
                                                    get<std::vector<double>>(s, "means", "generation.segments.means")});
            }
            spec.cycle = get_or<std::size_t>(g, "cycle", "generation.cycle", 0);
        } else {
            const auto sets = get<std::vector<std::vector<double>>>(g, "mean_sets", "generation.mean_sets");
            const auto every = get<std::size_t>(g, "change_every", "generation.change_every");
            if (every == 0) throw ConfigError("generation.change_every", "must be >= 1");
            if (sets.empty()) throw ConfigError("generation.mean_sets", "must not be empty");
            for (std::size_t k = 0; k < sets.size(); ++k) spec.segments.push_back(MeanSegment{1 + k * every, sets[k]});
            spec.cycle = every * sets.size();
        }
    } else {
        throw ConfigError("generation.kind", "unknown kind '" + kind + "'");
    }
    return spec;
}

DemandSpec parse_demand(const json& d, const std::filesystem::path& base) {
    check_keys(d, "demand", {"kind", "values", "file"});
    DemandSpec spec;
    const auto kind = get<std::string>(d, "kind", "demand.kind");
    if (kind == "balanced") {
        spec.kind = DemandKind::Balanced;
    } else if (kind == "explicit") {
        spec.kind = DemandKind::Explicit;
        if (d.contains("values") == d.contains("file")) throw ConfigError("demand", "explicit demand needs exactly one of values/file");
        if (d.contains("values")) spec.values = get<std::vector<double>>(d, "values", "demand.values");
        else spec.file = resolve(base, get<std::string>(d, "file", "demand.file"));
    } else {
        throw ConfigError("demand.kind", "unknown kind '" + kind + "'");
    }
    return spec;
}

AlgorithmSettings parse_algorithm_section(const json& a) {
    check_keys(a, "algorithm", {"name", "horizon", "seed", "path_length", "adjust_mode", "constant_delta",
                                "meta_rate", "experts", "bansap_freeze"});
    AlgorithmSettings s;
    const auto name = get<std::string>(a, "name", "algorithm.name");
    const auto algo = parse_algorithm(name);
    if (!algo) throw ConfigError("algorithm.name", "unknown algorithm '" + name + "'");
    s.algorithm = *algo;
    s.horizon = get_or<std::size_t>(a, "horizon", "algorithm.horizon", s.horizon);
    s.seed = get_or<std::uint64_t>(a, "seed", "algorithm.seed", s.seed);
    s.path_length = get_or<double>(a, "path_length", "algorithm.path_length", 0.0);
    const auto mode = get_or<std::string>(a, "adjust_mode", "algorithm.adjust_mode", "proportional");
    if (mode == "proportional") s.adjust_mode = AdjustMode::Proportional;
    else if (mode == "single-coordinate") s.adjust_mode = AdjustMode::SingleCoordinate;
    else throw ConfigError("algorithm.adjust_mode", "expected proportional or single-coordinate");
    s.constant_delta = get_or<bool>(a, "constant_delta", "algorithm.constant_delta", false);
    if (a.contains("meta_rate") && !a.at("meta_rate").is_null()) s.meta_rate = get<double>(a, "meta_rate", "algorithm.meta_rate");
    if (a.contains("experts") && !a.at("experts").is_null()) s.experts = get<std::size_t>(a, "experts", "algorithm.experts");
    s.bansap_freeze = get_or<double>(a, "bansap_freeze", "algorithm.bansap_freeze", 0.5);
    return s;
}

ConstantOverrides parse_constants(const json& c) {
    check_keys(c, "constants", {"F", "G", "L", "R", "r", "x_max"});
    ConstantOverrides o;
    auto opt = [&](const char* key, std::optional<double>& dst) {
        if (c.contains(key) && !c.at(key).is_null()) dst = get<double>(c, key, std::string("constants.") + key);
    };
    opt("F", o.loss_bound);
    opt("G", o.constraint_bound);
    opt("L", o.lipschitz);
    opt("R", o.outer_radius);
    opt("r", o.inner_radius);
    if (c.contains("x_max") && !c.at("x_max").is_null()) {
        const auto& v = c.at("x_max");
        if (v.is_number()) o.box_upper = std::vector<double>{v.get<double>()};
        else o.box_upper = get<std::vector<double>>(c, "x_max", "constants.x_max");
    }
    return o;
}

OutputSettings parse_output(const json& o, const std::filesystem::path& base) {
    check_keys(o, "output", {"dir", "records", "summary", "series", "comparators", "with_oracle", "oracle_tolerance",
                             "satisfaction_window"});
    OutputSettings s;
    s.dir = resolve(base, get_or<std::string>(o, "dir", "output.dir", "out"));
    s.records = get_or<std::string>(o, "records", "output.records", s.records);
    s.summary = get_or<std::string>(o, "summary", "output.summary", s.summary);
    s.series = get_or<std::string>(o, "series", "output.series", s.series);
    s.comparators = get_or<std::string>(o, "comparators", "output.comparators", s.comparators);
    s.with_oracle = get_or<bool>(o, "with_oracle", "output.with_oracle", false);
    s.oracle_tolerance = get_or<double>(o, "oracle_tolerance", "output.oracle_tolerance", s.oracle_tolerance);
    s.satisfaction_window = get_or<std::size_t>(o, "satisfaction_window", "output.satisfaction_window", s.satisfaction_window);
    return s;
}

}  // namespace

RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
    check_keys(doc, "config", {"graph", "generation", "demand", "algorithm", "constants", "output"});
    for (const char* required : {"graph", "generation", "algorithm"}) {
        if (!doc.contains(required)) throw ConfigError(required, "missing section");
    }
    RunConfig cfg;
    cfg.graph = parse_graph(doc.at("graph"), base_dir, cfg.discounts);
    cfg.generation = parse_generation(doc.at("generation"));
    if (doc.contains("demand")) cfg.demand = parse_demand(doc.at("demand"), base_dir);
    cfg.algorithm = parse_algorithm_section(doc.at("algorithm"));
    if (doc.contains("constants")) cfg.constants = parse_constants(doc.at("constants"));
    if (doc.contains("output")) cfg.output = parse_output(doc.at("output"), base_dir);
    else cfg.output.dir = base_dir / "out";
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(doc, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

void validate(const RunConfig& cfg) {
    NetworkGraph graph = [&] {
        try {
            return cfg.graph.build();
        } catch (const std::exception& e) {
            throw ConfigError("graph", e.what());
        }
    }();
    const std::size_t n = graph.node_count();
    const auto& gen = cfg.generation;
    const std::size_t gen_nodes =
        gen.kind == GenerationKind::PiecewiseStationary ? (gen.segments.empty() ? 0 : gen.segments.front().means.size())
                                                        : gen.means.size();
    if (gen_nodes != n) {
        throw ConfigError(gen.kind == GenerationKind::PiecewiseStationary ? "generation.segments" : "generation.means",
                          "expected " + std::to_string(n) + " node values, got " + std::to_string(gen_nodes));
    }
    try {
        GenerationProcess probe(gen, 0);
        for (NodeId i = 0; i < n; ++i) {
            if (!(probe.peak_mean(i) > 0.0) && !(cfg.constants.box_upper)) {
                throw ConfigError("generation", "node " + std::to_string(i) +
                                                    " never generates; set constants.x_max to size its box");
            }
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("generation", e.what());
    }
    if (cfg.demand.kind == DemandKind::Explicit && cfg.demand.values.size() != n && !cfg.demand.file) {
        throw ConfigError("demand.values", "expected " + std::to_string(n) + " values");
    }
    for (double v : cfg.demand.values)
        if (!(v > 0.0)) throw ConfigError("demand.values", "demands must be positive");
    for (const auto& d : cfg.discounts) {
        if (d.i >= n || d.j >= n) throw ConfigError("graph.discounts", "node id out of range");
        if (d.i != d.j && !graph.adjacent(d.i, d.j)) throw ConfigError("graph.discounts", "discount on a non-edge");
        if (!(d.factor > 0.0 && d.factor <= 1.0)) throw ConfigError("graph.discounts.c", "must lie in (0,1]");
        if (d.i == d.j && d.factor != 1.0) throw ConfigError("graph.discounts.c", "c(i,i) must be 1");
    }
    const auto& a = cfg.algorithm;
    if (a.horizon == 0) throw ConfigError("algorithm.horizon", "must be >= 1");
    if (a.path_length < 0.0) throw ConfigError("algorithm.path_length", "must be >= 0");
    if (a.meta_rate && !(*a.meta_rate >= 0.0)) throw ConfigError("algorithm.meta_rate", "must be >= 0");
    if (a.experts && *a.experts == 0) throw ConfigError("algorithm.experts", "must be >= 1");
    if (!(a.bansap_freeze > 0.0 && a.bansap_freeze <= 1.0)) throw ConfigError("algorithm.bansap_freeze", "must lie in (0,1]");
    const auto& c = cfg.constants;
    auto positive = [](const std::optional<double>& v, const char* field) {
        if (v && !(*v > 0.0)) throw ConfigError(field, "must be positive");
    };
    positive(c.loss_bound, "constants.F");
    positive(c.constraint_bound, "constants.G");
    positive(c.lipschitz, "constants.L");
    positive(c.outer_radius, "constants.R");
    positive(c.inner_radius, "constants.r");
    if (c.box_upper) {
        if (c.box_upper->size() != 1 && c.box_upper->size() != n) {
            throw ConfigError("constants.x_max", "expected a scalar or " + std::to_string(n) + " values");
        }
        for (double v : *c.box_upper)
            if (!(v > 0.0)) throw ConfigError("constants.x_max", "must be positive");
    }
    const auto& o = cfg.output;
    if (!(o.oracle_tolerance > 0.0)) throw ConfigError("output.oracle_tolerance", "must be positive");
    if (o.satisfaction_window == 0) throw ConfigError("output.satisfaction_window", "must be >= 1");
}

}  // namespace gridshare
