#include "gridshare/config.hpp"
#include "gridshare/harness.hpp"
#include "gridshare/records_io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

using namespace gridshare;

namespace {

int cmd_run(const std::string& config_path, const std::optional<std::string>& algo,
            const std::optional<std::size_t>& horizon, const std::optional<std::uint64_t>& seed, bool with_oracle,
            const std::optional<std::string>& out_dir) {
    RunConfig cfg = load_config(config_path);
    if (algo) {
        const auto a = parse_algorithm(*algo);
        if (!a) throw ConfigError("algorithm.name", "unknown algorithm '" + *algo + "'");
        cfg.algorithm.algorithm = *a;
    }
    if (horizon) cfg.algorithm.horizon = *horizon;
    if (seed) cfg.algorithm.seed = *seed;
    if (with_oracle) cfg.output.with_oracle = true;
    if (out_dir) cfg.output.dir = *out_dir;

    const RunResult result = run(cfg);
    std::filesystem::create_directories(cfg.output.dir);
    write_records_csv(cfg.output.dir / cfg.output.records, result.records);
    write_series_csv(cfg.output.dir / cfg.output.series, result.records);
    write_summary_json(cfg.output.dir / cfg.output.summary, result.summary);
    if (cfg.output.with_oracle) write_comparators_csv(cfg.output.dir / cfg.output.comparators, result.dynamic_comparators);

    const RunSummary& s = result.summary;
    std::cout << s.algorithm << " T=" << s.horizon << " seed=" << s.seed << " mean cumulative loss "
              << s.mean_cumulative_loss << ", total violation " << s.total_violation << " ("
              << s.wall_clock_seconds << " s)\n";
    std::cout << "wrote " << (cfg.output.dir / cfg.output.records).string() << '\n';
    return 0;
}

int cmd_validate(const std::string& config_path) {
    const RunConfig cfg = load_config(config_path);
    validate(cfg);
    const NetworkGraph g = cfg.graph.build();
    std::cout << "ok: " << g.node_count() << " nodes, " << g.edges().size() << " edges, algorithm "
              << to_string(cfg.algorithm.algorithm) << ", T=" << cfg.algorithm.horizon << '\n';
    return 0;
}

int cmd_report(const std::string& records_path, const std::optional<std::string>& config_path, std::size_t window) {
    std::vector<RoundRecord> records = read_records_csv(records_path);
    if (records.empty()) {
        std::cout << "no rounds\n";
        return 0;
    }
    bool unclipped = false;
    if (config_path) {
        // rebuild inflows so the ratios are not clipped at 1
        const RunConfig cfg = load_config(*config_path);
        const NetworkGraph g = cfg.graph.build();
        if (g.node_count() != records.front().agents.size())
            throw ConfigError("graph", "node count does not match the records");
        const EdgeDiscounts discounts = make_discounts(cfg);
        std::vector<AllocationVector> alloc(g.node_count());
        for (auto& rec : records) {
            for (NodeId i = 0; i < alloc.size(); ++i) alloc[i] = AllocationVector{i, rec.agents[i].allocation};
            for (NodeId i = 0; i < alloc.size(); ++i)
                rec.agents[i].received = discounts.empty() ? received(g, i, alloc)
                                                           : received_discounted(g, i, alloc, discounts);
        }
        unclipped = true;
    } else {
        for (auto& rec : records)
            for (auto& a : rec.agents) a.received = a.satisfaction * a.demand;
    }
    const auto losses = cumulative_loss(records);
    const auto violations = violation_total(records);
    const auto ratios = satisfaction_report(records, window);
    std::cout << "rounds " << records.size() << ", ratios over the last " << std::min(window, records.size())
              << (unclipped ? " rounds\n" : " rounds (clipped at 1; pass --config for unclipped)\n");
    std::cout << "node,cumulative_loss,violation,ratio,baseline_ratio\n";
    for (std::size_t i = 0; i < losses.size(); ++i) {
        std::cout << i << ',' << format_double(losses[i]) << ',' << format_double(violations[i]) << ','
                  << format_double(ratios[i].ratio) << ',' << format_double(ratios[i].baseline) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed renewable-energy sharing simulator"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "simulate a configuration and write records");
    std::string run_config;
    std::optional<std::string> algo, out_dir;
    std::optional<std::size_t> horizon;
    std::optional<std::uint64_t> seed;
    bool with_oracle = false;
    run_cmd->add_option("--config", run_config, "JSON configuration")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--algo", algo, "drs | drs-adj | mansdrs | mansdrs-adj | bansap");
    run_cmd->add_option("--horizon", horizon, "number of rounds");
    run_cmd->add_option("--seed", seed, "random seed");
    run_cmd->add_flag("--with-oracle", with_oracle, "compute comparators and regret");
    run_cmd->add_option("--out", out_dir, "output directory");

    auto* validate_cmd = app.add_subcommand("validate", "check a configuration");
    std::string validate_config;
    validate_cmd->add_option("--config", validate_config, "JSON configuration")->required()->check(CLI::ExistingFile);

    auto* report_cmd = app.add_subcommand("report", "summarize a records file");
    std::string records_path;
    std::optional<std::string> report_config;
    std::size_t window = 1000;
    report_cmd->add_option("--records", records_path, "records CSV")->required()->check(CLI::ExistingFile);
    report_cmd->add_option("--config", report_config, "configuration used for the run");
    report_cmd->add_option("--window", window, "rounds averaged for the ratios")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run_cmd) return cmd_run(run_config, algo, horizon, seed, with_oracle, out_dir);
        if (*validate_cmd) return cmd_validate(validate_config);
        if (*report_cmd) return cmd_report(records_path, report_config, window);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
