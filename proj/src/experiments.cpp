#include "phgnn/experiments.hpp"

#include <algorithm>
#include <cstdio>

#include "json.hpp"

#include "phgnn/error.hpp"
#include "phgnn/io.hpp"

namespace phgnn {

using nlohmann::json;

namespace {

constexpr std::uint64_t kFoldStream = 2;

json metrics_json(const Metrics& m) { return {{"bacc", m.bacc}, {"sen", m.sen}, {"spe", m.spe}, {"auc", m.auc}}; }

json report_json(const MetricsReport& r) {
    json folds = json::array();
    for (const auto& f : r.folds) folds.push_back(metrics_json(f));
    return {{"mean", metrics_json(r.mean)}, {"std", metrics_json(r.stddev)}, {"folds", folds}};
}

json matrix_json(const Matrix& m) { return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.storage()}}; }

json row_json(const CrossValidation& cv) {
    json folds = json::array();
    for (std::size_t f = 0; f < cv.folds.size(); ++f) {
        const TuneResult& r = cv.folds[f];
        folds.push_back({{"fold", f},
                         {"best_epoch", r.best_epoch},
                         {"best", metrics_json(r.best_metrics)},
                         {"train_loss", r.train_loss},
                         {"validation_bacc", r.validation_bacc},
                         {"warnings", r.warnings}});
    }
    return {{"name", cv.label},
            {"strategy", std::string(strategy_name(cv.strategy))},
            {"prompts", cv.num_prompts},
            {"tunable_params", cv.tunable_count},
            {"metrics", report_json(cv.metrics)},
            {"per_fold", folds}};
}

std::string header(const std::string& title, const RunConfig& config) {
    return "# " + title + "\n# config digest: " + config.digest() +
           "\n# positive class: label 1; cells are mean±std (%) over " + std::to_string(config.k_folds) + " folds\n";
}

json envelope(const std::string& kind, const RunConfig& config) {
    return {{"report", kind}, {"config_digest", config.digest()}, {"config", json::parse(config.to_json())}, {"positive_class", 1}};
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

std::string metrics_table(const std::vector<CrossValidation>& rows, bool with_counts) {
    std::size_t width = 4;
    for (const auto& r : rows) width = std::max(width, r.label.size());
    std::string out = pad("NAME", width) + "  " + pad("BACC", 11) + "  " + pad("SEN", 11) + "  " + pad("SPE", 11) + "  " +
                      (with_counts ? pad("AUC", 11) + "  PARAMS" : std::string("AUC")) + "\n";
    for (const auto& r : rows) {
        std::string line = format_row(r.label, r.metrics, width);
        if (with_counts) {
            // format_row trims trailing blanks; re-pad the AUC cell.
            const std::size_t display = line.size() - 4;  // four two-byte "±"
            const std::size_t target = width + 4 * 13;
            if (display < target) line.append(target - display, ' ');
            line += "  " + std::to_string(r.tunable_count);
        }
        out += line + "\n";
    }
    return out;
}

FusedGraph fused_for(const MultimodalDataset& dataset, const RunConfig& config, std::span<const std::size_t> subset = {},
                     bool pairwise_override = false) {
    return build_fused_hypergraph(dataset, config.k, config.pairwise || pairwise_override, subset);
}

void check_encoder(const HgnnStack& encoder, const FusedGraph& fused) {
    if (encoder.input_dim() != fused.features.cols())
        fail(ErrorKind::InvalidArgument, "checkpoint encoder expects " + std::to_string(encoder.input_dim()) +
                                             " input features but the dataset provides " +
                                             std::to_string(fused.features.cols()));
}

std::string percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
    return buf;
}

}  // namespace

PretrainArtifacts run_pretrain(const MultimodalDataset& dataset, const RunConfig& config,
                               std::span<const std::size_t> modality_subset) {
    config.validate();
    const FusedGraph fused = fused_for(dataset, config, modality_subset);
    const PretrainConfig pc = config.pretrain_config();
    PretrainResult result = pretrain(fused.graph, fused.features, pc);
    PretrainArtifacts out{std::move(result.encoder), std::move(result.loss_curve), {}, {}};
    out.checkpoint = encoder_checkpoint_text(out.encoder, CheckpointMeta{pc.seed, config.digest()});
    for (std::size_t e = 0; e < out.loss_curve.size(); ++e)
        out.loss_curve_text += std::to_string(e + 1) + " " + io::format_double(out.loss_curve[e]) + "\n";
    return out;
}

CrossValidation cross_validate(const FusedGraph& fused, std::span<const int> labels, const HgnnStack& encoder,
                               const RunConfig& config, Strategy strategy, std::size_t num_prompts) {
    check_encoder(encoder, fused);
    const FoldSplit split = split_folds(labels, config.k_folds, derive_seed(config.seed, kFoldStream));
    CrossValidation cv;
    cv.label = std::string(strategy_name(strategy));
    cv.strategy = strategy;
    cv.num_prompts = num_prompts;
    std::vector<Metrics> per_fold;
    for (std::size_t f = 0; f < config.k_folds; ++f) {
        TuneConfig tc = config.tune_config(f);
        tc.num_prompts = num_prompts;
        TuneResult r = tune_with_strategy(strategy, fused.graph, fused.features, labels, split.train_mask(f),
                                          split.validation_mask(f), encoder, tc);
        per_fold.push_back(r.best_metrics);
        cv.tunable_count = r.tunable_count;
        cv.folds.push_back(std::move(r));
    }
    cv.metrics = aggregate_folds(per_fold);
    return cv;
}

Report run_tune(const MultimodalDataset& dataset, const HgnnStack& encoder, const RunConfig& config) {
    config.validate();
    const FusedGraph fused = fused_for(dataset, config);
    Report rep;
    rep.rows.push_back(cross_validate(fused, dataset.labels, encoder, config, config.tune.strategy, config.tune.num_prompts));
    const CrossValidation& cv = rep.rows.front();

    std::string text = header("tune report: strategy " + cv.label, config);
    text += "fold  best_epoch  BACC   SEN    SPE    AUC\n";
    for (std::size_t f = 0; f < cv.folds.size(); ++f) {
        const auto& r = cv.folds[f];
        const auto& m = r.best_metrics;
        text += pad(std::to_string(f), 4) + "  " + pad(std::to_string(r.best_epoch), 10) + "  " + pad(percent(m.bacc), 5) +
                "  " + pad(percent(m.sen), 5) + "  " + pad(percent(m.spe), 5) + "  " + percent(m.auc) + "\n";
        for (const auto& w : r.warnings) text += "# warning (fold " + std::to_string(f) + "): " + w + "\n";
    }
    text += "\n" + metrics_table(rep.rows, false);
    text += "tunable parameters: " + std::to_string(cv.tunable_count) + "\n";
    rep.text = std::move(text);

    json doc = envelope("tune", config);
    doc["rows"] = json::array({row_json(cv)});
    rep.json = doc.dump(1) + "\n";

    json snaps = envelope("tune-snapshots", config);
    snaps["folds"] = json::array();
    for (std::size_t f = 0; f < cv.folds.size(); ++f) {
        const auto& r = cv.folds[f];
        json values = json::array();
        for (const auto& v : r.best.values) values.push_back(matrix_json(v));
        snaps["folds"].push_back({{"fold", f},
                                  {"best_epoch", r.best_epoch},
                                  {"values", values},
                                  {"prompt_structure", matrix_json(r.best.prompt_structure.incidence())}});
    }
    rep.snapshots = snaps.dump(1) + "\n";
    return rep;
}

Report run_ablate_prompts(const MultimodalDataset& dataset, const HgnnStack& encoder, const RunConfig& config) {
    config.validate();
    for (std::size_t p : config.prompt_sizes)
        if (config.tune.prompt_k && *config.tune.prompt_k >= p)
            fail(ErrorKind::InvalidArgument, "ablate-prompts: tune.prompt_k must be below every |P| in the list");
    const FusedGraph fused = fused_for(dataset, config);
    check_encoder(encoder, fused);
    const auto& sizes = config.prompt_sizes;
    const std::size_t reference =
        std::find(sizes.begin(), sizes.end(), std::size_t{16}) != sizes.end() ? std::size_t{16} : sizes.front();

    Report rep;
    // Reference rows at a single |P|: a graph-emulating (pairwise) model and the unstructured prompt.
    {
        RunConfig pairwise = config;
        pairwise.pairwise = true;
        const PretrainArtifacts gnn = run_pretrain(dataset, pairwise);
        CrossValidation cv = cross_validate(fused_for(dataset, pairwise), dataset.labels, gnn.encoder, pairwise,
                                            Strategy::Phgnn, reference);
        cv.label = "Prompt GNN";
        rep.rows.push_back(std::move(cv));
    }
    {
        CrossValidation cv = cross_validate(fused, dataset.labels, encoder, config, Strategy::PhgnnNoStructure, reference);
        cv.label = "PHGNN w/o S";
        rep.rows.push_back(std::move(cv));
    }
    for (std::size_t p : sizes) {
        CrossValidation cv = cross_validate(fused, dataset.labels, encoder, config, Strategy::Phgnn, p);
        cv.label = "PHGNN |P|=" + std::to_string(p);
        rep.rows.push_back(std::move(cv));
    }

    const std::size_t name_w = 12;
    std::string text = header("prompt-count ablation (AUC %)", config);
    std::string head = pad("|P|", name_w);
    for (std::size_t p : sizes) head += "  " + pad(std::to_string(p), 6);
    while (head.back() == ' ') head.pop_back();
    text += head + "\n";
    auto table_row = [&](const std::string& name, auto&& cell) {
        std::string line = pad(name, name_w);
        for (std::size_t p : sizes) line += "  " + pad(cell(p), 6);
        while (!line.empty() && line.back() == ' ') line.pop_back();
        return line + "\n";
    };
    for (std::size_t i = 0; i < 2; ++i)
        text += table_row(rep.rows[i].label, [&](std::size_t p) { return p == reference ? percent(rep.rows[i].metrics.mean.auc) : std::string("-"); });
    text += table_row("PHGNN", [&](std::size_t p) {
        for (std::size_t i = 2; i < rep.rows.size(); ++i)
            if (rep.rows[i].num_prompts == p) return percent(rep.rows[i].metrics.mean.auc);
        return std::string("-");
    });
    text += table_row("params", [&](std::size_t p) {
        for (std::size_t i = 2; i < rep.rows.size(); ++i)
            if (rep.rows[i].num_prompts == p) return std::to_string(rep.rows[i].tunable_count);
        return std::string("-");
    });
    text += "\n" + metrics_table(rep.rows, true);
    rep.text = std::move(text);

    json doc = envelope("ablate-prompts", config);
    doc["prompt_sizes"] = sizes;
    doc["reference_prompts"] = reference;
    doc["rows"] = json::array();
    for (const auto& r : rep.rows) doc["rows"].push_back(row_json(r));
    rep.json = doc.dump(1) + "\n";
    return rep;
}

Report run_ablate_modalities(const MultimodalDataset& dataset, const RunConfig& config) {
    config.validate();
    if (dataset.num_modalities() != 3)
        fail(ErrorKind::InvalidArgument, "ablate-modalities: needs exactly 3 modalities, dataset has " +
                                             std::to_string(dataset.num_modalities()));
    const std::vector<std::vector<std::size_t>> subsets{{0}, {1}, {2}, {0, 1}, {0, 2}, {1, 2}, {0, 1, 2}};
    Report rep;
    for (const auto& subset : subsets) {
        const PretrainArtifacts pre = run_pretrain(dataset, config, subset);
        const FusedGraph fused = fused_for(dataset, config, subset);
        CrossValidation cv =
            cross_validate(fused, dataset.labels, pre.encoder, config, config.tune.strategy, config.tune.num_prompts);
        std::string label;
        for (std::size_t m = 0; m < 3; ++m)
            label += (std::find(subset.begin(), subset.end(), m) != subset.end() ? "x" : "-") + std::string(m < 2 ? " " : "");
        cv.label = label;
        rep.rows.push_back(std::move(cv));
    }
    std::string text = header("modality ablation: strategy " + std::string(strategy_name(config.tune.strategy)), config);
    text += "# columns M0 M1 M2: x = modality used\n";
    text += "M0 M1 M2  BACC         SEN          SPE          AUC\n";
    for (const auto& r : rep.rows) {
        std::string line = format_row(r.label, r.metrics, 0);
        // Align the three flags under the M0 M1 M2 header.
        line.replace(0, r.label.size(), r.label.substr(0, 1) + "  " + r.label.substr(2, 1) + "  " + r.label.substr(4, 1));
        text += line + "\n";
    }
    rep.text = std::move(text);

    json doc = envelope("ablate-modalities", config);
    doc["rows"] = json::array();
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        json row = row_json(rep.rows[i]);
        row["modalities"] = subsets[i];
        doc["rows"].push_back(row);
    }
    rep.json = doc.dump(1) + "\n";
    return rep;
}

Report run_compare_strategies(const MultimodalDataset& dataset, const HgnnStack& encoder, const RunConfig& config) {
    config.validate();
    const FusedGraph fused = fused_for(dataset, config);
    Report rep;
    for (Strategy s : all_strategies())
        rep.rows.push_back(cross_validate(fused, dataset.labels, encoder, config, s, config.tune.num_prompts));

    std::string text = header("tuning strategy comparison", config);
    text += metrics_table(rep.rows, true);
    const auto find = [&](Strategy s) -> const CrossValidation& {
        return *std::find_if(rep.rows.begin(), rep.rows.end(), [s](const auto& r) { return r.strategy == s; });
    };
    const double ratio = static_cast<double>(find(Strategy::Phgnn).tunable_count) /
                         static_cast<double>(find(Strategy::Finetune).tunable_count);
    text += "\n# tunable parameters, phgnn / finetune: " + percent(ratio) + "%\n";
    rep.text = std::move(text);

    json doc = envelope("compare-strategies", config);
    doc["rows"] = json::array();
    for (const auto& r : rep.rows) doc["rows"].push_back(row_json(r));
    doc["phgnn_to_finetune_param_ratio"] = ratio;
    rep.json = doc.dump(1) + "\n";
    return rep;
}

}  // namespace phgnn
