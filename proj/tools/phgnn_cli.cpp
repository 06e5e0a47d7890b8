#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "phgnn/phgnn.h"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct Failure {
    int code;
};

void check(phgnn_status status, const char* what) {
    if (status == PHGNN_OK) return;
    std::fprintf(stderr, "phgnn %s: %s\n", what, phgnn_last_error());
    throw Failure{status == PHGNN_ERR_RUNTIME ? kExitRuntime : kExitValidation};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using Config = std::unique_ptr<phgnn_config, Deleter<phgnn_config, phgnn_config_free>>;
using Dataset = std::unique_ptr<phgnn_dataset, Deleter<phgnn_dataset, phgnn_dataset_free>>;
using Model = std::unique_ptr<phgnn_model, Deleter<phgnn_model, phgnn_model_free>>;
using Report = std::unique_ptr<phgnn_report, Deleter<phgnn_report, phgnn_report_free>>;

struct Options {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string seed;
    std::string out;
    bool force = false;
    std::string data;
    std::string checkpoint;
    std::string strategy;
    std::string epochs;
    std::string prompts;
    std::string prompt_sizes;
};

Config make_config(const Options& o) {
    phgnn_config* raw = nullptr;
    if (o.config_path.empty()) check(phgnn_config_create(&raw), "config");
    else check(phgnn_config_load(o.config_path.c_str(), &raw), "config");
    Config config(raw);
    auto set = [&](const std::string& key, const std::string& value) {
        check(phgnn_config_set(config.get(), key.c_str(), value.c_str()), "config");
    };
    for (const auto& kv : o.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            std::fprintf(stderr, "phgnn config: --set expects key=value, got '%s'\n", kv.c_str());
            throw Failure{kExitValidation};
        }
        set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!o.seed.empty()) set("seed", o.seed);
    if (!o.strategy.empty()) set("tune.strategy", o.strategy);
    if (!o.epochs.empty()) set("tune.epochs", o.epochs);
    if (!o.prompts.empty()) set("tune.prompts", o.prompts);
    if (!o.prompt_sizes.empty()) set("ablation.prompt_sizes", "[" + o.prompt_sizes + "]");
    check(phgnn_config_validate(config.get()), "config");
    return config;
}

Dataset load_dataset(const Options& o) {
    phgnn_dataset* raw = nullptr;
    check(phgnn_dataset_load(o.data.c_str(), &raw), "dataset");
    return Dataset(raw);
}

Model load_model(const Options& o) {
    phgnn_model* raw = nullptr;
    check(phgnn_model_load(o.checkpoint.c_str(), &raw), "checkpoint");
    return Model(raw);
}

void emit(phgnn_report* report, const Options& o) {
    const char* text = nullptr;
    check(phgnn_report_text(report, &text), "report");
    std::fputs(text, stdout);
    if (!o.out.empty()) check(phgnn_report_save(report, o.out.c_str(), o.force ? 1 : 0), "report");
}

int gen_data(const Options& o) {
    Config config = make_config(o);
    phgnn_dataset* raw = nullptr;
    check(phgnn_dataset_generate(config.get(), &raw), "gen-data");
    Dataset ds(raw);
    check(phgnn_dataset_save(ds.get(), o.out.c_str(), o.force ? 1 : 0), "gen-data");
    const char* summary = nullptr;
    check(phgnn_dataset_info(ds.get(), nullptr, nullptr, &summary), "gen-data");
    std::printf("%swritten to %s\n", summary, o.out.c_str());
    return 0;
}

int pretrain(const Options& o) {
    Config config = make_config(o);
    Dataset ds = load_dataset(o);
    phgnn_model* raw = nullptr;
    check(phgnn_pretrain(ds.get(), config.get(), &raw), "pretrain");
    Model model(raw);
    check(phgnn_model_save(model.get(), o.out.c_str(), o.force ? 1 : 0), "pretrain");
    const double* curve = nullptr;
    size_t epochs = 0;
    check(phgnn_model_loss_curve(model.get(), &curve, &epochs), "pretrain");
    if (epochs > 0)
        std::printf("pretrained %zu epochs: SCE %.6g -> %.6g\n", epochs, curve[0], curve[epochs - 1]);
    std::printf("checkpoint written to %s\n", o.out.c_str());
    return 0;
}

int tune(const Options& o) {
    Config config = make_config(o);
    Dataset ds = load_dataset(o);
    Model model = load_model(o);
    phgnn_report* raw = nullptr;
    check(phgnn_tune(ds.get(), model.get(), config.get(), &raw), "tune");
    Report report(raw);
    emit(report.get(), o);
    return 0;
}

int ablate_prompts(const Options& o) {
    Config config = make_config(o);
    Dataset ds = load_dataset(o);
    Model model = load_model(o);
    phgnn_report* raw = nullptr;
    check(phgnn_ablate_prompts(ds.get(), model.get(), config.get(), &raw), "ablate-prompts");
    Report report(raw);
    emit(report.get(), o);
    return 0;
}

int ablate_modalities(const Options& o) {
    Config config = make_config(o);
    Dataset ds = load_dataset(o);
    phgnn_report* raw = nullptr;
    check(phgnn_ablate_modalities(ds.get(), config.get(), &raw), "ablate-modalities");
    Report report(raw);
    emit(report.get(), o);
    return 0;
}

int compare_strategies(const Options& o) {
    Config config = make_config(o);
    Dataset ds = load_dataset(o);
    Model model = load_model(o);
    phgnn_report* raw = nullptr;
    check(phgnn_compare_strategies(ds.get(), model.get(), config.get(), &raw), "compare-strategies");
    Report report(raw);
    emit(report.get(), o);
    return 0;
}

void common(CLI::App* cmd, Options& o) {
    cmd->add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", o.overrides, "Override a config field, e.g. --set tune.lr=0.01 (repeatable)");
    cmd->add_option("--seed", o.seed, "Base seed");
    cmd->add_flag("--force", o.force, "Replace an existing output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Prompt-tuned hypergraph neural networks on multimodal data"};
    app.require_subcommand(1);
    Options o;

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic multimodal dataset");
    common(gen, o);
    gen->add_option("--out", o.out, "Dataset directory")->required();

    auto* pre = app.add_subcommand("pretrain", "Masked-autoencoder pretraining of the encoder");
    common(pre, o);
    pre->add_option("--data", o.data, "Dataset directory")->required();
    pre->add_option("--out", o.out, "Checkpoint directory")->required();

    auto* tun = app.add_subcommand("tune", "Cross-validated tuning with one strategy");
    common(tun, o);
    tun->add_option("--data", o.data, "Dataset directory")->required();
    tun->add_option("--checkpoint", o.checkpoint, "Checkpoint directory or file")->required();
    tun->add_option("--out", o.out, "Report directory");
    tun->add_option("--strategy", o.strategy, "finetune, linear_probe, phgnn, phgnn_no_structure, gpf or gpf_plus");
    tun->add_option("--epochs", o.epochs, "Tuning epochs");
    tun->add_option("--prompts", o.prompts, "Number of prompt tokens");

    auto* abp = app.add_subcommand("ablate-prompts", "AUC over the number of prompt tokens");
    common(abp, o);
    abp->add_option("--data", o.data, "Dataset directory")->required();
    abp->add_option("--checkpoint", o.checkpoint, "Checkpoint directory or file")->required();
    abp->add_option("--out", o.out, "Report directory");
    abp->add_option("--epochs", o.epochs, "Tuning epochs");
    abp->add_option("--prompt-sizes", o.prompt_sizes, "Comma-separated list, e.g. 8,16,32,64");

    auto* abm = app.add_subcommand("ablate-modalities", "Pretrain and tune on every non-empty modality subset");
    common(abm, o);
    abm->add_option("--data", o.data, "Dataset directory")->required();
    abm->add_option("--out", o.out, "Report directory");
    abm->add_option("--strategy", o.strategy, "Tuning strategy");
    abm->add_option("--epochs", o.epochs, "Tuning epochs");

    auto* cmp = app.add_subcommand("compare-strategies", "All tuning strategies on identical folds");
    common(cmp, o);
    cmp->add_option("--data", o.data, "Dataset directory")->required();
    cmp->add_option("--checkpoint", o.checkpoint, "Checkpoint directory or file")->required();
    cmp->add_option("--out", o.out, "Report directory");
    cmp->add_option("--epochs", o.epochs, "Tuning epochs");
    cmp->add_option("--prompts", o.prompts, "Number of prompt tokens");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*gen) return gen_data(o);
        if (*pre) return pretrain(o);
        if (*tun) return tune(o);
        if (*abp) return ablate_prompts(o);
        if (*abm) return ablate_modalities(o);
        if (*cmp) return compare_strategies(o);
    } catch (const Failure& f) {
        return f.code;
    }
    return kExitValidation;
}
