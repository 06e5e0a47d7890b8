#include "phgnn/phgnn.h"

#include <filesystem>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "phgnn/config.hpp"
#include "phgnn/data.hpp"
#include "phgnn/error.hpp"
#include "phgnn/eval.hpp"
#include "phgnn/experiments.hpp"
#include "phgnn/io.hpp"

namespace fs = std::filesystem;
using namespace phgnn;

struct phgnn_config {
    RunConfig config;
    std::string scratch;
};

struct phgnn_dataset {
    MultimodalDataset dataset;
    std::string summary;
};

struct phgnn_model {
    HgnnStack encoder;
    std::vector<double> loss_curve;
    std::string checkpoint;
    std::string loss_curve_text;
    std::string config_json;
};

struct phgnn_report {
    Report report;
    std::string config_json;
};

namespace {

thread_local std::string last_error;

phgnn_status status_of(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return PHGNN_ERR_INVALID_ARGUMENT;
        case ErrorKind::Shape: return PHGNN_ERR_SHAPE;
        case ErrorKind::Io: return PHGNN_ERR_IO;
        case ErrorKind::Runtime: return PHGNN_ERR_RUNTIME;
    }
    return PHGNN_ERR_RUNTIME;
}

template <typename F>
phgnn_status guarded(F&& body) {
    try {
        body();
        last_error.clear();
        return PHGNN_OK;
    } catch (const Error& e) {
        last_error = e.what();
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return PHGNN_ERR_RUNTIME;
    } catch (const std::exception& e) {
        last_error = e.what();
        return PHGNN_ERR_RUNTIME;
    }
}

void need(const void* p, const char* what) {
    if (!p) fail(ErrorKind::InvalidArgument, std::string(what) + " must not be null");
}

std::string summarize(const MultimodalDataset& ds) {
    std::ostringstream out;
    std::size_t positives = 0;
    for (int y : ds.labels) positives += y == 1;
    out << "dataset '" << ds.name << "': " << ds.num_nodes() << " subjects, " << ds.num_modalities() << " modalities\n";
    out << "labels: " << positives << " positive (1), " << ds.num_nodes() - positives << " negative (0)\n";
    for (std::size_t i = 0; i < ds.num_modalities(); ++i) {
        std::size_t present = 0;
        for (bool p : ds.modalities[i].present) present += p;
        out << "modality " << i << ": " << ds.modalities[i].features.cols() << " features, " << present << " present\n";
    }
    return out.str();
}

// Writes every file into a staging directory, then swaps it into place.
void write_directory(const fs::path& target, bool force, const std::vector<std::pair<std::string, std::string>>& files) {
    if (!force && fs::exists(target))
        fail(ErrorKind::InvalidArgument, target.string() + ": already exists (use force to overwrite)");
    const fs::path staged = io::staging_directory(target);
    try {
        for (const auto& [name, content] : files) io::write_file_atomic(staged / name, content);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(staged, ec);
        throw;
    }
    io::commit_directory(staged, target, force);
}

std::vector<double> parse_curve(const std::string& text) {
    std::vector<double> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto space = line.find(' ');
        if (space == std::string::npos) fail(ErrorKind::Io, "loss_curve.txt line " + std::to_string(lineno) + ": expected 'epoch loss'");
        out.push_back(io::parse_double(line.substr(space + 1), "loss_curve.txt line " + std::to_string(lineno)));
    }
    return out;
}

}  // namespace

extern "C" {

const char* phgnn_last_error(void) { return last_error.c_str(); }

phgnn_status phgnn_config_create(phgnn_config** out) {
    return guarded([&] {
        need(out, "out");
        *out = new phgnn_config{};
    });
}

phgnn_status phgnn_config_load(const char* path, phgnn_config** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new phgnn_config{RunConfig::from_json(io::read_file(path)), {}};
    });
}

phgnn_status phgnn_config_set(phgnn_config* config, const char* key, const char* value) {
    return guarded([&] {
        need(config, "config");
        need(key, "key");
        need(value, "value");
        config->config.set(key, value);
    });
}

phgnn_status phgnn_config_validate(const phgnn_config* config) {
    return guarded([&] {
        need(config, "config");
        config->config.validate();
    });
}

phgnn_status phgnn_config_json(const phgnn_config* config, const char** out) {
    return guarded([&] {
        need(config, "config");
        need(out, "out");
        auto* c = const_cast<phgnn_config*>(config);
        c->scratch = config->config.to_json();
        *out = c->scratch.c_str();
    });
}

phgnn_status phgnn_config_digest(const phgnn_config* config, const char** out) {
    return guarded([&] {
        need(config, "config");
        need(out, "out");
        auto* c = const_cast<phgnn_config*>(config);
        c->scratch = config->config.digest();
        *out = c->scratch.c_str();
    });
}

void phgnn_config_free(phgnn_config* config) { delete config; }

phgnn_status phgnn_dataset_generate(const phgnn_config* config, phgnn_dataset** out) {
    return guarded([&] {
        need(config, "config");
        need(out, "out");
        config->config.validate();
        MultimodalDataset ds = generate_synthetic(config->config.synthetic_config());
        std::string summary = summarize(ds);
        *out = new phgnn_dataset{std::move(ds), std::move(summary)};
    });
}

phgnn_status phgnn_dataset_load(const char* dir, phgnn_dataset** out) {
    return guarded([&] {
        need(dir, "dir");
        need(out, "out");
        MultimodalDataset ds = load_dataset(dir);
        std::string summary = summarize(ds);
        *out = new phgnn_dataset{std::move(ds), std::move(summary)};
    });
}

phgnn_status phgnn_dataset_save(const phgnn_dataset* dataset, const char* dir, int force) {
    return guarded([&] {
        need(dataset, "dataset");
        need(dir, "dir");
        const fs::path target(dir);
        if (!force && fs::exists(target))
            fail(ErrorKind::InvalidArgument, target.string() + ": already exists (use force to overwrite)");
        const fs::path staged = io::staging_directory(target);
        try {
            save_dataset(dataset->dataset, staged);
        } catch (...) {
            std::error_code ec;
            fs::remove_all(staged, ec);
            throw;
        }
        io::commit_directory(staged, target, force != 0);
    });
}

phgnn_status phgnn_dataset_info(const phgnn_dataset* dataset, size_t* num_nodes, size_t* num_modalities,
                                const char** summary) {
    return guarded([&] {
        need(dataset, "dataset");
        if (num_nodes) *num_nodes = dataset->dataset.num_nodes();
        if (num_modalities) *num_modalities = dataset->dataset.num_modalities();
        if (summary) *summary = dataset->summary.c_str();
    });
}

void phgnn_dataset_free(phgnn_dataset* dataset) { delete dataset; }

phgnn_status phgnn_pretrain(const phgnn_dataset* dataset, const phgnn_config* config, phgnn_model** out) {
    return guarded([&] {
        need(dataset, "dataset");
        need(config, "config");
        need(out, "out");
        PretrainArtifacts a = run_pretrain(dataset->dataset, config->config);
        *out = new phgnn_model{std::move(a.encoder), std::move(a.loss_curve), std::move(a.checkpoint),
                               std::move(a.loss_curve_text), config->config.to_json() + "\n"};
    });
}

phgnn_status phgnn_model_save(const phgnn_model* model, const char* dir, int force) {
    return guarded([&] {
        need(model, "model");
        need(dir, "dir");
        std::vector<std::pair<std::string, std::string>> files{{"encoder.json", model->checkpoint},
                                                               {"loss_curve.txt", model->loss_curve_text}};
        if (!model->config_json.empty()) files.emplace_back("config.json", model->config_json);
        write_directory(dir, force != 0, files);
    });
}

phgnn_status phgnn_model_load(const char* path, phgnn_model** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        const fs::path p(path);
        const bool is_dir = fs::is_directory(p);
        const fs::path file = is_dir ? p / "encoder.json" : p;
        if (!fs::exists(file)) fail(ErrorKind::Io, file.string() + ": checkpoint not found");
        std::string text = io::read_file(file);
        HgnnStack encoder = parse_encoder_checkpoint(text);
        std::string curve_text;
        std::vector<double> curve;
        if (is_dir && fs::exists(p / "loss_curve.txt")) {
            curve_text = io::read_file(p / "loss_curve.txt");
            curve = parse_curve(curve_text);
        }
        *out = new phgnn_model{std::move(encoder), std::move(curve), std::move(text), std::move(curve_text), {}};
    });
}

phgnn_status phgnn_model_checkpoint(const phgnn_model* model, const char** out) {
    return guarded([&] {
        need(model, "model");
        need(out, "out");
        *out = model->checkpoint.c_str();
    });
}

phgnn_status phgnn_model_loss_curve(const phgnn_model* model, const double** values, size_t* length) {
    return guarded([&] {
        need(model, "model");
        need(values, "values");
        need(length, "length");
        *values = model->loss_curve.data();
        *length = model->loss_curve.size();
    });
}

void phgnn_model_free(phgnn_model* model) { delete model; }

phgnn_status phgnn_tune(const phgnn_dataset* dataset, const phgnn_model* model, const phgnn_config* config,
                        phgnn_report** out) {
    return guarded([&] {
        need(dataset, "dataset");
        need(model, "model");
        need(config, "config");
        need(out, "out");
        *out = new phgnn_report{run_tune(dataset->dataset, model->encoder, config->config), config->config.to_json() + "\n"};
    });
}

phgnn_status phgnn_ablate_prompts(const phgnn_dataset* dataset, const phgnn_model* model, const phgnn_config* config,
                                  phgnn_report** out) {
    return guarded([&] {
        need(dataset, "dataset");
        need(model, "model");
        need(config, "config");
        need(out, "out");
        *out = new phgnn_report{run_ablate_prompts(dataset->dataset, model->encoder, config->config),
                                config->config.to_json() + "\n"};
    });
}

phgnn_status phgnn_ablate_modalities(const phgnn_dataset* dataset, const phgnn_config* config, phgnn_report** out) {
    return guarded([&] {
        need(dataset, "dataset");
        need(config, "config");
        need(out, "out");
        *out = new phgnn_report{run_ablate_modalities(dataset->dataset, config->config), config->config.to_json() + "\n"};
    });
}

phgnn_status phgnn_compare_strategies(const phgnn_dataset* dataset, const phgnn_model* model,
                                      const phgnn_config* config, phgnn_report** out) {
    return guarded([&] {
        need(dataset, "dataset");
        need(model, "model");
        need(config, "config");
        need(out, "out");
        *out = new phgnn_report{run_compare_strategies(dataset->dataset, model->encoder, config->config),
                                config->config.to_json() + "\n"};
    });
}

phgnn_status phgnn_report_text(const phgnn_report* report, const char** out) {
    return guarded([&] {
        need(report, "report");
        need(out, "out");
        *out = report->report.text.c_str();
    });
}

phgnn_status phgnn_report_json(const phgnn_report* report, const char** out) {
    return guarded([&] {
        need(report, "report");
        need(out, "out");
        *out = report->report.json.c_str();
    });
}

phgnn_status phgnn_report_save(const phgnn_report* report, const char* dir, int force) {
    return guarded([&] {
        need(report, "report");
        need(dir, "dir");
        std::vector<std::pair<std::string, std::string>> files{{"report.txt", report->report.text},
                                                               {"report.json", report->report.json},
                                                               {"config.json", report->config_json}};
        if (!report->report.snapshots.empty()) files.emplace_back("snapshots.json", report->report.snapshots);
        write_directory(dir, force != 0, files);
    });
}

void phgnn_report_free(phgnn_report* report) { delete report; }

phgnn_status phgnn_auc(const double* scores, const int* labels, size_t n, double* out) {
    return guarded([&] {
        need(scores, "scores");
        need(labels, "labels");
        need(out, "out");
        *out = auc(std::span<const double>(scores, n), std::span<const int>(labels, n), std::vector<bool>(n, true));
    });
}

phgnn_status phgnn_count_tunable(const phgnn_config* config, size_t input_dim, const char* strategy, size_t* out) {
    return guarded([&] {
        need(config, "config");
        need(strategy, "strategy");
        need(out, "out");
        *out = count_tunable_params(parse_strategy(strategy), config->config.model_shape(input_dim)).total();
    });
}

}  // extern "C"
