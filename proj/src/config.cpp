#include "phgnn/config.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "json.hpp"

#include "phgnn/error.hpp"

namespace phgnn {

using nlohmann::json;

namespace {

json to_doc(const RunConfig& c) {
    json prompt_k = c.tune.prompt_k ? json(*c.tune.prompt_k) : json(nullptr);
    return json{
        {"seed", c.seed},
        {"data",
         {{"n", c.data.n},
          {"dims", c.data.dims},
          {"class_sep", c.data.class_sep},
          {"missing_rate", c.data.missing_rate},
          {"noise_std", c.data.noise_std},
          {"name", c.data.name}}},
        {"graph", {{"k", c.k}, {"pairwise", c.pairwise}}},
        {"model", {{"encoder_dims", c.encoder_dims}, {"classes", c.classes}}},
        {"pretrain",
         {{"epochs", c.pretrain.epochs},
          {"mask_ratio", c.pretrain.mask_ratio},
          {"gamma", c.pretrain.gamma},
          {"lr", c.pretrain.lr},
          {"weight_decay", c.pretrain.weight_decay}}},
        {"tune",
         {{"strategy", std::string(strategy_name(c.tune.strategy))},
          {"epochs", c.tune.epochs},
          {"lr", c.tune.lr},
          {"weight_decay", c.tune.weight_decay},
          {"prompts", c.tune.num_prompts},
          {"prompt_k", prompt_k},
          {"gpf_plus_basis", c.tune.gpf_plus_basis},
          {"folds", c.k_folds}}},
        {"ablation", {{"prompt_sizes", c.prompt_sizes}}},
    };
}

void check_keys(const json& section, const std::string& where, std::initializer_list<const char*> known) {
    if (!section.is_object()) fail(ErrorKind::InvalidArgument, "config: '" + where + "' must be an object");
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, _] : section.items())
        if (!allowed.count(key)) fail(ErrorKind::InvalidArgument, "config: unknown key '" + where + (where.empty() ? "" : ".") + key + "'");
}

template <typename T>
void read(const json& section, const char* key, T& out) {
    if (section.contains(key)) out = section.at(key).get<T>();
}

RunConfig from_doc(const json& doc) {
    RunConfig c;
    check_keys(doc, "", {"seed", "data", "graph", "model", "pretrain", "tune", "ablation"});
    read(doc, "seed", c.seed);
    if (doc.contains("data")) {
        const json& d = doc["data"];
        check_keys(d, "data", {"n", "dims", "class_sep", "missing_rate", "noise_std", "name"});
        read(d, "n", c.data.n);
        read(d, "dims", c.data.dims);
        read(d, "class_sep", c.data.class_sep);
        read(d, "missing_rate", c.data.missing_rate);
        read(d, "noise_std", c.data.noise_std);
        read(d, "name", c.data.name);
    }
    if (doc.contains("graph")) {
        const json& g = doc["graph"];
        check_keys(g, "graph", {"k", "pairwise"});
        read(g, "k", c.k);
        read(g, "pairwise", c.pairwise);
    }
    if (doc.contains("model")) {
        const json& m = doc["model"];
        check_keys(m, "model", {"encoder_dims", "classes"});
        read(m, "encoder_dims", c.encoder_dims);
        read(m, "classes", c.classes);
    }
    if (doc.contains("pretrain")) {
        const json& p = doc["pretrain"];
        check_keys(p, "pretrain", {"epochs", "mask_ratio", "gamma", "lr", "weight_decay"});
        read(p, "epochs", c.pretrain.epochs);
        read(p, "mask_ratio", c.pretrain.mask_ratio);
        read(p, "gamma", c.pretrain.gamma);
        read(p, "lr", c.pretrain.lr);
        read(p, "weight_decay", c.pretrain.weight_decay);
    }
    if (doc.contains("tune")) {
        const json& t = doc["tune"];
        check_keys(t, "tune", {"strategy", "epochs", "lr", "weight_decay", "prompts", "prompt_k", "gpf_plus_basis", "folds"});
        if (t.contains("strategy")) c.tune.strategy = parse_strategy(t["strategy"].get<std::string>());
        read(t, "epochs", c.tune.epochs);
        read(t, "lr", c.tune.lr);
        read(t, "weight_decay", c.tune.weight_decay);
        read(t, "prompts", c.tune.num_prompts);
        if (t.contains("prompt_k")) {
            if (t["prompt_k"].is_null()) c.tune.prompt_k.reset();
            else c.tune.prompt_k = t["prompt_k"].get<std::size_t>();
        }
        read(t, "gpf_plus_basis", c.tune.gpf_plus_basis);
        read(t, "folds", c.k_folds);
    }
    if (doc.contains("ablation")) {
        const json& a = doc["ablation"];
        check_keys(a, "ablation", {"prompt_sizes"});
        read(a, "prompt_sizes", c.prompt_sizes);
    }
    return c;
}

}  // namespace

void RunConfig::validate() const {
    require(data.n >= 10, "config: data.n must be at least 10");
    require(!data.dims.empty(), "config: data.dims must list at least one modality");
    for (std::size_t d : data.dims) require(d > 0, "config: data.dims entries must be positive");
    require(data.class_sep >= 0.0 && std::isfinite(data.class_sep), "config: data.class_sep must be >= 0");
    require(data.missing_rate >= 0.0 && data.missing_rate < 1.0, "config: data.missing_rate must lie in [0, 1)");
    require(data.noise_std > 0.0 && std::isfinite(data.noise_std), "config: data.noise_std must be positive");
    require(!encoder_dims.empty(), "config: model.encoder_dims must not be empty");
    for (std::size_t d : encoder_dims) require(d > 0, "config: model.encoder_dims entries must be positive");
    require(classes == 2, "config: model.classes must be 2");
    require(pretrain.mask_ratio > 0.0 && pretrain.mask_ratio < 1.0, "config: pretrain.mask_ratio must lie in (0, 1)");
    require(pretrain.gamma >= 1.0, "config: pretrain.gamma must be at least 1");
    require(pretrain.lr > 0.0, "config: pretrain.lr must be positive");
    require(pretrain.weight_decay >= 0.0, "config: pretrain.weight_decay must be >= 0");
    require(tune.lr > 0.0, "config: tune.lr must be positive");
    require(tune.weight_decay >= 0.0, "config: tune.weight_decay must be >= 0");
    require(tune.num_prompts >= 1, "config: tune.prompts must be at least 1");
    require(tune.effective_prompt_k() < tune.num_prompts, "config: tune.prompt_k must be below tune.prompts");
    require(tune.gpf_plus_basis >= 1, "config: tune.gpf_plus_basis must be at least 1");
    require(k_folds >= 2, "config: tune.folds must be at least 2");
    require(!prompt_sizes.empty(), "config: ablation.prompt_sizes must not be empty");
    for (std::size_t p : prompt_sizes) require(p >= 1, "config: ablation.prompt_sizes entries must be positive");
}

std::string RunConfig::to_json() const { return to_doc(*this).dump(2); }

RunConfig RunConfig::from_json(const std::string& text) {
    try {
        return from_doc(json::parse(text));
    } catch (const json::exception& e) {
        fail(ErrorKind::InvalidArgument, std::string("config: ") + e.what());
    }
}

void RunConfig::set(const std::string& key, const std::string& value) {
    json doc = to_doc(*this);
    json patch;
    try {
        patch = json::parse(value);
    } catch (const json::exception&) {
        patch = value;  // bare strings such as strategy names
    }
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!node->is_object() || !node->contains(part)) fail(ErrorKind::InvalidArgument, "config: unknown key '" + key + "'");
        node = &(*node)[part];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    *node = patch;
    try {
        *this = from_doc(doc);
    } catch (const json::exception& e) {
        fail(ErrorKind::InvalidArgument, "config: bad value for '" + key + "': " + e.what());
    }
}

std::string RunConfig::digest() const {
    // FNV-1a over the canonical (sorted-key) serialization.
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : to_doc(*this).dump()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

PretrainConfig RunConfig::pretrain_config() const {
    PretrainConfig p = pretrain;
    p.seed = derive_seed(seed, 1);
    p.encoder_dims = encoder_dims;
    return p;
}

TuneConfig RunConfig::tune_config(std::size_t fold) const {
    TuneConfig t = tune;
    t.seed = derive_seed(seed, 100 + fold);
    t.classes = classes;
    return t;
}

SyntheticConfig RunConfig::synthetic_config() const {
    SyntheticConfig s = data;
    s.seed = derive_seed(seed, 0);
    return s;
}

ModelShape RunConfig::model_shape(std::size_t input_dim) const {
    ModelShape m;
    m.input_dim = input_dim;
    m.encoder_dims = encoder_dims;
    m.classes = classes;
    m.num_prompts = tune.num_prompts;
    m.gpf_plus_basis = tune.gpf_plus_basis;
    return m;
}

}  // namespace phgnn
