#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "phgnn/data.hpp"
#include "phgnn/pretrain.hpp"
#include "phgnn/prompt.hpp"

namespace phgnn {

/// Every knob of the pipeline. Serialized as nested JSON; see README for keys.
struct RunConfig {
    std::uint64_t seed = 0;
    SyntheticConfig data;
    std::size_t k = 30;
    bool pairwise = false;
    std::vector<std::size_t> encoder_dims{128, 64};
    std::size_t classes = 2;
    PretrainConfig pretrain;
    TuneConfig tune;
    std::size_t k_folds = 5;
    std::vector<std::size_t> prompt_sizes{8, 16, 32, 64};

    /// Throws InvalidArgument on any out-of-range field.
    void validate() const;

    std::string to_json() const;
    /// Missing keys keep their defaults; unknown keys are rejected.
    static RunConfig from_json(const std::string& text);
    /// Overrides one field by dotted path, e.g. set("tune.epochs", "50").
    void set(const std::string& key, const std::string& value);

    /// 16 hex digits identifying the canonical JSON form.
    std::string digest() const;

    /// Pretraining settings with seed and encoder dims filled in.
    PretrainConfig pretrain_config() const;
    /// Tuning settings for one fold; the seed depends only on (seed, fold).
    TuneConfig tune_config(std::size_t fold) const;
    SyntheticConfig synthetic_config() const;
    ModelShape model_shape(std::size_t input_dim) const;
};

/// Independent stream seed derived from a base seed and a stream label.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace phgnn
