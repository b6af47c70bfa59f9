#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "hfgpi/errors.hpp"

namespace hfgpi {

// Which observable modality to blank out for ablation runs.
enum class DropModality { None, Genes, Proteins, Patches };

// Every hyperparameter in one place, validated before any work and echoed
// verbatim into reports and checkpoints.
struct RunConfig {
    // data/selection
    std::size_t ng = 2000; // highly variable genes kept
    std::size_t kg = 100;  // gene kNN degree
    std::size_t kp = 20;   // protein kNN degree
    std::size_t topk = 32; // patches per hyperedge
    // model
    std::size_t d = 16;      // shared token width
    std::size_t heads = 4;   // encoder heads
    std::size_t layers = 1;  // encoder layers
    std::size_t d_attn = 8;  // pooling gate width
    std::size_t bins = 4;    // survival time bins B
    bool zscore_proteins = true;
    // training
    double lambda = 0.3;
    double lr = 1e-4;
    double weight_decay = 1e-5;
    std::size_t epochs = 20;
    std::size_t accumulation = 16;
    std::size_t folds = 5;
    double val_fraction = 0.2;
    std::uint64_t seed = 0;
    DropModality drop = DropModality::None;

    void validate() const {
        if (ng < 1 || kg < 1 || kp < 1 || topk < 1) throw ConfigError("config: ng/kg/kp/topk must be >= 1");
        if (d < heads || d % heads != 0) throw ConfigError("config: d must be a positive multiple of heads");
        if (layers < 1) throw ConfigError("config: need >= 1 encoder layer");
        if (bins < 2) throw ConfigError("config: need >= 2 time bins");
        if (lambda < 0.0) throw ConfigError("config: lambda must be >= 0");
        if (lr <= 0.0) throw ConfigError("config: lr must be > 0");
        if (weight_decay < 0.0) throw ConfigError("config: weight_decay must be >= 0");
        if (epochs < 1) throw ConfigError("config: need >= 1 epoch");
        if (accumulation < 1) throw ConfigError("config: accumulation must be >= 1");
        if (folds < 2) throw ConfigError("config: need >= 2 folds");
        if (val_fraction <= 0.0 || val_fraction >= 1.0)
            throw ConfigError("config: val_fraction must be in (0,1)");
    }
};

std::string drop_modality_name(DropModality d);
DropModality parse_drop_modality(const std::string& s);

// key=value echo of the resolved config, one pair per line, and its inverse
// (used to rebuild the model from a checkpoint).
std::string config_echo(const RunConfig& c);
RunConfig parse_config_echo(const std::string& echo);

} // namespace hfgpi
