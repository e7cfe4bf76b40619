#pragma once

#include <map>
#include <string>
#include <vector>

#include "rascore/binning.hpp"
#include "rascore/ensemble.hpp"
#include "rascore/model.hpp"
#include "rascore/preprocess.hpp"
#include "rascore/training.hpp"

namespace rascore {

/// One registered configuration key with its default and documentation.
struct ConfigKey {
    std::string key;
    std::string default_value;
    std::string description;
};

/// Flat dotted-key run configuration ("train.epochs = 100"). Every key has a
/// documented default; unknown keys are rejected by name. `#` starts a
/// comment.
class RunConfig {
public:
    static const std::vector<ConfigKey>& registry();
    static RunConfig defaults();
    static RunConfig from_file(const std::string& path);

    void set(const std::string& key, const std::string& value);
    const std::string& get(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    int get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::uint64_t get_seed() const;
    std::vector<double> get_double_list(const std::string& key) const;
    std::vector<std::string> get_string_list(const std::string& key) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

    // Typed views over the raw entries.
    TrainTask task() const;
    ModelSpec model_spec() const;
    TrainConfig train_config() const;  // epochs default resolves per task (100 SvdH / 50 bone age)
    AugmentPolicy augment_policy() const;
    SeverityBinning binning() const;
    StackFitConfig stack_fit_config() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace rascore
