#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace rascore {

/// Base class for all errors raised by the toolkit. The CLI maps these to a
/// single-line machine-parseable message and a non-zero exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid domain values (scores, grades, duplicate entries, bad shapes).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Bad run configuration: unknown keys, incompatible settings, out-of-range
/// hyperparameters.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Filesystem and parse failures (manifests, images, checkpoints).
class IoError : public Error {
public:
    using Error::Error;
};

/// Checkpoint does not match the requested model (wrong backbone, missing or
/// unexpected parameters).
class CheckpointError : public Error {
public:
    using Error::Error;
};

/// Optimization failure, e.g. non-finite loss.
class TrainingError : public Error {
public:
    using Error::Error;
};

using Rng = std::mt19937_64;

/// Derives an independent RNG from a root seed and a stream id, so that the
/// different consumers of randomness (init, shuffling, augmentation, ...) do
/// not share a stream.
inline Rng derived_rng(std::uint64_t root_seed, std::uint64_t stream) {
    std::seed_seq seq{root_seed, stream};
    return Rng(seq);
}

}  // namespace rascore
