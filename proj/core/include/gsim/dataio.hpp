#pragma once

// Synthetic cross-domain dataset generation and the two text file formats:
// datasets (GSIM-DATA 1) and models (GSIM-MODEL 1).  Both formats are plain
// text with 17-significant-digit values, so writes are byte-reproducible and
// round-trips preserve doubles exactly.

#include <cstdint>
#include <string>

#include "gsim/data.hpp"
#include "gsim/trainer.hpp"

namespace gsim {

// Recipe for a synthetic two-domain classification dataset.  Each class gets
// one Gaussian latent center; each sample is an independent domain-specific
// affine map of (center + within-class noise), optionally squashed by tanh so
// the cross-domain relation is not exactly linear, then multiplied by
// `scale`.  The default scale emits raw values of integer-descriptor
// magnitude (hundreds), like unnormalized pixel or histogram features.
//
// Within-class noise is heteroscedastic across classes: a deterministic
// `noisy_class_fraction` of the classes (spread evenly over class ids) use
// `noise_boost` times the base sigma, the rest use `noise_sigma` as is.  That
// mirrors corpora where some identities are simply harder — blurred,
// occluded, or badly aligned — and keeps the clean majority informative
// while the hard minority stresses score calibration.  Set the boost to 1
// (or the fraction to 0) for homogeneous noise.
struct SynthSpec {
    int num_classes = 200;
    int samples_per_class_x = 8;
    int samples_per_class_y = 8;
    int latent_dim = 6;
    int input_dim_x = 32;
    int input_dim_y = 32;
    double noise_sigma = 0.10;
    double noise_boost = 3.0;
    double noisy_class_fraction = 0.15;
    double scale = 1000.0;
    bool nonlinear = true;
    std::uint64_t seed = 1;

    void validate() const;

    // True when class `class_id` draws boosted noise.  Classes are flagged by
    // an even integer spread (floor((c+1)f) > floor(cf)), so exactly
    // floor(num_classes * f) classes are noisy and the flags do not move when
    // num_classes grows.
    bool class_is_noisy(int class_id) const;
};

// Deterministic per seed: the domain maps and shifts are drawn once, then one
// center per class and one latent noise vector per sample, in a fixed order.
Dataset generate_synthetic(const SynthSpec& spec);

// Dataset file: header `GSIM-DATA 1 <dim_x> <dim_y>`, then one line per
// sample `<X|Y> <class_id> <v1> ... <vk>`.  Sample ids are positional (row
// order).  Load errors name the offending line.
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

// Model file: header `GSIM-MODEL 1`, then named blocks, each a line
// `<name> <rows> <cols>` followed by that many row lines.  Block names:
// branch_x.w0/b0..., branch_y.*, shared.*, net.normalize (1x1 flag),
// phi.l_a, phi.l_b, phi.l_cx, phi.l_cy, phi.d, phi.e, phi.f.  Activations
// are reconstructed by convention (hidden layers ReLU, final shared layer
// identity), which save_model asserts.  Loading is strict: unknown,
// duplicate, or missing blocks, a bad version, or a truncated file all fail
// without returning partial state.
void save_model(const ModelState& state, const std::string& path);
ModelState load_model(const std::string& path);

// Whitespace-separated doubles, any line layout.  Used for CLI score inputs.
Vector load_vector(const std::string& path);

}  // namespace gsim
