#pragma once

#include <vector>

#include "gsim/linalg.hpp"

namespace gsim {

/// One labeled feature vector. `domain` selects the branch that processes
/// `raw`; `class_id` carries the identity used for pair labeling.
struct Sample {
    int id = 0;
    Domain domain = Domain::X;
    int class_id = 0;
    Vector raw;
};

/// A cross-domain collection of samples. dim_x / dim_y are the raw input
/// dimensions of the two modalities.
struct Dataset {
    int dim_x = 0;
    int dim_y = 0;
    std::vector<Sample> samples;

    std::size_t size() const { return samples.size(); }

    int input_dim(Domain d) const { return d == Domain::X ? dim_x : dim_y; }

    /// Distinct class ids in ascending order.
    std::vector<int> class_ids() const;

    /// Positions (indices into `samples`) of the given class within the
    /// given domain, in sample order.
    std::vector<int> members(int class_id, Domain domain) const;

    /// Subset containing only the listed classes; sample ids are
    /// reassigned to positions.
    Dataset filter_classes(const std::vector<int>& keep) const;
};

}  // namespace gsim
