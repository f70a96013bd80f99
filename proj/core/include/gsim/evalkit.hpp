#pragma once

// Retrieval and verification evaluation: cross-domain score matrices, CMC
// curves, exhaustive-threshold verification accuracy, and point-to-set
// scoring.  Scores follow the library-wide convention that LOWER means MORE
// similar, so rankings are ascending and "same" is called below a threshold.

#include <utility>
#include <vector>

#include "gsim/data.hpp"
#include "gsim/trainer.hpp"

namespace gsim {

struct ScoreMatrix {
    Matrix scores;  // probes x gallery
    std::vector<int> probe_classes;
    std::vector<int> gallery_classes;
};

struct CmcCurve {
    // rank_acc[k] = fraction of probes whose correct gallery item appears
    // within the top k+1 ranks.  Length equals the gallery size.
    std::vector<double> rank_acc;
};

// Score every probe against every gallery item.  One side must be entirely
// domain X and the other entirely domain Y (either way around — the measure
// is asymmetric, and each sample is projected through its own domain's
// branch).  Gallery features and projections are computed once and reused.
ScoreMatrix score_all(const ModelState& state, const std::vector<Sample>& probes,
                      const std::vector<Sample>& gallery);

// Rank of the best same-class gallery item per probe (ascending scores, ties
// broken by gallery index), accumulated into a curve.  Every probe's class
// must appear in the gallery.
CmcCurve cmc(const ScoreMatrix& sm);

// Exhaustive threshold search for verification: labels use -1 for same-class
// and +1 for different-class; a pair is called "same" when score < threshold.
// Candidate thresholds are the midpoints of consecutive distinct sorted
// scores plus -inf and +inf.  Returns (best_threshold, accuracy); among
// equally accurate thresholds the lowest wins.
std::pair<double, double> verification_accuracy(const std::vector<double>& scores,
                                                const std::vector<int>& labels);

// Mean of the pairwise scores between one still sample and a set of frames
// from the opposite domain.
double point_to_set_score(const ModelState& state, const Sample& still,
                          const std::vector<Sample>& frames);

}  // namespace gsim
