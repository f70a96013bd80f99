#include "gsim/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gsim {

namespace {

// All samples on one side must share a domain; returns it.
Domain side_domain(const std::vector<Sample>& side, const char* what) {
    if (side.empty()) throw ValidationError(std::string(what) + " list is empty");
    const Domain domain = side.front().domain;
    for (std::size_t i = 1; i < side.size(); ++i) {
        if (side[i].domain != domain) {
            throw ValidationError(std::string(what) + " " + std::to_string(i) +
                                  " is from domain " + domain_name(side[i].domain) +
                                  " but the first entry is from domain " + domain_name(domain));
        }
    }
    return domain;
}

ProjectedComponents project_sample(const ModelState& state, const Sample& sample) {
    const Vector feature = forward(state.net, sample.raw, sample.domain);
    return project_components(state.phi, feature, sample.domain);
}

}  // namespace

ScoreMatrix score_all(const ModelState& state, const std::vector<Sample>& probes,
                      const std::vector<Sample>& gallery) {
    const Domain probe_domain = side_domain(probes, "probe");
    const Domain gallery_domain = side_domain(gallery, "gallery item");
    if (probe_domain == gallery_domain) {
        throw ValidationError("probes and gallery are both from domain " +
                              std::string(domain_name(probe_domain)) +
                              "; the two sides must come from opposite domains");
    }

    std::vector<ProjectedComponents> gallery_proj;
    gallery_proj.reserve(gallery.size());
    for (const Sample& g : gallery) gallery_proj.push_back(project_sample(state, g));

    // Keep the X-domain projection in score_projected's X slot no matter
    // which side plays the probes, so an entry is bit-identical to scoring
    // the same (x, y) pair directly.
    const bool probes_are_x = probe_domain == Domain::X;

    ScoreMatrix sm;
    sm.scores.resize(static_cast<Eigen::Index>(probes.size()),
                     static_cast<Eigen::Index>(gallery.size()));
    sm.probe_classes.reserve(probes.size());
    sm.gallery_classes.reserve(gallery.size());
    for (const Sample& g : gallery) sm.gallery_classes.push_back(g.class_id);
    for (std::size_t i = 0; i < probes.size(); ++i) {
        sm.probe_classes.push_back(probes[i].class_id);
        const ProjectedComponents pp = project_sample(state, probes[i]);
        for (std::size_t j = 0; j < gallery.size(); ++j) {
            sm.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                probes_are_x ? score_projected(pp, gallery_proj[j], state.phi.f)
                             : score_projected(gallery_proj[j], pp, state.phi.f);
        }
    }
    return sm;
}

CmcCurve cmc(const ScoreMatrix& sm) {
    const int num_probes = static_cast<int>(sm.scores.rows());
    const int num_gallery = static_cast<int>(sm.scores.cols());
    if (num_probes <= 0 || num_gallery <= 0) {
        throw ValidationError("score matrix is empty");
    }
    if (static_cast<int>(sm.probe_classes.size()) != num_probes ||
        static_cast<int>(sm.gallery_classes.size()) != num_gallery) {
        throw ValidationError("score matrix class labels do not match its shape");
    }
    require_finite(sm.scores, "score matrix");

    std::vector<int> hits(static_cast<std::size_t>(num_gallery), 0);
    for (int i = 0; i < num_probes; ++i) {
        // Best same-class gallery item: lowest score, ties to the lowest index.
        int best = -1;
        for (int j = 0; j < num_gallery; ++j) {
            if (sm.gallery_classes[j] != sm.probe_classes[i]) continue;
            if (best < 0 || sm.scores(i, j) < sm.scores(i, best)) best = j;
        }
        if (best < 0) {
            throw ValidationError("probe " + std::to_string(i) + " (class " +
                                  std::to_string(sm.probe_classes[i]) +
                                  ") has no same-class gallery item");
        }
        // Its rank in the ascending ordering with index tie-breaks.
        int rank = 0;
        for (int j = 0; j < num_gallery; ++j) {
            if (j == best) continue;
            if (sm.scores(i, j) < sm.scores(i, best) ||
                (sm.scores(i, j) == sm.scores(i, best) && j < best)) {
                ++rank;
            }
        }
        ++hits[static_cast<std::size_t>(rank)];
    }

    CmcCurve curve;
    curve.rank_acc.resize(static_cast<std::size_t>(num_gallery));
    int cumulative = 0;
    for (int k = 0; k < num_gallery; ++k) {
        cumulative += hits[static_cast<std::size_t>(k)];
        curve.rank_acc[static_cast<std::size_t>(k)] =
            static_cast<double>(cumulative) / static_cast<double>(num_probes);
    }
    return curve;
}

std::pair<double, double> verification_accuracy(const std::vector<double>& scores,
                                                const std::vector<int>& labels) {
    if (scores.empty()) throw ValidationError("verification needs at least one scored pair");
    if (scores.size() != labels.size()) {
        throw ValidationError("scores and labels differ in length: " +
                              std::to_string(scores.size()) + " vs " +
                              std::to_string(labels.size()));
    }
    const int n = static_cast<int>(scores.size());
    for (int i = 0; i < n; ++i) {
        if (!std::isfinite(scores[i])) {
            throw ValidationError("score " + std::to_string(i) + " is not finite");
        }
        if (labels[i] != -1 && labels[i] != 1) {
            throw ValidationError("label " + std::to_string(i) + " is " +
                                  std::to_string(labels[i]) + "; labels must be -1 or +1");
        }
    }

    // Sort by score and sweep the cut: with threshold between positions k-1
    // and k, the first k pairs are called "same".
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return scores[static_cast<std::size_t>(a)] <
                                         scores[static_cast<std::size_t>(b)]; });

    int total_same = 0;
    for (int label : labels) {
        if (label == -1) ++total_same;
    }

    const double inf = std::numeric_limits<double>::infinity();
    // k = 0 (threshold -inf): everything is called "different".
    double best_threshold = -inf;
    int best_correct = n - total_same;
    int same_below = 0;
    for (int k = 1; k <= n; ++k) {
        if (labels[static_cast<std::size_t>(order[static_cast<std::size_t>(k - 1)])] == -1) {
            ++same_below;
        }
        // A threshold strictly separating positions k-1 and k exists only at
        // a strict score increase (or past the end, i.e. +inf).
        double threshold;
        if (k == n) {
            threshold = inf;
        } else {
            const double lo = scores[static_cast<std::size_t>(order[static_cast<std::size_t>(k - 1)])];
            const double hi = scores[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
            if (!(lo < hi)) continue;
            threshold = lo + 0.5 * (hi - lo);
            if (!(lo < threshold)) continue;  // midpoint collapsed onto lo
        }
        const int correct = same_below + (n - total_same) - (k - same_below);
        if (correct > best_correct) {
            best_correct = correct;
            best_threshold = threshold;
        }
    }
    return {best_threshold, static_cast<double>(best_correct) / static_cast<double>(n)};
}

double point_to_set_score(const ModelState& state, const Sample& still,
                          const std::vector<Sample>& frames) {
    if (frames.empty()) throw ValidationError("frame set is empty");
    const Domain frame_domain = side_domain(frames, "frame");
    if (frame_domain == still.domain) {
        throw ValidationError("frames must come from the domain opposite the still sample");
    }
    const bool still_is_x = still.domain == Domain::X;
    const ProjectedComponents still_proj = project_sample(state, still);
    double sum = 0.0;
    for (const Sample& frame : frames) {
        const ProjectedComponents frame_proj = project_sample(state, frame);
        sum += still_is_x ? score_projected(still_proj, frame_proj, state.phi.f)
                          : score_projected(frame_proj, still_proj, state.phi.f);
    }
    return sum / static_cast<double>(frames.size());
}

}  // namespace gsim
