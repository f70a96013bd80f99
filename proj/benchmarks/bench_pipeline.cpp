// Microbenchmarks for the hot paths: scoring (with and without cached
// projections), the feature-net forward pass, the two gradient
// implementations, and a full probe-vs-gallery score matrix.
//
//   ./gsim_bench                      # everything
//   ./gsim_bench --benchmark_filter=Score

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "gsim/dataio.hpp"
#include "gsim/evalkit.hpp"
#include "gsim/featnet.hpp"
#include "gsim/rng.hpp"
#include "gsim/runconfig.hpp"
#include "gsim/simcore.hpp"
#include "gsim/trainer.hpp"

namespace {

using namespace gsim;

Matrix random_matrix(Rng& rng, int rows, int cols) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
    }
    return m;
}

Vector random_vector(Rng& rng, int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.normal();
    return v;
}

SimilarityComponents random_components(Rng& rng, int r) {
    SimilarityComponents phi;
    phi.l_a = random_matrix(rng, r, r);
    phi.l_b = random_matrix(rng, r, r);
    phi.l_cx = random_matrix(rng, r, r);
    phi.l_cy = random_matrix(rng, r, r);
    phi.d = random_vector(rng, r);
    phi.e = random_vector(rng, r);
    phi.f = -1.9;
    return phi;
}

// A trained-shape model and a synthetic dataset sized for steady-state
// timing rather than statistical quality.
struct Pipeline {
    Dataset dataset;
    ModelState state;
    std::vector<PairLabel> batch;

    Pipeline() {
        RunConfig cfg = RunConfig::defaults();
        cfg.set("data.num_classes", "20");
        cfg.set("data.samples_per_class_x", "4");
        cfg.set("data.samples_per_class_y", "4");
        dataset = generate_synthetic(cfg.synth_spec());

        TrainConfig tc = cfg.train_config();
        state = init_state(cfg.net_shape(dataset.dim_x, dataset.dim_y), tc);

        BatchScheme scheme;
        scheme.k_hat = 10;
        scheme.o1 = 2;
        scheme.o2 = 2;
        scheme.pairs_per_anchor = 6;
        batch = generate_batch(dataset, scheme, 7);
    }
};

const Pipeline& pipeline() {
    static const Pipeline p;
    return p;
}

void BM_ScoreFactorized(benchmark::State& state) {
    const int r = static_cast<int>(state.range(0));
    Rng rng(1);
    const SimilarityComponents phi = random_components(rng, r);
    const Vector fx = random_vector(rng, r);
    const Vector fy = random_vector(rng, r);
    for (auto _ : state) {
        benchmark::DoNotOptimize(score_factorized(phi, fx, fy));
    }
}
BENCHMARK(BM_ScoreFactorized)->Arg(16)->Arg(64);

// The matching-time path: gallery projections are cached, so each comparison
// is two dot products and a handful of adds.
void BM_ScoreProjected(benchmark::State& state) {
    const int r = static_cast<int>(state.range(0));
    Rng rng(1);
    const SimilarityComponents phi = random_components(rng, r);
    const ProjectedComponents px = project_components(phi, random_vector(rng, r), Domain::X);
    const ProjectedComponents py = project_components(phi, random_vector(rng, r), Domain::Y);
    for (auto _ : state) {
        benchmark::DoNotOptimize(score_projected(px, py, phi.f));
    }
}
BENCHMARK(BM_ScoreProjected)->Arg(16)->Arg(64);

void BM_ProjectComponents(benchmark::State& state) {
    const int r = static_cast<int>(state.range(0));
    Rng rng(1);
    const SimilarityComponents phi = random_components(rng, r);
    const Vector feature = random_vector(rng, r);
    for (auto _ : state) {
        benchmark::DoNotOptimize(project_components(phi, feature, Domain::X));
    }
}
BENCHMARK(BM_ProjectComponents)->Arg(16)->Arg(64);

void BM_ForwardPass(benchmark::State& state) {
    const Pipeline& p = pipeline();
    const Vector& raw = p.dataset.samples.front().raw;
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward(p.state.net, raw, Domain::X));
    }
}
BENCHMARK(BM_ForwardPass);

// The production batch gradient shares per-sample work across pairs...
void BM_SampleGradient(benchmark::State& state) {
    const Pipeline& p = pipeline();
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_gradient(p.state, p.batch, p.dataset.samples));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.batch.size()));
}
BENCHMARK(BM_SampleGradient);

// ...whereas the reference oracle backpropagates every pair independently.
void BM_PairGradientOracle(benchmark::State& state) {
    const Pipeline& p = pipeline();
    for (auto _ : state) {
        benchmark::DoNotOptimize(pair_gradient_oracle(p.state, p.batch, p.dataset.samples));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.batch.size()));
}
BENCHMARK(BM_PairGradientOracle);

void BM_ScoreAll(benchmark::State& state) {
    const Pipeline& p = pipeline();
    std::vector<Sample> probes;
    std::vector<Sample> gallery;
    for (const Sample& s : p.dataset.samples) {
        if (s.domain == Domain::X && probes.size() < 60) probes.push_back(s);
        if (s.domain == Domain::Y && gallery.size() < 60) gallery.push_back(s);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(score_all(p.state, probes, gallery));
    }
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(probes.size() * gallery.size()));
}
BENCHMARK(BM_ScoreAll);

}  // namespace

BENCHMARK_MAIN();
