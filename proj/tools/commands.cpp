#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "gsim/dataio.hpp"
#include "gsim/rng.hpp"
#include "gsim/trainer.hpp"

namespace gsim::cli {

namespace {

constexpr double kGradCheckTolerance = 1e-6;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Grad-check verifies the gradient implementation, so it wants a model with
// O(1) activations everywhere: the training-time init (tiny final-layer
// weights) pushes the pre-normalization output so close to zero that the
// normalization's curvature would swamp a central difference.
ModelState random_check_state(const NetShape& shape, double f, std::uint64_t seed) {
    shape.validate();
    Rng rng(seed);
    ModelState state;
    state.net.normalize_output = shape.normalize_output;
    auto build = [&](const std::vector<LayerSpec>& specs, std::vector<Layer>& out) {
        for (const LayerSpec& spec : specs) {
            Layer layer;
            layer.activation = spec.activation;
            layer.w.resize(spec.out_dim, spec.in_dim);
            for (int i = 0; i < spec.out_dim; ++i) {
                for (int j = 0; j < spec.in_dim; ++j) layer.w(i, j) = rng.normal(0.0, 0.3);
            }
            layer.b.resize(spec.out_dim);
            for (int i = 0; i < spec.out_dim; ++i) layer.b(i) = rng.normal(0.0, 0.1);
            out.push_back(std::move(layer));
        }
    };
    build(shape.branch_x, state.net.branch_x);
    build(shape.branch_y, state.net.branch_y);
    build(shape.shared, state.net.shared);

    const int r = state.net.output_dim();
    auto draw_mat = [&] {
        Matrix m(r, r);
        for (int i = 0; i < r; ++i) {
            for (int j = 0; j < r; ++j) m(i, j) = rng.normal(0.0, 0.3);
        }
        return m;
    };
    auto draw_vec = [&] {
        Vector v(r);
        for (int i = 0; i < r; ++i) v(i) = rng.normal(0.0, 0.3);
        return v;
    };
    state.phi.l_a = draw_mat();
    state.phi.l_b = draw_mat();
    state.phi.l_cx = draw_mat();
    state.phi.l_cy = draw_mat();
    state.phi.d = draw_vec();
    state.phi.e = draw_vec();
    state.phi.f = f;
    return state;
}

void check_model_matches_data(const ModelState& state, const Dataset& dataset) {
    if (state.net.input_dim(Domain::X) != dataset.dim_x ||
        state.net.input_dim(Domain::Y) != dataset.dim_y) {
        throw ValidationError(
            "model expects inputs of dimension " + std::to_string(state.net.input_dim(Domain::X)) +
            "/" + std::to_string(state.net.input_dim(Domain::Y)) + " (X/Y) but the dataset has " +
            std::to_string(dataset.dim_x) + "/" + std::to_string(dataset.dim_y));
    }
}

}  // namespace

void echo_config(const RunConfig& cfg) {
    for (const auto& [key, value] : cfg.values()) {
        std::printf("config\t%s\t%s\n", key.c_str(), value.c_str());
    }
}

std::vector<int> holdout_class_ids(const Dataset& dataset, int holdout) {
    std::vector<int> classes = dataset.class_ids();
    if (holdout < 0) throw ValidationError("data.holdout_classes must be >= 0");
    if (holdout == 0) return classes;
    if (holdout > static_cast<int>(classes.size())) {
        throw ValidationError("data.holdout_classes is " + std::to_string(holdout) +
                              " but the dataset has only " + std::to_string(classes.size()) +
                              " classes");
    }
    return {classes.end() - holdout, classes.end()};
}

CmcCurve averaged_cmc(const ModelState& state, const Dataset& dataset,
                      const std::vector<int>& eval_classes, int splits, std::uint64_t seed) {
    if (splits <= 0) throw ValidationError("eval.splits must be positive");
    if (eval_classes.empty()) throw ValidationError("no evaluation classes");

    std::vector<Sample> probes;
    for (int c : eval_classes) {
        for (int idx : dataset.members(c, Domain::X)) probes.push_back(dataset.samples[idx]);
    }
    if (probes.empty()) throw ValidationError("evaluation classes contain no X-samples");

    CmcCurve averaged;
    averaged.rank_acc.assign(eval_classes.size(), 0.0);
    for (int s = 0; s < splits; ++s) {
        Rng rng(seed + static_cast<std::uint64_t>(s));
        std::vector<Sample> gallery;
        for (int c : eval_classes) {
            const std::vector<int> members = dataset.members(c, Domain::Y);
            if (members.empty()) {
                throw ValidationError("evaluation class " + std::to_string(c) +
                                      " has no Y-samples for the gallery");
            }
            const int pick = members[rng.uniform_int(0, static_cast<int>(members.size()) - 1)];
            gallery.push_back(dataset.samples[pick]);
        }
        const CmcCurve curve = cmc(score_all(state, probes, gallery));
        for (std::size_t k = 0; k < curve.rank_acc.size(); ++k) {
            averaged.rank_acc[k] += curve.rank_acc[k] / static_cast<double>(splits);
        }
    }
    return averaged;
}

void verification_pairs(const ModelState& state, const Dataset& dataset,
                        const std::vector<int>& eval_classes, std::uint64_t seed,
                        std::vector<double>& scores, std::vector<int>& labels) {
    if (eval_classes.size() < 2) {
        throw ValidationError("verification needs at least 2 evaluation classes");
    }
    scores.clear();
    labels.clear();

    std::vector<std::vector<int>> xs(eval_classes.size()), ys(eval_classes.size());
    for (std::size_t c = 0; c < eval_classes.size(); ++c) {
        xs[c] = dataset.members(eval_classes[c], Domain::X);
        ys[c] = dataset.members(eval_classes[c], Domain::Y);
        if (xs[c].empty() || ys[c].empty()) {
            throw ValidationError("evaluation class " + std::to_string(eval_classes[c]) +
                                  " is missing samples in one domain");
        }
    }

    auto pair_score = [&](int xi, int yi) {
        const Vector fx = forward(state.net, dataset.samples[xi].raw, Domain::X);
        const Vector fy = forward(state.net, dataset.samples[yi].raw, Domain::Y);
        return score_factorized(state.phi, fx, fy);
    };

    for (std::size_t c = 0; c < eval_classes.size(); ++c) {
        for (int xi : xs[c]) {
            for (int yi : ys[c]) {
                scores.push_back(pair_score(xi, yi));
                labels.push_back(-1);
            }
        }
    }
    const std::size_t positives = scores.size();

    Rng rng(seed);
    const int k = static_cast<int>(eval_classes.size());
    for (std::size_t n = 0; n < positives; ++n) {
        const int ca = rng.uniform_int(0, k - 1);
        int cb = rng.uniform_int(0, k - 2);
        if (cb >= ca) ++cb;
        const int xi = xs[ca][static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(xs[ca].size()) - 1))];
        const int yi = ys[cb][static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(ys[cb].size()) - 1))];
        scores.push_back(pair_score(xi, yi));
        labels.push_back(+1);
    }
}

int cmd_gen_data(const RunConfig& cfg, const std::string& out_path) {
    echo_config(cfg);
    const SynthSpec spec = cfg.synth_spec();
    const Dataset dataset = generate_synthetic(spec);
    save_dataset(dataset, out_path);
    std::printf("classes\t%d\n", spec.num_classes);
    std::printf("samples\t%zu\n", dataset.size());
    std::printf("wrote\t%s\n", out_path.c_str());
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& data_path, const std::string& model_out,
              const std::string& trace_out) {
    echo_config(cfg);
    const Dataset dataset = load_dataset(data_path);
    const TrainConfig train_cfg = cfg.train_config();
    const NetShape shape = cfg.net_shape(dataset.dim_x, dataset.dim_y);

    // Hold out the tail classes for evaluation; train on the rest.
    const int holdout = cfg.get_int("data.holdout_classes");
    const std::vector<int> all_classes = dataset.class_ids();
    if (holdout < 0) throw ValidationError("data.holdout_classes must be >= 0");
    if (holdout >= static_cast<int>(all_classes.size())) {
        throw ValidationError("data.holdout_classes is " + std::to_string(holdout) +
                              " but the dataset has only " + std::to_string(all_classes.size()) +
                              " classes; nothing would be left to train on");
    }
    const std::vector<int> train_classes(all_classes.begin(), all_classes.end() - holdout);
    const Dataset train_set = holdout > 0 ? dataset.filter_classes(train_classes) : dataset;
    std::printf("train_classes\t%zu\n", train_classes.size());

    const TrainResult result = train(train_set, shape, train_cfg);
    save_model(result.state, model_out);
    std::printf("wrote\t%s\n", model_out.c_str());

    const std::string trace_path = trace_out.empty() ? model_out + ".trace" : trace_out;
    std::ofstream trace(trace_path);
    if (!trace) throw IoError("cannot open '" + trace_path + "' for writing");
    for (std::size_t t = 0; t < result.loss_trace.size(); ++t) {
        trace << (t + 1) << '\t' << fmt(result.loss_trace[t]) << '\n';
    }
    trace.flush();
    if (!trace) throw IoError("failed writing to '" + trace_path + "'");
    std::printf("wrote\t%s\n", trace_path.c_str());

    if (!result.loss_trace.empty()) {
        std::printf("final_mean_loss\t%s\n", fmt(result.loss_trace.back()).c_str());
    }
    return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& model_path, const std::string& data_path,
             const std::string& mode) {
    echo_config(cfg);
    const ModelState state = load_model(model_path);
    const Dataset dataset = load_dataset(data_path);
    check_model_matches_data(state, dataset);
    const std::vector<int> eval_classes =
        holdout_class_ids(dataset, cfg.get_int("data.holdout_classes"));
    std::printf("eval_classes\t%zu\n", eval_classes.size());

    if (mode == "cmc") {
        const CmcCurve curve = averaged_cmc(state, dataset, eval_classes,
                                            cfg.get_int("eval.splits"), cfg.get_seed("eval.seed"));
        for (std::size_t k = 0; k < curve.rank_acc.size(); ++k) {
            std::printf("%zu\t%s\n", k + 1, fmt(curve.rank_acc[k]).c_str());
        }
        const auto rank_at = [&](std::size_t r) {
            return curve.rank_acc[std::min(r, curve.rank_acc.size()) - 1];
        };
        std::printf("rank1\t%s\n", fmt(rank_at(1)).c_str());
        std::printf("rank5\t%s\n", fmt(rank_at(5)).c_str());
        std::printf("rank10\t%s\n", fmt(rank_at(10)).c_str());
        return 0;
    }
    if (mode == "verify") {
        std::vector<double> scores;
        std::vector<int> labels;
        verification_pairs(state, dataset, eval_classes, cfg.get_seed("eval.seed"), scores,
                           labels);
        std::printf("pairs\t%zu\n", scores.size());
        const auto [threshold, accuracy] = verification_accuracy(scores, labels);
        std::printf("threshold\t%s\n", fmt(threshold).c_str());
        std::printf("accuracy\t%s\n", fmt(accuracy).c_str());
        return 0;
    }
    throw ValidationError("unknown eval mode '" + mode + "' (expected cmc or verify)");
}

int cmd_score(const std::string& model_path, const std::string& x_path,
              const std::string& y_path) {
    const ModelState state = load_model(model_path);
    const Vector raw_x = load_vector(x_path);
    const Vector raw_y = load_vector(y_path);
    const Vector fx = forward(state.net, raw_x, Domain::X);
    const Vector fy = forward(state.net, raw_y, Domain::Y);
    std::printf("score\t%s\n", fmt(score_factorized(state.phi, fx, fy)).c_str());
    std::printf("note\tlower = more similar\n");
    return 0;
}

int cmd_grad_check(const RunConfig& cfg, const std::string& data_path, bool corrupt) {
    echo_config(cfg);
    const Dataset dataset = load_dataset(data_path);
    const TrainConfig train_cfg = cfg.train_config();
    const NetShape shape = cfg.net_shape(dataset.dim_x, dataset.dim_y);
    const double step = cfg.get_double("grad.step");
    if (!(step > 0.0)) throw ValidationError("grad.step must be positive");
    const std::uint64_t seed = cfg.get_seed("grad.seed");

    const ModelState state = random_check_state(shape, train_cfg.f, mix_seed(seed, 0));
    const std::vector<PairLabel> batch =
        generate_batch(dataset, train_cfg.scheme, mix_seed(seed, 1));
    const std::vector<PairLabel> pairs =
        exclude_kink_pairs(state, batch, dataset.samples, step);
    std::printf("pairs\t%zu\n", pairs.size());
    std::printf("excluded_near_kink\t%zu\n", batch.size() - pairs.size());

    FiniteDiffReport report;
    if (corrupt) {
        // Negative control: bend one analytic gradient entry and confirm the
        // harness notices.
        Gradients bent = objective_gradient(state, pairs, dataset.samples, train_cfg);
        bent.phi.d(0) += 1e-3;
        report = finite_diff_check(state, pairs, dataset.samples, step, train_cfg, &bent);
    } else {
        report = finite_diff_check(state, pairs, dataset.samples, step, train_cfg);
    }

    std::printf("parameters\t%d\n", report.parameters_checked);
    std::printf("max_rel_error\t%s\n", fmt(report.max_rel_error).c_str());
    std::printf("argmax\t%s\n", report.argmax_param.c_str());
    std::printf("analytic\t%s\n", fmt(report.analytic_at_max).c_str());
    std::printf("numeric\t%s\n", fmt(report.numeric_at_max).c_str());
    const bool ok = report.max_rel_error <= kGradCheckTolerance;
    std::printf("verdict\t%s\n", ok ? "pass" : "fail");
    return ok ? 0 : 1;
}

}  // namespace gsim::cli
