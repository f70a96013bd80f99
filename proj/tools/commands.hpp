#pragma once

// The five gsim subcommands plus the evaluation-protocol helpers they share
// with the acceptance harness.  Commands print to stdout, throw
// ValidationError / IoError on failure (main maps them to exit codes 1 / 2),
// and return the process exit code on the paths that decide pass/fail
// themselves (grad-check).

#include <cstdint>
#include <string>
#include <vector>

#include "gsim/evalkit.hpp"
#include "gsim/runconfig.hpp"

namespace gsim::cli {

// Print every effective key as a `config <key> <value>` line so any run can
// be reproduced from its own output.
void echo_config(const RunConfig& cfg);

// The evaluation classes: the last `holdout` ids in ascending class order
// (training uses the rest).  holdout = 0 means every class.
std::vector<int> holdout_class_ids(const Dataset& dataset, int holdout);

// Retrieval protocol: per split, the gallery takes one random Y-sample per
// evaluation class and the probes are all X-samples of those classes;
// curves are averaged over `splits` splits seeded seed, seed+1, ...
// (so a single-split run at seed+k reproduces split k exactly).
CmcCurve averaged_cmc(const ModelState& state, const Dataset& dataset,
                      const std::vector<int>& eval_classes, int splits, std::uint64_t seed);

// Verification protocol: every same-class cross-domain pair among the
// evaluation classes as positives, an equal number of seeded random
// different-class pairs as negatives.
void verification_pairs(const ModelState& state, const Dataset& dataset,
                        const std::vector<int>& eval_classes, std::uint64_t seed,
                        std::vector<double>& scores, std::vector<int>& labels);

int cmd_gen_data(const RunConfig& cfg, const std::string& out_path);
int cmd_train(const RunConfig& cfg, const std::string& data_path, const std::string& model_out,
              const std::string& trace_out);
int cmd_eval(const RunConfig& cfg, const std::string& model_path, const std::string& data_path,
             const std::string& mode);
int cmd_score(const std::string& model_path, const std::string& x_path,
              const std::string& y_path);
int cmd_grad_check(const RunConfig& cfg, const std::string& data_path, bool corrupt);

}  // namespace gsim::cli
