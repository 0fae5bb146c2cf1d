#pragma once

#include <string>

#include "steersum/classifier.hpp"
#include "steersum/errors.hpp"
#include "steersum/simplex.hpp"

namespace steersum {

/// What the steering gradient targets: the log-probability of the target
/// class (default, scale-stable) or the raw probability.
enum class GuidanceObjective { LogProb, Prob };

inline std::string to_string(GuidanceObjective o) {
    return o == GuidanceObjective::LogProb ? "logprob" : "prob";
}

inline GuidanceObjective guidance_objective_from_string(const std::string& s) {
    if (s == "logprob") return GuidanceObjective::LogProb;
    if (s == "prob") return GuidanceObjective::Prob;
    throw ConfigError("unknown guidance objective: " + s);
}

/// One modular-control update: s_hat + lambda * grad of the classifier
/// objective for class y, taken with respect to the logits. The classifier
/// parameters are read-only; lambda = 0 returns the input exactly.
inline SimplexSequence control_step(const SimplexSequence& s_hat, Stance y, double lambda,
                                    const StanceClassifier& clf,
                                    GuidanceObjective objective = GuidanceObjective::LogProb) {
    if (lambda < 0.0) throw ConfigError("control lambda must be non-negative");
    if (lambda == 0.0) return s_hat;

    Matrix<double> grad = clf.grad_logprob(y, s_hat);
    if (!grad.same_shape(s_hat.logits)) throw ShapeError("classifier gradient shape does not match input");
    if (objective == GuidanceObjective::Prob) {
        const double py = clf.predict_proba(row_normalize(s_hat))[stance_index(y)];
        scale_inplace(grad, py);
    }
    if (!all_finite(grad)) throw GuidanceNumericError("non-finite classifier gradient");

    SimplexSequence out = s_hat;
    for (std::size_t i = 0; i < out.logits.data.size(); ++i) out.logits.data[i] += lambda * grad.data[i];
    return out;
}

}  // namespace steersum
