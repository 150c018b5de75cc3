#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "pada/tensor.hpp"

namespace pada {

// Which parameters enter the scalar gradient-variance average. Default
// is candidate-op weights only (stem/classifier excluded).
enum class GvScope { CandidateOps, All };

// Streaming per-element gradient moments (Welford), aggregated two
// ways: per-parameter variance = mean over that tensor's elements of
// the per-element population variances, and the supernet scalar =
// unweighted mean of per-parameter variances over parameters seen at
// least twice.
class GradVarTracker {
  public:
    explicit GradVarTracker(GvScope scope = GvScope::CandidateOps) : scope_(scope) {}

    // Folds one training step's gradients into the moments. Parameters
    // outside the scope are ignored entirely.
    void record(const GradientSet& grads);

    // Population variance (M2/S averaged over elements) for one
    // parameter; throws NumericError if it was seen fewer than 2 times.
    double parameter_variance(const std::string& name) const;

    // Mean of parameter_variance over all eligible (S >= 2) parameters;
    // throws NumericError("insufficient samples...") when none qualify.
    double supernet_gv() const;

    // True when at least one in-scope parameter has been recorded twice
    // (i.e. supernet_gv() would succeed).
    bool has_eligible() const;

    std::size_t count(const std::string& name) const;
    void reset();
    GvScope scope() const { return scope_; }

    // Moments for one parameter, exposed for checkpointing.
    struct Moments {
        std::size_t s = 0;          // steps recorded
        std::vector<double> mean;   // per element
        std::vector<double> m2;     // per element, sum of squared deviations
    };
    const std::map<std::string, Moments>& moments() const { return moments_; }
    void restore(std::map<std::string, Moments> m) { moments_ = std::move(m); }

  private:
    bool in_scope(const std::string& name) const;

    GvScope scope_;
    std::map<std::string, Moments> moments_;
};

}  // namespace pada
