#include "pada/variance_stats.hpp"

#include "pada/errors.hpp"

namespace pada {

bool GradVarTracker::in_scope(const std::string& name) const {
    if (scope_ == GvScope::All) return true;
    return name.rfind("edge", 0) == 0;  // candidate-op params only
}

void GradVarTracker::record(const GradientSet& grads) {
    for (const auto& [name, g] : grads) {
        if (!in_scope(name)) continue;
        Moments& m = moments_[name];
        if (m.s == 0) {
            m.mean.assign(g.data.size(), 0.0);
            m.m2.assign(g.data.size(), 0.0);
        } else if (m.mean.size() != g.data.size()) {
            throw UsageError("GradVarTracker: size change for parameter '" + name + "'");
        }
        ++m.s;
        const double inv_s = 1.0 / static_cast<double>(m.s);
        for (std::size_t i = 0; i < g.data.size(); ++i) {
            const double d = g.data[i] - m.mean[i];
            m.mean[i] += d * inv_s;
            m.m2[i] += d * (g.data[i] - m.mean[i]);
        }
    }
}

double GradVarTracker::parameter_variance(const std::string& name) const {
    auto it = moments_.find(name);
    if (it == moments_.end() || it->second.s < 2)
        throw NumericError("GradVarTracker: insufficient samples for parameter '" +
                           name + "'");
    const Moments& m = it->second;
    double sum = 0.0;
    for (double v : m.m2) sum += v;
    return sum / (static_cast<double>(m.s) * static_cast<double>(m.m2.size()));
}

double GradVarTracker::supernet_gv() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& [name, m] : moments_) {
        if (m.s < 2) continue;
        sum += parameter_variance(name);
        ++n;
    }
    if (n == 0)
        throw NumericError(
            "GradVarTracker: insufficient samples (no parameter recorded twice)");
    return sum / static_cast<double>(n);
}

bool GradVarTracker::has_eligible() const {
    for (const auto& [name, m] : moments_)
        if (m.s >= 2) return true;
    return false;
}

std::size_t GradVarTracker::count(const std::string& name) const {
    auto it = moments_.find(name);
    return it == moments_.end() ? 0 : it->second.s;
}

void GradVarTracker::reset() { moments_.clear(); }

}  // namespace pada
