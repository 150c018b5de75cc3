#include "pada/search.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "pada/errors.hpp"
#include "pada/nn.hpp"
#include "pada/ranking.hpp"

namespace pada {
namespace {

constexpr std::size_t kBudgetRetries = 1000;

// Deterministic eval subset: every (n/k)-th sample, so class-major
// synthetic data stays class-balanced.
Batch eval_batch_for(const Dataset& eval_data, std::size_t subset) {
    const std::size_t n = eval_data.n();
    std::vector<std::size_t> idx;
    if (subset == 0 || subset >= n) {
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), 0);
    } else {
        idx.reserve(subset);
        for (std::size_t i = 0; i < subset; ++i) idx.push_back(i * n / subset);
    }
    return make_batch(eval_data, idx);
}

class ScoreCache {
  public:
    ScoreCache(const Supernet& net, Batch batch) : net_(net), batch_(std::move(batch)) {}

    double score(const Path& p) {
        auto it = cache_.find(p.op_index);
        if (it != cache_.end()) return it->second;
        const Tensor logits = forward(net_.params, net_.spec, p, batch_).logits;
        const double acc = accuracy(logits, batch_.labels);
        cache_.emplace(p.op_index, acc);
        ++misses_;
        return acc;
    }

    std::size_t misses() const { return misses_; }

  private:
    const Supernet& net_;
    Batch batch_;
    std::map<std::vector<std::size_t>, double> cache_;
    std::size_t misses_ = 0;
};

bool within_budget(const CellSpec& spec, const Path& p, std::size_t budget) {
    return budget == 0 || path_param_count(spec, p) <= budget;
}

Path random_path(const CellSpec& spec, RngStream& rng) {
    Path p;
    p.op_index.resize(spec.n_edges());
    for (std::size_t e = 0; e < spec.n_edges(); ++e)
        p.op_index[e] = rng.below(spec.n_ops());
    return p;
}

Path random_path_in_budget(const CellSpec& spec, std::size_t budget, RngStream& rng) {
    for (std::size_t tries = 0; tries < kBudgetRetries; ++tries) {
        Path p = random_path(spec, rng);
        if (within_budget(spec, p, budget)) return p;
    }
    throw UsageError("search: no path satisfied param_budget=" + std::to_string(budget) +
                     " within " + std::to_string(kBudgetRetries) + " draws");
}

}  // namespace

SearchOutcome random_search(const Supernet& net, const SearchConfig& cfg,
                            const Dataset& eval_data, RngStream& rng) {
    cfg.validate();
    ScoreCache cache(net, eval_batch_for(eval_data, cfg.eval_subset_size));

    SearchOutcome out;
    bool have_best = false;
    for (std::size_t round = 0; round < cfg.rounds; ++round) {
        for (std::size_t c = 0; c < cfg.population; ++c) {
            const Path p = random_path_in_budget(net.spec, cfg.param_budget, rng);
            const double s = cache.score(p);
            if (!have_best || s > out.score) {
                out.best = p;
                out.score = s;
                have_best = true;
            }
        }
    }
    out.evaluated = cache.misses();
    return out;
}

SearchOutcome evolutionary_search(const Supernet& net, const SearchConfig& cfg,
                                  const Dataset& eval_data, RngStream& rng) {
    cfg.validate();
    if (cfg.strategy != "evolution")
        throw UsageError("evolutionary_search called with strategy=" + cfg.strategy);
    ScoreCache cache(net, eval_batch_for(eval_data, cfg.eval_subset_size));
    const CellSpec& spec = net.spec;

    struct Member {
        Path path;
        double score;
    };
    std::vector<Member> pop;

    // exhaustive init when the space fits in the population — the
    // degenerate case where evolution must return the true argmax
    if (spec.space_size() <= cfg.population &&
        spec.space_size() <= spec.enumeration_cap) {
        for (const Path& p : enumerate_paths(spec)) {
            if (!within_budget(spec, p, cfg.param_budget)) continue;
            pop.push_back({p, cache.score(p)});
        }
        if (pop.empty())
            throw UsageError("search: param_budget excludes every path in the space");
    } else {
        for (std::size_t i = 0; i < cfg.population; ++i) {
            Path p = random_path_in_budget(spec, cfg.param_budget, rng);
            pop.push_back({p, cache.score(p)});
        }
    }

    auto by_score_desc = [](const Member& a, const Member& b) {
        return a.score > b.score;
    };

    SearchOutcome out;
    out.best = pop.front().path;
    out.score = pop.front().score;
    for (const Member& m : pop)
        if (m.score > out.score) {
            out.best = m.path;
            out.score = m.score;
        }

    for (std::size_t gen = 0; gen < cfg.rounds; ++gen) {
        std::stable_sort(pop.begin(), pop.end(), by_score_desc);
        const std::size_t pool = std::max<std::size_t>(1, (pop.size() + 1) / 2);

        std::vector<Member> children;
        for (std::size_t i = 0; i < cfg.n_mutate; ++i) {
            Path child;
            bool ok = false;
            for (std::size_t tries = 0; tries < kBudgetRetries; ++tries) {
                const Path& parent = pop[rng.below(pool)].path;
                child = mutate(parent, cfg.mutation_rate, spec, rng);
                if (within_budget(spec, child, cfg.param_budget)) {
                    ok = true;
                    break;
                }
            }
            if (!ok)
                throw UsageError("evolution: mutation produced no budget-valid child in " +
                                 std::to_string(kBudgetRetries) + " tries");
            children.push_back({child, cache.score(child)});
        }
        for (std::size_t i = 0; i < cfg.n_crossover; ++i) {
            Path child;
            bool ok = false;
            for (std::size_t tries = 0; tries < kBudgetRetries; ++tries) {
                const Path& a = pop[rng.below(pool)].path;
                const Path& b = pop[rng.below(pool)].path;
                child = crossover(a, b, spec, rng);
                if (within_budget(spec, child, cfg.param_budget)) {
                    ok = true;
                    break;
                }
            }
            if (!ok)
                throw UsageError("evolution: crossover produced no budget-valid child in " +
                                 std::to_string(kBudgetRetries) + " tries");
            children.push_back({child, cache.score(child)});
        }

        for (Member& c : children) {
            if (c.score > out.score) {
                out.best = c.path;
                out.score = c.score;
            }
            pop.push_back(std::move(c));
        }
        // survivors: best `population` of parents+children (elitist)
        std::stable_sort(pop.begin(), pop.end(), by_score_desc);
        if (pop.size() > cfg.population) pop.resize(cfg.population);
    }

    out.evaluated = cache.misses();
    return out;
}

}  // namespace pada
