#pragma once

#include "pada/config.hpp"
#include "pada/dataset.hpp"
#include "pada/supernet.hpp"

namespace pada {

struct SearchOutcome {
    Path best;
    double score = 0.0;       // inherited-weight eval accuracy
    std::size_t evaluated = 0;  // distinct forward evaluations (cache misses)
};

// Uniform path draws, `population` candidates per round for `rounds`
// rounds; best inherited accuracy wins, first-found on ties. Candidates
// over the parameter budget are resampled (bounded retries).
SearchOutcome random_search(const Supernet& net, const SearchConfig& cfg,
                            const Dataset& eval_data, RngStream& rng);

// (mu+lambda) elitist evolution: parents are drawn from the top half of
// the current population; each generation adds n_mutate mutants and
// n_crossover crossover children, then the best `population` survive.
// When the whole space fits inside the population, the initial
// population is the exhaustive enumeration.
SearchOutcome evolutionary_search(const Supernet& net, const SearchConfig& cfg,
                                  const Dataset& eval_data, RngStream& rng);

}  // namespace pada
