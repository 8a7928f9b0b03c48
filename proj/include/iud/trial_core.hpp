#pragma once

#include "iud/rng.hpp"
#include "iud/types.hpp"

namespace iud {

// Successes and failures per (treatment, stratum); the sufficient statistic of
// the design. Indices are zero-based throughout the library.
struct CountsTensor {
    CountMatrix successes;
    CountMatrix failures;

    CountsTensor() = default;
    CountsTensor(Index treatments, Index strata)
        : successes(CountMatrix::Zero(treatments, strata)),
          failures(CountMatrix::Zero(treatments, strata)) {}

    Index treatments() const { return successes.rows(); }
    Index strata() const { return successes.cols(); }

    CountMatrix assignments() const { return successes + failures; }
    Count assigned(Index j, Index h) const { return successes(j, h) + failures(j, h); }
    Count total() const { return successes.sum() + failures.sum(); }

    void check_index(Index j, Index h) const;

    friend bool operator==(const CountsTensor& a, const CountsTensor& b) {
        return a.successes == b.successes && a.failures == b.failures;
    }
};

struct TrialState {
    Count step = 0;
    CountsTensor counts;
    Xoshiro256 rng;

    TrialState() = default;
    TrialState(Index treatments, Index strata, std::uint64_t seed)
        : counts(treatments, strata), rng(seed) {}

    // In-place form of record_outcome.
    void record(Index h, Index j, bool success);
};

// Returns the state after one more patient in stratum h on treatment j.
// Throws std::out_of_range on bad indices.
TrialState record_outcome(TrialState state, Index h, Index j, bool success);

// S/N for one cell; 0 when N = 0.
double theta_hat(const CountsTensor& counts, Index j, Index h);

// Success rate of treatment j over every stratum except h; 0 when empty.
double theta_hat_outside(const CountsTensor& counts, Index j, Index h);

// All cells at once, same zero-count convention.
Matrix theta_hat_matrix(const CountsTensor& counts);

} // namespace iud
