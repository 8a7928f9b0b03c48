#include "iud/trial_core.hpp"

#include <stdexcept>
#include <string>

namespace iud {

void CountsTensor::check_index(Index j, Index h) const {
    if (j < 0 || j >= treatments() || h < 0 || h >= strata()) {
        throw std::out_of_range("cell (" + std::to_string(j) + ", " + std::to_string(h) +
                                ") outside " + std::to_string(treatments()) + "x" +
                                std::to_string(strata()) + " counts");
    }
}

void TrialState::record(Index h, Index j, bool success) {
    counts.check_index(j, h);
    if (success) {
        ++counts.successes(j, h);
    } else {
        ++counts.failures(j, h);
    }
    ++step;
}

TrialState record_outcome(TrialState state, Index h, Index j, bool success) {
    state.record(h, j, success);
    return state;
}

double theta_hat(const CountsTensor& counts, Index j, Index h) {
    counts.check_index(j, h);
    const Count n = counts.assigned(j, h);
    return n == 0 ? 0.0 : static_cast<double>(counts.successes(j, h)) / static_cast<double>(n);
}

double theta_hat_outside(const CountsTensor& counts, Index j, Index h) {
    counts.check_index(j, h);
    Count s = 0;
    Count n = 0;
    for (Index k = 0; k < counts.strata(); ++k) {
        if (k == h) continue;
        s += counts.successes(j, k);
        n += counts.assigned(j, k);
    }
    return n == 0 ? 0.0 : static_cast<double>(s) / static_cast<double>(n);
}

Matrix theta_hat_matrix(const CountsTensor& counts) {
    Matrix rates(counts.treatments(), counts.strata());
    for (Index j = 0; j < rates.rows(); ++j) {
        for (Index h = 0; h < rates.cols(); ++h) {
            const Count n = counts.assigned(j, h);
            rates(j, h) = n == 0 ? 0.0
                                 : static_cast<double>(counts.successes(j, h)) /
                                       static_cast<double>(n);
        }
    }
    return rates;
}

} // namespace iud
