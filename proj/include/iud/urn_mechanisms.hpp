#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "iud/betabinom_mle.hpp"
#include "iud/trial_core.hpp"
#include "iud/types.hpp"

namespace iud {

enum class Variant {
    VanishingBorrowing,
    TreatmentSimilarity,
    ModelBased,
    ModelBasedClustered,
    NoBorrowing,
};

enum class PsiKind { Min, Exp, Rational };

std::string_view to_string(Variant variant);
std::string_view to_string(PsiKind kind);

// Similarity thresholds c_n, indexed by the global patient count.
struct CSequence {
    enum class Rule {
        InverseLog, // c_1 = +inf, c_n = 1 / ln n
        Power,      // c_n = scale * n^(-exponent)
    };

    Rule rule = Rule::InverseLog;
    double scale = 1.0;
    double exponent = 0.5;

    // n = 0 (nothing observed yet) is treated as n = 1.
    double operator()(Count n) const;
};

struct MechanismParams {
    Variant variant = Variant::VanishingBorrowing;
    PsiKind psi_kind = PsiKind::Rational;
    double psi_max = 10.0;
    CSequence c_sequence;
    MleOptions mle;
    int refit_every = 1; // model-based refit cadence, in outcomes of the treatment
};

void validate(const MechanismParams& params);

// Borrowed pseudo-counts for one (treatment, stratum) cell. `at_infinity`
// marks the pooled-boundary case: own-stratum weight is zero and the urn
// proportion is phi_success / (phi_success + phi_failure).
struct BorrowTerms {
    double phi_success = 0.0;
    double phi_failure = 0.0;
    bool at_infinity = false;
};

template <typename Scalar>
struct UrnCell {
    Scalar proportion;
    Scalar weight; // rho: weight of the stratum's own success rate
};

template <typename Scalar>
Scalar psi_eval(PsiKind kind, Scalar x, Scalar psi_max) {
    if (x < Scalar(0)) throw std::invalid_argument("psi_eval: negative argument");
    if (!(psi_max > Scalar(0))) throw std::invalid_argument("psi_eval: psi_max must be positive");
    switch (kind) {
    case PsiKind::Min: return x < psi_max ? x : psi_max;
    case PsiKind::Exp: return -psi_max * std::expm1(-x / psi_max);
    case PsiKind::Rational: return x * psi_max / (x + psi_max);
    }
    return Scalar(0);
}

// P = (phi_S + S) / (phi_S + phi_F + N), rho = N / (phi_S + phi_F + N);
// an empty urn gives (1/2, 0).
template <typename Scalar>
UrnCell<Scalar> urn_proportion(Scalar successes, Scalar trials, Scalar phi_success,
                               Scalar phi_failure, bool at_infinity = false) {
    if (phi_success < Scalar(0) || phi_failure < Scalar(0)) {
        throw std::invalid_argument("urn_proportion: negative borrowing term");
    }
    if (at_infinity) {
        return {phi_success / (phi_success + phi_failure), Scalar(0)};
    }
    const Scalar mass = phi_success + phi_failure + trials;
    if (mass <= Scalar(0)) return {Scalar(0.5), Scalar(0)};
    return {(phi_success + successes) / mass, trials / mass};
}

UrnCell<double> urn_proportion(const CountsTensor& counts, const BorrowTerms& terms, Index j,
                               Index h);

BorrowTerms borrow_vanishing(const CountsTensor& counts, Index j, Index h,
                             const MechanismParams& params);

// Strata k != h with |theta_hat(j, k) - theta_hat(j, h)| <= c.
std::vector<Index> similarity_set(const CountsTensor& counts, Index j, Index h, double c);

BorrowTerms borrow_similarity(const CountsTensor& counts, Index j, Index h, double c);

// phi = (alpha_hat, beta_hat) of treatment j, identical for every stratum.
BorrowTerms borrow_model_based(const CountsTensor& counts, Index j, const MleOptions& opts);

// Terms for the clustered model-based variant: the prior fit on block sums plus
// the other members of h's block.
BorrowTerms borrow_model_clustered(const CountsTensor& counts, Index j, Index h,
                                   const MleResult& fit, const Partition& partition);

BorrowTerms borrow_terms_from_fit(const MleResult& fit);

struct UrnProportions {
    Matrix proportion; // J x H
    Matrix weight;     // J x H
};

// Evaluates urn cells for one state while caching the per-treatment Beta fits,
// so that a trial loop refits a treatment only after its own counts change.
class UrnEvaluator {
public:
    explicit UrnEvaluator(MechanismParams params);

    const MechanismParams& params() const { return params_; }

    // Marks treatment j's counts as changed.
    void invalidate(Index j);
    // Forces a refit at the next query regardless of cadence.
    void invalidate_all();

    UrnCell<double> cell(const CountsTensor& counts, Index j, Index h, Count step);
    UrnProportions all(const CountsTensor& counts, Count step);

    // Latest fit of treatment j (model-based variants only).
    const MleResult& fit(const CountsTensor& counts, Index j, Count step);

private:
    struct FitCache {
        std::optional<MleResult> fit;
        Partition partition;
        int pending = 0; // outcomes since the last refit
        bool forced = true;
    };

    void ensure_size(Index treatments);
    const Partition& partition_for(const CountsTensor& counts, Index j, Count step,
                                   Partition& scratch) const;

    MechanismParams params_;
    std::vector<FitCache> cache_;
};

UrnProportions urn_proportions_all(const CountsTensor& counts, const MechanismParams& params,
                                   Count step);

} // namespace iud
