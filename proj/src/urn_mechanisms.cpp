#include "iud/urn_mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace iud {

std::string_view to_string(Variant variant) {
    switch (variant) {
    case Variant::VanishingBorrowing: return "VanishingBorrowing";
    case Variant::TreatmentSimilarity: return "TreatmentSimilarity";
    case Variant::ModelBased: return "ModelBased";
    case Variant::ModelBasedClustered: return "ModelBasedClustered";
    case Variant::NoBorrowing: return "NoBorrowing";
    }
    return "Unknown";
}

std::string_view to_string(PsiKind kind) {
    switch (kind) {
    case PsiKind::Min: return "min";
    case PsiKind::Exp: return "exp";
    case PsiKind::Rational: return "rational";
    }
    return "unknown";
}

double CSequence::operator()(Count n) const {
    const double m = static_cast<double>(n < 1 ? 1 : n);
    switch (rule) {
    case Rule::InverseLog:
        return m <= 1.0 ? std::numeric_limits<double>::infinity() : 1.0 / std::log(m);
    case Rule::Power:
        return scale * std::pow(m, -exponent);
    }
    return std::numeric_limits<double>::infinity();
}

void validate(const MechanismParams& params) {
    if (!(params.psi_max > 0.0)) throw std::invalid_argument("mechanism: psi_max must be positive");
    if (params.c_sequence.rule == CSequence::Rule::Power &&
        !(params.c_sequence.scale > 0.0 && params.c_sequence.exponent >= 0.0)) {
        throw std::invalid_argument("mechanism: power c-rule needs scale > 0, exponent >= 0");
    }
    if (params.refit_every < 1) throw std::invalid_argument("mechanism: refit_every must be >= 1");
    validate(params.mle);
}

UrnCell<double> urn_proportion(const CountsTensor& counts, const BorrowTerms& terms, Index j,
                               Index h) {
    counts.check_index(j, h);
    return urn_proportion<double>(static_cast<double>(counts.successes(j, h)),
                                  static_cast<double>(counts.assigned(j, h)), terms.phi_success,
                                  terms.phi_failure, terms.at_infinity);
}

BorrowTerms borrow_vanishing(const CountsTensor& counts, Index j, Index h,
                             const MechanismParams& params) {
    counts.check_index(j, h);
    Count outside = 0;
    for (Index k = 0; k < counts.strata(); ++k) {
        if (k != h) outside += counts.assigned(j, k);
    }
    const double mass = psi_eval(params.psi_kind, static_cast<double>(outside), params.psi_max);
    const double rate = theta_hat_outside(counts, j, h);
    return {rate * mass, (1.0 - rate) * mass};
}

std::vector<Index> similarity_set(const CountsTensor& counts, Index j, Index h, double c) {
    counts.check_index(j, h);
    const double own = theta_hat(counts, j, h);
    std::vector<Index> members;
    for (Index k = 0; k < counts.strata(); ++k) {
        if (k != h && std::abs(theta_hat(counts, j, k) - own) <= c) members.push_back(k);
    }
    return members;
}

BorrowTerms borrow_similarity(const CountsTensor& counts, Index j, Index h, double c) {
    BorrowTerms terms;
    for (Index k : similarity_set(counts, j, h, c)) {
        terms.phi_success += static_cast<double>(counts.successes(j, k));
        terms.phi_failure += static_cast<double>(counts.failures(j, k));
    }
    return terms;
}

BorrowTerms borrow_terms_from_fit(const MleResult& fit) {
    if (fit.status == MleStatus::PooledBoundary) {
        return {fit.mean, 1.0 - fit.mean, true};
    }
    return {fit.alpha, fit.beta, false};
}

namespace {

MleResult fit_or_pool(const AggregatedSample& sample, const MleOptions& opts,
                      const MleResult* previous) {
    try {
        return previous ? refit_mle(sample, opts, *previous) : fit_mle(sample, opts);
    } catch (const SolverError&) {
        MleResult pooled;
        pooled.alpha = pooled.beta = std::numeric_limits<double>::infinity();
        pooled.status = MleStatus::PooledBoundary;
        pooled.mean = static_cast<double>(sample.total_successes()) /
                      static_cast<double>(sample.total_trials());
        pooled.log_likelihood = boundary_supremum(sample);
        return pooled;
    }
}

} // namespace

BorrowTerms borrow_model_based(const CountsTensor& counts, Index j, const MleOptions& opts) {
    return borrow_terms_from_fit(fit_or_pool(AggregatedSample::from_counts(counts, j), opts, nullptr));
}

BorrowTerms borrow_model_clustered(const CountsTensor& counts, Index j, Index h,
                                   const MleResult& fit, const Partition& partition) {
    counts.check_index(j, h);
    if (fit.status == MleStatus::PooledBoundary) return borrow_terms_from_fit(fit);
    BorrowTerms terms{fit.alpha, fit.beta, false};
    for (const auto& block : partition) {
        if (std::find(block.begin(), block.end(), h) == block.end()) continue;
        for (Index k : block) {
            if (k == h) continue;
            terms.phi_success += static_cast<double>(counts.successes(j, k));
            terms.phi_failure += static_cast<double>(counts.failures(j, k));
        }
        break;
    }
    return terms;
}

UrnEvaluator::UrnEvaluator(MechanismParams params) : params_(std::move(params)) {
    validate(params_);
}

void UrnEvaluator::ensure_size(Index treatments) {
    if (static_cast<Index>(cache_.size()) != treatments) {
        cache_.assign(static_cast<std::size_t>(treatments), FitCache{});
    }
}

void UrnEvaluator::invalidate(Index j) {
    if (j >= 0 && static_cast<std::size_t>(j) < cache_.size()) ++cache_[j].pending;
}

void UrnEvaluator::invalidate_all() {
    for (auto& c : cache_) c.forced = true;
}

const Partition& UrnEvaluator::partition_for(const CountsTensor& counts, Index j, Count step,
                                             Partition& scratch) const {
    std::vector<double> rates(counts.strata());
    for (Index h = 0; h < counts.strata(); ++h) rates[h] = theta_hat(counts, j, h);
    scratch = cluster_strata(rates, params_.c_sequence(step));
    return scratch;
}

const MleResult& UrnEvaluator::fit(const CountsTensor& counts, Index j, Count step) {
    ensure_size(counts.treatments());
    counts.check_index(j, 0);
    FitCache& c = cache_[j];
    const bool clustered = params_.variant == Variant::ModelBasedClustered;

    Partition partition;
    if (clustered) {
        partition_for(counts, j, step, partition);
        if (partition != c.partition) c.forced = true;
    }
    const bool stale = c.pending >= params_.refit_every;
    if (c.fit && !c.forced && !stale) return *c.fit;

    AggregatedSample sample = AggregatedSample::from_counts(counts, j);
    if (clustered) {
        sample = aggregate_blocks(sample, partition);
        c.partition = std::move(partition);
    }
    const MleResult* previous = c.fit ? &*c.fit : nullptr;
    c.fit = fit_or_pool(sample, params_.mle, previous);
    c.pending = 0;
    c.forced = false;
    return *c.fit;
}

UrnCell<double> UrnEvaluator::cell(const CountsTensor& counts, Index j, Index h, Count step) {
    counts.check_index(j, h);
    BorrowTerms terms;
    switch (params_.variant) {
    case Variant::NoBorrowing:
        break;
    case Variant::VanishingBorrowing:
        terms = borrow_vanishing(counts, j, h, params_);
        break;
    case Variant::TreatmentSimilarity:
        terms = borrow_similarity(counts, j, h, params_.c_sequence(step));
        break;
    case Variant::ModelBased:
        terms = borrow_terms_from_fit(fit(counts, j, step));
        break;
    case Variant::ModelBasedClustered: {
        const MleResult& f = fit(counts, j, step);
        terms = borrow_model_clustered(counts, j, h, f, cache_[j].partition);
        break;
    }
    }
    return urn_proportion(counts, terms, j, h);
}

UrnProportions UrnEvaluator::all(const CountsTensor& counts, Count step) {
    UrnProportions out{Matrix(counts.treatments(), counts.strata()),
                       Matrix(counts.treatments(), counts.strata())};
    for (Index j = 0; j < counts.treatments(); ++j) {
        for (Index h = 0; h < counts.strata(); ++h) {
            const auto c = cell(counts, j, h, step);
            out.proportion(j, h) = c.proportion;
            out.weight(j, h) = c.weight;
        }
    }
    return out;
}

UrnProportions urn_proportions_all(const CountsTensor& counts, const MechanismParams& params,
                                   Count step) {
    UrnEvaluator evaluator(params);
    return evaluator.all(counts, step);
}

} // namespace iud
