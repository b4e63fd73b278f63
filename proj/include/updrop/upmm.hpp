#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "network.hpp"
#include "numeric.hpp"

namespace updrop {

// Mixture hyperparameters and inference knobs. Labels passed to the scoring
// operations in this header are 1-based, matching Dataset.
struct UpmmParams {
  double alpha = 1.0;   // concentration: propensity to open a new architecture
  double beta1 = 1.0;   // similarity exponent
  double beta2 = 1.0;   // likelihood exponent
  double theta = 0.5;   // per-unit keep prior of the base distribution
  double gamma1 = 1.0;  // annealing temperature scale
  double gamma2 = 1.0;  // annealing temperature exponent
  std::size_t new_arch_samples = 16;  // Monte-Carlo samples for the base-measure integral
  std::size_t sweeps_per_update = 2;  // coordinate sweeps per mask refresh
  std::size_t k_max = 0;              // 0 = unlimited; otherwise no spawns at K = k_max
  bool regularized = true;            // include the similarity term in assignment scores
  bool sample_assignment = false;     // training assignment: sample from rho instead of argmax

  void validate() const {
    if (!(alpha > 0.0)) throw UsageError("upmm: alpha must be > 0");
    if (!(beta1 >= 0.0) || !(beta2 >= 0.0)) throw UsageError("upmm: beta1 and beta2 must be >= 0");
    if (!(theta > 0.0 && theta < 1.0)) throw UsageError("upmm: theta must lie in (0, 1)");
    if (!(gamma1 > 0.0)) throw UsageError("upmm: gamma1 must be > 0");
    if (!std::isfinite(gamma2)) throw UsageError("upmm: gamma2 must be finite");
    if (new_arch_samples < 1) throw UsageError("upmm: new_arch_samples must be >= 1");
    if (sweeps_per_update < 1) throw UsageError("upmm: sweeps_per_update must be >= 1");
  }
};

// One mixture component: its mask, the instances currently assigned to it,
// and their feature sum. member_count mirrors members.size() during training;
// deserialized models keep the count without the index list. anchor_mean is
// the last known member mean, used for scoring while members is empty at the
// start of an epoch.
struct ArchitectureState {
  UnitMask mask;
  std::vector<std::size_t> members;
  std::vector<double> feature_sum;
  std::size_t member_count = 0;
  std::vector<double> anchor_mean;

  std::vector<double> mean() const {
    if (member_count == 0) throw UsageError("architecture has no members");
    std::vector<double> m(feature_sum);
    for (double& v : m) v /= double(member_count);
    return m;
  }

  // Mean if any members are assigned, otherwise the anchor.
  std::vector<double> scoring_mean() const {
    if (member_count > 0) return mean();
    if (anchor_mean.empty()) throw UsageError("architecture has neither members nor an anchor mean");
    return anchor_mean;
  }
};

struct UpmmModel {
  NetworkConfig config;
  WeightSet weights;
  std::vector<ArchitectureState> architectures;
  UpmmParams params;

  std::size_t k() const { return architectures.size(); }
};

// Assignment probabilities over K existing architectures plus a new one
// (index K). The masks sampled for the new-architecture integral are kept so
// a subsequent spawn reuses the best of them instead of resampling.
struct NewArchCandidate {
  std::vector<UnitMask> masks;
  std::vector<double> log_liks;
  double log_mean_lik = 0.0;
};

struct AssignmentScores {
  std::vector<double> log_scores;  // length K+1; index K is the new-architecture option
  std::vector<double> rho;         // softmax of log_scores
  NewArchCandidate candidate;      // empty when spawning is disabled by k_max
};

// Existing-cluster and new-cluster prior masses: 1/(K + alpha) each, and
// alpha/(K + alpha) for a new one.
inline std::vector<double> up_prior(std::size_t k, double alpha) {
  if (!(alpha > 0.0)) throw UsageError("up_prior: alpha must be > 0");
  std::vector<double> p(k + 1, 1.0 / (double(k) + alpha));
  p[k] = alpha / (double(k) + alpha);
  return p;
}

// Dimension-normalized log similarity: -||x - m||^2 / D. Always <= 0 and 0
// only at x = m. The normalization keeps the term on a scale commensurate
// with per-instance log-likelihoods regardless of D.
inline double log_similarity_to_mean(std::span<const double> x, std::span<const double> m) {
  if (x.size() != m.size() || x.empty())
    throw StructureError("similarity: vector lengths differ or are zero");
  double dist = 0.0;
  for (std::size_t c = 0; c < x.size(); ++c) {
    double dev = x[c] - m[c];
    dist += dev * dev;
  }
  return -dist / double(x.size());
}

inline double log_similarity(std::span<const double> x, const ArchitectureState& state) {
  if (state.member_count == 0) throw UsageError("log_similarity of an empty architecture");
  return log_similarity_to_mean(x, state.mean());
}

// log f(y | z, W): log of the predicted probability at the true (1-based)
// label under the given mask, floored at log(1e-12).
inline double log_arch_likelihood(std::span<const double> x, std::size_t y, const UnitMask& mask,
                                  const WeightSet& w) {
  if (y < 1 || y > w.config.num_labels) throw StructureError("label out of range [1:L]");
  return log_label_likelihood(y - 1, forward_probs(x, w, mask));
}

// Draws S masks i.i.d. Bernoulli(theta) per bit, bit order m = 0..M-1 within
// each sample, and records the log-likelihood under each.
inline NewArchCandidate sample_new_arch_candidate(std::span<const double> x, std::size_t y,
                                                  const WeightSet& w, const UpmmParams& params,
                                                  std::mt19937_64& rng) {
  params.validate();
  std::size_t m = w.config.total_hidden_units();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  NewArchCandidate cand;
  cand.masks.reserve(params.new_arch_samples);
  cand.log_liks.reserve(params.new_arch_samples);
  for (std::size_t s = 0; s < params.new_arch_samples; ++s) {
    UnitMask mask(m);
    for (std::size_t bit = 0; bit < m; ++bit) mask[bit] = unif(rng) < params.theta ? 1 : 0;
    cand.log_liks.push_back(log_arch_likelihood(x, y, mask, w));
    cand.masks.push_back(std::move(mask));
  }
  cand.log_mean_lik = log_mean_exp(cand.log_liks);
  return cand;
}

// log alpha + log of the S-sample Monte-Carlo estimate of the base-measure
// integral of the likelihood.
inline double log_new_arch_score(std::span<const double> x, std::size_t y, const WeightSet& w,
                                 const UpmmParams& params, std::mt19937_64& rng) {
  return std::log(params.alpha) + sample_new_arch_candidate(x, y, w, params, rng).log_mean_lik;
}

namespace detail {

// Max-shift then divide by the computed sum: the sum of the result is within
// a few ulps of 1 even for scores of magnitude 1e6, where exp(x - lse) loses
// absolute precision to the rounding of lse.
inline std::vector<double> normalize_log_scores(const std::vector<double>& log_scores) {
  double m = *std::max_element(log_scores.begin(), log_scores.end());
  if (std::isinf(m) && m < 0) throw NumericError("all assignment scores are -inf");
  std::vector<double> rho(log_scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    rho[i] = std::exp(log_scores[i] - m);
    sum += rho[i];
  }
  for (double& p : rho) p /= sum;
  return rho;
}

}  // namespace detail

// Scores each existing architecture as beta1 * log s_k + beta2 * log f (or
// plain log f when regularized is false) and the new-architecture option as
// log alpha + the Monte-Carlo integral. The shared 1/(K + alpha) prior factor
// cancels under normalization and is omitted. With k_max reached, the new
// option gets probability zero and no candidate masks are sampled.
inline AssignmentScores assignment_scores(std::span<const double> x, std::size_t y,
                                          const UpmmModel& model, std::mt19937_64& rng,
                                          bool regularized) {
  const UpmmParams& params = model.params;
  params.validate();
  std::size_t k = model.k();
  AssignmentScores out;
  out.log_scores.resize(k + 1);
  for (std::size_t j = 0; j < k; ++j) {
    const ArchitectureState& state = model.architectures[j];
    double log_f = log_arch_likelihood(x, y, state.mask, model.weights);
    if (regularized) {
      std::vector<double> mean = state.scoring_mean();
      out.log_scores[j] = params.beta1 * log_similarity_to_mean(x, mean) + params.beta2 * log_f;
    } else {
      out.log_scores[j] = log_f;
    }
  }
  bool spawn_allowed = params.k_max == 0 || k < params.k_max;
  if (spawn_allowed) {
    out.candidate = sample_new_arch_candidate(x, y, model.weights, params, rng);
    out.log_scores[k] = std::log(params.alpha) + out.candidate.log_mean_lik;
  } else {
    out.log_scores[k] = -std::numeric_limits<double>::infinity();
  }
  out.rho = detail::normalize_log_scores(out.log_scores);
  return out;
}

// Categorical draw from rho; index K selects a new architecture.
inline std::size_t assign(const AssignmentScores& scores, std::mt19937_64& rng) {
  if (scores.rho.empty()) throw UsageError("assign on empty scores");
  double total = 0.0;
  for (double p : scores.rho) {
    if (std::isnan(p) || p < 0.0) throw NumericError("assignment probabilities are degenerate");
    total += p;
  }
  if (std::fabs(total - 1.0) > 1e-9) throw NumericError("assignment probabilities do not sum to 1");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < scores.rho.size(); ++i) {
    if (scores.rho[i] > 0.0) last_positive = i;
    acc += scores.rho[i];
    if (u < acc) return i;
  }
  return last_positive;
}

// Deterministic variant: highest log-score, ties to the lowest index.
inline std::size_t assign_argmax(const AssignmentScores& scores) {
  if (scores.log_scores.empty()) throw UsageError("assign on empty scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.log_scores.size(); ++i)
    if (scores.log_scores[i] > scores.log_scores[best]) best = i;
  return best;
}

// log of the product of independent Bernoulli(theta) bit priors.
inline double log_bernoulli_prior(const UnitMask& mask, double theta) {
  double lp = 0.0;
  for (std::uint8_t bit : mask) lp += bit ? std::log(theta) : std::log1p(-theta);
  return lp;
}

// Unnormalized log posterior of a mask: base-distribution prior plus the sum
// of member log-likelihoods.
inline double log_posterior_score(const UnitMask& mask,
                                  const std::vector<std::span<const double>>& xs,
                                  const std::vector<std::size_t>& ys, const WeightSet& w,
                                  double theta) {
  if (xs.size() != ys.size()) throw StructureError("member features and labels differ in length");
  double score = log_bernoulli_prior(mask, theta);
  for (std::size_t i = 0; i < xs.size(); ++i)
    score += log_arch_likelihood(xs[i], ys[i], mask, w);
  return score;
}

// One annealing acceptance decision. Non-negative deltas are accepted with
// probability 1 and consume no randomness.
inline bool sa_accept(double delta, double temperature, std::mt19937_64& rng) {
  if (delta >= 0.0) return true;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return unif(rng) < std::exp(delta / temperature);
}

// Simulated-annealing MAP refresh of architecture k's mask against its current
// members. Each sweep visits all coordinates in a fresh random permutation;
// the temperature gamma1 * |log nu|^gamma2 is recomputed from the retained
// score after every decision, and the first decision uses the schedule value
// of the initial mask. The final mask is written back into the state.
inline UnitMask update_mask_sa(UpmmModel& model, std::size_t k, const Dataset& data,
                               std::mt19937_64& rng) {
  if (k >= model.k()) throw UsageError("update_mask_sa: no such architecture");
  ArchitectureState& state = model.architectures[k];
  if (state.members.empty()) throw UsageError("update_mask_sa on an empty architecture");
  const UpmmParams& params = model.params;
  params.validate();

  std::vector<std::span<const double>> xs;
  std::vector<std::size_t> ys;
  xs.reserve(state.members.size());
  for (std::size_t i : state.members) {
    xs.push_back(data.row(i));
    ys.push_back(data.y[i]);
  }

  UnitMask mask = state.mask;
  double score = log_posterior_score(mask, xs, ys, model.weights, params.theta);
  double temperature = params.gamma1 * std::pow(std::fabs(score), params.gamma2);

  std::vector<std::size_t> order(mask.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t sweep = 0; sweep < params.sweeps_per_update; ++sweep) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t bit : order) {
      mask[bit] ^= 1;
      double flipped = log_posterior_score(mask, xs, ys, model.weights, params.theta);
      if (sa_accept(flipped - score, temperature, rng)) {
        score = flipped;
      } else {
        mask[bit] ^= 1;  // revert
      }
      temperature = params.gamma1 * std::pow(std::fabs(score), params.gamma2);
    }
  }
  state.mask = mask;
  return mask;
}

// Opens a new architecture for one instance. The initial mask is the best of
// the masks already sampled for the base-measure integral, scored by the
// singleton posterior (prior + that instance's likelihood); ties go to the
// earliest sample.
inline ArchitectureState spawn_architecture(std::span<const double> x, std::size_t instance_index,
                                            const NewArchCandidate& candidate, double theta) {
  if (candidate.masks.empty()) throw UsageError("spawn_architecture without candidate masks");
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < candidate.masks.size(); ++s) {
    double score = log_bernoulli_prior(candidate.masks[s], theta) + candidate.log_liks[s];
    if (score > best_score) {
      best_score = score;
      best = s;
    }
  }
  ArchitectureState state;
  state.mask = candidate.masks[best];
  state.members = {instance_index};
  state.member_count = 1;
  state.feature_sum.assign(x.begin(), x.end());
  state.anchor_mean.assign(x.begin(), x.end());
  return state;
}

struct Prediction {
  std::size_t label = 0;         // 1-based
  std::size_t architecture = 0;  // 0-based index into model.architectures
};

// Scores every architecture as beta1 * log s_k + beta2 * log max(yhat_k) and
// returns that architecture's argmax label. All ties go to the lowest index.
inline Prediction predict(std::span<const double> x, const UpmmModel& model) {
  if (model.k() == 0) throw UsageError("predict on a model with no architectures");
  const UpmmParams& params = model.params;
  Prediction best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < model.k(); ++k) {
    const ArchitectureState& state = model.architectures[k];
    if (state.member_count == 0) throw UsageError("predict with an empty architecture");
    std::vector<double> yhat = forward_probs(x, model.weights, state.mask);
    std::size_t label_idx = 0;
    for (std::size_t l = 1; l < yhat.size(); ++l)
      if (yhat[l] > yhat[label_idx]) label_idx = l;
    double score = params.beta1 * log_similarity_to_mean(x, state.mean()) +
                   params.beta2 * std::log(std::max(yhat[label_idx], 1e-12));
    if (score > best_score) {
      best_score = score;
      best = Prediction{label_idx + 1, k};
    }
  }
  return best;
}

}  // namespace updrop
