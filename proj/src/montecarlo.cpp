#include "hrw/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "hrw/errors.hpp"
#include "hrw/potential.hpp"

namespace hrw::mc {

using kernel::KernelTables;

// ---------------------------------------------------------------------------
// stats

double EmpiricalStats::ci99_halfwidth() const {
    if (count < 2) return 0.0;
    return 2.5758 * std::sqrt(variance / static_cast<double>(count));
}

EmpiricalStats EmpiricalStats::from_samples(std::span<const double> xs) {
    EmpiricalStats s;
    s.count = xs.size();
    if (xs.empty()) return s;
    s.min = s.max = xs[0];
    double mean = 0.0, m2 = 0.0;
    std::size_t k = 0;
    for (double x : xs) {
        ++k;
        const double delta = x - mean;
        mean += delta / static_cast<double>(k);
        m2 += delta * (x - mean);
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
    }
    s.mean = mean;
    s.variance = xs.size() > 1 ? m2 / static_cast<double>(xs.size() - 1) : 0.0;
    return s;
}

// ---------------------------------------------------------------------------
// jump sampler

JumpSampler::JumpSampler(const KernelTables& tables) : tables_(&tables) {
    if (auto q = tables.spec().geometric_ratio()) {
        geometric_ = true;
        log_ratio_ = std::log(*q);
        return;
    }
    const auto& r = tables.r();
    const std::size_t j_max = r.size();
    head_mass_ = 1.0 - tables.r_tail_from(j_max + 1);
    // Walker alias table over the normalized head.
    std::vector<double> scaled(j_max);
    for (std::size_t i = 0; i < j_max; ++i)
        scaled[i] = r[i] / head_mass_ * static_cast<double>(j_max);
    threshold_.assign(j_max, 1.0);
    alias_.assign(j_max, 0);
    std::vector<std::uint32_t> small, large;
    for (std::uint32_t i = 0; i < j_max; ++i)
        (scaled[i] < 1.0 ? small : large).push_back(i);
    while (!small.empty() && !large.empty()) {
        const std::uint32_t s = small.back();
        small.pop_back();
        const std::uint32_t l = large.back();
        threshold_[s] = scaled[s];
        alias_[s] = l;
        scaled[l] -= 1.0 - scaled[s];
        if (scaled[l] < 1.0) {
            large.pop_back();
            small.push_back(l);
        }
    }
    // rejection envelope for the unbounded tail
    if (tables.tail_kind() == KernelTables::Tail::RuleTail) {
        const kernel::SeqRule* rule = nullptr;
        double mu = 1.0;
        if (const auto* c = std::get_if<kernel::MuCLaw>(&tables.spec().law)) {
            rule = &c->cseq;
            mu = c->mu;
        } else if (const auto* d = std::get_if<kernel::MuDLaw>(&tables.spec().law)) {
            rule = &d->dseq;
            mu = d->mu;
        }
        tail_ratio_ = rule->ratio_sup_from(j_max) * std::pow(tables.order(), -1.0 / mu);
        // r_k <= envelope_coef * tail_ratio^(k - J - 1) for k > J
        const double n = tables.order();
        const double h_next = tables.h_at(j_max + 1);
        tail_envelope_coef_ = (n - 1.0) / n * h_next; // r_k <= (N-1)/N h_k
    }
}

std::uint32_t JumpSampler::sample(Rng& rng) const {
    if (geometric_) {
        const double u = rng.uniform01_open();
        return 1u + static_cast<std::uint32_t>(std::floor(std::log(u) / log_ratio_));
    }
    const auto j_max = static_cast<std::uint32_t>(threshold_.size());
    for (;;) {
        if (rng.uniform01() < head_mass_) {
            const auto idx = static_cast<std::uint32_t>(rng.below(j_max));
            const double v = rng.uniform01();
            return 1u + (v < threshold_[idx] ? idx : alias_[idx]);
        }
        if (tables_->tail_kind() == KernelTables::Tail::FiniteSupport) continue;
        // enveloped rejection on the analytic tail
        for (;;) {
            const double u = rng.uniform01_open();
            const auto m = static_cast<std::uint64_t>(std::floor(std::log(u) / std::log(tail_ratio_)));
            const std::uint64_t k = j_max + 1 + m;
            const double envelope = tail_envelope_coef_ * std::pow(tail_ratio_, static_cast<double>(m));
            const double accept = tables_->r_at(k) / envelope;
            if (rng.uniform01() < accept) return static_cast<std::uint32_t>(k);
        }
    }
}

// ---------------------------------------------------------------------------
// walk state

void WalkState::jump(std::uint32_t dist, Rng& rng) {
    if (dist > digits_.size()) digits_.resize(dist, 0);
    for (std::uint32_t i = 0; i + 1 < dist; ++i) {
        const auto delta = static_cast<std::uint32_t>(rng.below(order_));
        digits_[i] = (digits_[i] + delta) % order_;
    }
    const auto delta = 1u + static_cast<std::uint32_t>(rng.below(order_ - 1));
    digits_[dist - 1] = (digits_[dist - 1] + delta) % order_;
    while (!digits_.empty() && digits_.back() == 0) digits_.pop_back();
}

// ---------------------------------------------------------------------------
// replica runner

namespace {

template <typename Fn>
void run_replicas(std::uint64_t replicas, unsigned threads, Fn&& per_replica) {
    unsigned t = threads == 0 ? std::thread::hardware_concurrency() : threads;
    if (t == 0) t = 1;
    t = static_cast<unsigned>(std::min<std::uint64_t>(t, std::max<std::uint64_t>(replicas, 1)));
    if (t <= 1) {
        for (std::uint64_t k = 0; k < replicas; ++k) per_replica(k);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(t);
    const std::uint64_t chunk = (replicas + t - 1) / t;
    for (unsigned w = 0; w < t; ++w) {
        const std::uint64_t lo = w * chunk;
        const std::uint64_t hi = std::min(replicas, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &per_replica]() {
            for (std::uint64_t k = lo; k < hi; ++k) per_replica(k);
        });
    }
    for (auto& th : pool) th.join();
}

void check_config(const SimConfig& config) {
    if (config.replicas < 1) throw ValidationError("simulation: replicas must be >= 1");
    if (config.scheme == Scheme::Discrete && config.horizon_steps == 0)
        throw ValidationError("simulation: discrete scheme needs horizon_steps > 0");
    if (config.scheme == Scheme::Continuous && !(config.horizon_time > 0.0))
        throw ValidationError("simulation: continuous scheme needs horizon_time > 0");
}

} // namespace

// ---------------------------------------------------------------------------
// simulate

std::vector<PathSummary> simulate(const KernelTables& tables, const SimConfig& config) {
    check_config(config);
    const JumpSampler sampler(tables);
    std::vector<PathSummary> out(config.replicas);

    run_replicas(config.replicas, config.threads, [&](std::uint64_t k) {
        Rng rng(config.seed, k);
        WalkState walk(tables.order());
        PathSummary& ps = out[k];
        ps.replica = k;
        std::uint32_t max_dist = 0;
        std::uint64_t jumps = 0;
        if (config.scheme == Scheme::Discrete) {
            for (std::uint64_t s = 0; s < config.horizon_steps; ++s) {
                const std::uint32_t d = sampler.sample(rng);
                walk.jump(d, rng);
                max_dist = std::max(max_dist, d);
                ++jumps;
            }
            ps.end_time = static_cast<double>(config.horizon_steps);
        } else {
            double t = rng.exponential();
            while (t <= config.horizon_time) {
                const std::uint32_t d = sampler.sample(rng);
                walk.jump(d, rng);
                max_dist = std::max(max_dist, d);
                ++jumps;
                t += rng.exponential();
            }
            ps.end_time = config.horizon_time;
        }
        ps.jumps = jumps;
        ps.end_distance = walk.norm();
        ps.max_distance = std::max(max_dist, walk.norm());
        if (config.track_full) ps.end_position = walk.element().to_string();
    });
    return out;
}

std::vector<std::uint32_t> end_distances(const KernelTables& tables, const SimConfig& config) {
    const auto paths = simulate(tables, config);
    std::vector<std::uint32_t> out(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) out[i] = paths[i].end_distance;
    return out;
}

std::vector<std::vector<std::uint64_t>> distance_transition_counts(const KernelTables& tables,
                                                                   const SimConfig& config,
                                                                   std::uint32_t level_cap) {
    check_config(config);
    if (config.scheme != Scheme::Discrete)
        throw ValidationError("distance_transition_counts: discrete scheme only");
    const JumpSampler sampler(tables);
    const std::uint32_t dim = level_cap + 2; // last bucket collects > cap
    std::vector<std::vector<std::uint64_t>> counts(config.replicas,
                                                   std::vector<std::uint64_t>(dim * dim, 0));

    run_replicas(config.replicas, config.threads, [&](std::uint64_t k) {
        Rng rng(config.seed, k);
        WalkState walk(tables.order());
        auto bucket = [&](std::uint32_t z) { return std::min(z, level_cap + 1); };
        std::uint32_t prev = 0;
        for (std::uint64_t s = 0; s < config.horizon_steps; ++s) {
            walk.jump(sampler.sample(rng), rng);
            const std::uint32_t cur = walk.norm();
            ++counts[k][bucket(prev) * dim + bucket(cur)];
            prev = cur;
        }
    });
    std::vector<std::vector<std::uint64_t>> merged(dim, std::vector<std::uint64_t>(dim, 0));
    for (const auto& c : counts)
        for (std::uint32_t i = 0; i < dim; ++i)
            for (std::uint32_t j = 0; j < dim; ++j) merged[i][j] += c[i * dim + j];
    return merged;
}

// ---------------------------------------------------------------------------
// return time

ReturnTimeEstimate estimate_return_time(const KernelTables& tables, const SimConfig& config) {
    check_config(config);
    if (config.scheme != Scheme::Continuous)
        throw ValidationError("estimate_return_time: continuous scheme only");
    const JumpSampler sampler(tables);
    ReturnTimeEstimate out;
    out.samples.assign(config.replicas, 0.0);
    out.censored.assign(config.replicas, 0);

    run_replicas(config.replicas, config.threads, [&](std::uint64_t k) {
        Rng rng(config.seed, k);
        WalkState walk(tables.order());
        double t = rng.exponential(); // leave the origin after the holding time
        walk.jump(sampler.sample(rng), rng);
        bool returned = false;
        while (t <= config.horizon_time) {
            t += rng.exponential();
            if (t > config.horizon_time) break;
            walk.jump(sampler.sample(rng), rng);
            if (walk.at_origin()) {
                returned = true;
                break;
            }
        }
        if (returned) {
            out.samples[k] = t;
        } else {
            out.samples[k] = config.horizon_time;
            out.censored[k] = 1;
        }
    });

    std::vector<double> finished;
    finished.reserve(config.replicas);
    std::size_t censored_count = 0;
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        if (out.censored[i])
            ++censored_count;
        else
            finished.push_back(out.samples[i]);
    }
    out.censoring_fraction = static_cast<double>(censored_count) /
                             static_cast<double>(config.replicas);
    out.uncensored = EmpiricalStats::from_samples(finished);
    return out;
}

double ReturnTimeEstimate::empirical_survival(double t) const {
    std::size_t above = 0;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (samples[i] > t || (censored[i] && samples[i] >= t)) ++above;
    return static_cast<double>(above) / static_cast<double>(samples.size());
}

// ---------------------------------------------------------------------------
// last exit

LastExitEstimate estimate_last_exit(const KernelTables& tables, const SimConfig& config,
                                    std::uint32_t radius) {
    check_config(config);
    if (config.scheme != Scheme::Continuous)
        throw ValidationError("estimate_last_exit: continuous scheme only");
    const auto green = potential::green_power(tables, 1.0);
    if (!green.finite())
        throw UnsupportedSpecError(
            "estimate_last_exit: last exit times need a certified transient law");
    const JumpSampler sampler(tables);

    LastExitEstimate out;
    out.samples.assign(config.replicas, 0.0);
    out.occupation_samples.assign(config.replicas, 0.0);
    std::vector<char> late(config.replicas, 0);

    run_replicas(config.replicas, config.threads, [&](std::uint64_t k) {
        Rng rng(config.seed, k);
        WalkState walk(tables.order());
        bool inside = true; // starts at the origin
        double last_departure = 0.0;
        bool departed = false;
        double occupied = 0.0;
        double now = 0.0;
        for (;;) {
            const double next = std::min(now + rng.exponential(), config.horizon_time);
            if (inside) occupied += next - now;
            now = next;
            if (now >= config.horizon_time) break;
            walk.jump(sampler.sample(rng), rng);
            const bool now_inside = walk.norm() <= radius;
            if (inside && !now_inside) {
                last_departure = now;
                departed = true;
            }
            inside = now_inside;
        }
        out.occupation_samples[k] = occupied;
        if (inside) {
            out.samples[k] = config.horizon_time; // still in the ball at the horizon
            late[k] = 1;
        } else {
            out.samples[k] = departed ? last_departure : 0.0;
            if (last_departure >= 0.9 * config.horizon_time) late[k] = 1;
        }
    });

    std::size_t late_count = 0;
    for (char c : late) late_count += c;
    out.late_presence_fraction =
        static_cast<double>(late_count) / static_cast<double>(config.replicas);
    out.stats = EmpiricalStats::from_samples(out.samples);
    out.occupation = EmpiricalStats::from_samples(out.occupation_samples);
    return out;
}

double LastExitEstimate::moment(double zeta) const {
    double acc = 0.0;
    for (double x : samples) acc += std::pow(x, zeta);
    return acc / static_cast<double>(samples.size());
}

// ---------------------------------------------------------------------------
// occupation statistic

OccupationResult occupation_statistic(const KernelTables& tables,
                                      std::span<const SupportPoint> weight, double t,
                                      const SimConfig& config) {
    check_config(config);
    if (!(t > 0.0)) throw ValidationError("occupation_statistic: t must be positive");
    if (weight.empty()) throw ValidationError("occupation_statistic: weight has empty support");

    // certified recurrence at mu = 1: inverse d-sums must diverge
    const kernel::SeqRule* rule = nullptr;
    if (const auto* c = std::get_if<kernel::MuCLaw>(&tables.spec().law)) rule = &c->cseq;
    if (const auto* d = std::get_if<kernel::MuDLaw>(&tables.spec().law)) rule = &d->dseq;
    const bool critical_geometric =
        tables.spec().is_geometric() &&
        std::fabs(std::get<kernel::GeometricLaw>(tables.spec().law).c - 1.0) < 1e-12;
    if (!critical_geometric) {
        if (!rule || std::fabs(tables.mu() - 1.0) > 1e-12)
            throw UnsupportedSpecError("occupation_statistic: needs a mu=1 family law");
        if (rule->power_sum_finite(1.0))
            throw UnsupportedSpecError(
                "occupation_statistic: law is transient (inverse d-sums converge)");
    }

    const double n = tables.order();
    double weight_sum = 0.0;
    std::uint32_t support_radius = 0;
    for (const auto& sp : weight) {
        if (sp.point.order() != tables.order())
            throw OrderMismatchError("occupation_statistic: weight support order mismatch");
        weight_sum += sp.value;
        support_radius = std::max(support_radius, sp.point.norm());
    }

    const auto levels = static_cast<std::uint64_t>(std::floor(std::log(t) / std::log(n)));
    double dsum = 0.0;
    for (std::uint64_t j = 0; j <= levels; ++j) dsum += 1.0 / tables.d_at(j);
    const double normalizer =
        n * tables.normalizer() / ((n - 1.0) * weight_sum * dsum);

    const JumpSampler sampler(tables);
    OccupationResult out;
    out.normalizer = normalizer;
    out.samples.assign(config.replicas, 0.0);

    run_replicas(config.replicas, config.threads, [&](std::uint64_t k) {
        Rng rng(config.seed, k);
        WalkState walk(tables.order());
        auto value_at = [&](const WalkState& w) -> double {
            if (w.norm() > support_radius) return 0.0;
            for (const auto& sp : weight) {
                if (w.norm() == sp.point.norm() &&
                    std::equal(w.digits().begin(), w.digits().end(), sp.point.digits().begin()))
                    return sp.value;
            }
            return 0.0;
        };
        double occupation = 0.0;
        double now = 0.0;
        double current_value = value_at(walk);
        for (;;) {
            const double hold = rng.exponential();
            const double next = now + hold;
            const double slice = std::min(next, t) - now;
            if (current_value != 0.0) occupation += current_value * slice;
            if (next >= t) break;
            now = next;
            walk.jump(sampler.sample(rng), rng);
            current_value = value_at(walk);
        }
        out.samples[k] = occupation * normalizer;
    });

    out.ks_exp1 = ks_statistic(out.samples, [](double x) {
        return x <= 0.0 ? 0.0 : 1.0 - std::exp(-x);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.size() < 2)
        throw std::invalid_argument("ks_statistic: need at least two samples");
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double c = cdf(samples[i]);
        d = std::max(d, std::fabs(c - static_cast<double>(i) / n));
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - c));
    }
    return d;
}

} // namespace hrw::mc
