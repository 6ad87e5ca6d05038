#include "hrw/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hrw/errors.hpp"
#include "hrw/group.hpp"
#include "hrw/numerics.hpp"

namespace hrw::kernel {

using nlohmann::json;

// ---------------------------------------------------------------------------
// SeqRule

double SeqRule::value(std::uint64_t j) const {
    switch (kind) {
    case Kind::Constant: return param;
    case Kind::Power: return std::pow(static_cast<double>(j + 1), param);
    case Kind::Geometric: return std::pow(param, static_cast<double>(j));
    }
    return 0.0;
}

double SeqRule::log_value(std::uint64_t j) const {
    switch (kind) {
    case Kind::Constant: return std::log(param);
    case Kind::Power: return param * std::log(static_cast<double>(j + 1));
    case Kind::Geometric: return static_cast<double>(j) * std::log(param);
    }
    return 0.0;
}

double SeqRule::ratio_sup_from(std::uint64_t from) const {
    switch (kind) {
    case Kind::Constant: return 1.0;
    case Kind::Power:
        // (j+2)^b/(j+1)^b is monotone toward 1; sup on {j >= from} sits at the
        // first index for b > 0 and at infinity (=1) for b < 0.
        if (param <= 0.0) return 1.0;
        return std::pow(static_cast<double>(from + 2) / static_cast<double>(from + 1), param);
    case Kind::Geometric: return param;
    }
    return 1.0;
}

double SeqRule::ratio_limit() const { return kind == Kind::Geometric ? param : 1.0; }

bool SeqRule::monotone_nondecreasing() const {
    switch (kind) {
    case Kind::Constant: return true;
    case Kind::Power: return param >= 0.0;
    case Kind::Geometric: return param >= 1.0;
    }
    return false;
}

bool SeqRule::power_sum_finite(double mu) const {
    switch (kind) {
    case Kind::Constant: return false;
    case Kind::Power: return param * mu > 1.0; // p-series
    case Kind::Geometric: return param > 1.0;  // sum eta^{-j mu}
    }
    return false;
}

double SeqRule::power_sum_prefix(double mu, std::uint64_t jmax) const {
    num::KahanSum acc;
    for (std::uint64_t j = 0; j <= jmax; ++j) acc.add(std::pow(value(j), -mu));
    return acc.value();
}

double SeqRule::power_sum_tail_bound(double mu, std::uint64_t from) const {
    if (!power_sum_finite(mu)) return std::numeric_limits<double>::infinity();
    switch (kind) {
    case Kind::Constant: return std::numeric_limits<double>::infinity();
    case Kind::Power: {
        // sum_{j>=from} (j+1)^-p <= integral_from^inf x^-p dx, p = beta*mu > 1
        const double p = param * mu;
        if (from == 0) return 1.0 + 1.0 / (p - 1.0);
        return std::pow(static_cast<double>(from), 1.0 - p) / (p - 1.0);
    }
    case Kind::Geometric: {
        const double q = std::pow(param, -mu);
        return std::pow(q, static_cast<double>(from)) / (1.0 - q);
    }
    }
    return std::numeric_limits<double>::infinity();
}

std::string SeqRule::describe() const {
    std::ostringstream os;
    switch (kind) {
    case Kind::Constant: os << "constant(" << param << ")"; break;
    case Kind::Power: os << "power(beta=" << param << ")"; break;
    case Kind::Geometric: os << "geometric(eta=" << param << ")"; break;
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// WalkSpec

std::optional<double> WalkSpec::geometric_ratio() const {
    if (const auto* g = std::get_if<GeometricLaw>(&law)) return g->c / order;
    const double inv_mu_decay = [&]() -> double {
        if (const auto* mc = std::get_if<MuCLaw>(&law)) return std::pow(order, -1.0 / mc->mu);
        if (const auto* md = std::get_if<MuDLaw>(&law)) return std::pow(order, -1.0 / md->mu);
        return 0.0;
    }();
    const SeqRule* rule = nullptr;
    if (const auto* mc = std::get_if<MuCLaw>(&law)) rule = &mc->cseq;
    if (const auto* md = std::get_if<MuDLaw>(&law)) rule = &md->dseq;
    if (!rule) return std::nullopt;
    switch (rule->kind) {
    case SeqRule::Kind::Constant: return inv_mu_decay;
    case SeqRule::Kind::Geometric: return rule->param * inv_mu_decay;
    case SeqRule::Kind::Power: return std::nullopt;
    }
    return std::nullopt;
}

namespace {

SeqRule rule_from_json(const json& j) {
    SeqRule rule;
    const std::string type = j.at("type").get<std::string>();
    if (type == "constant") {
        rule.kind = SeqRule::Kind::Constant;
        rule.param = j.value("value", 1.0);
    } else if (type == "power") {
        rule.kind = SeqRule::Kind::Power;
        rule.param = j.at("beta").get<double>();
    } else if (type == "geometric") {
        rule.kind = SeqRule::Kind::Geometric;
        rule.param = j.at("eta").get<double>();
    } else {
        throw ValidationError("unknown sequence rule type: " + type);
    }
    if (rule.kind != SeqRule::Kind::Power && rule.param <= 0.0)
        throw ValidationError("sequence rule parameter must be positive");
    return rule;
}

json rule_to_json(const SeqRule& rule) {
    switch (rule.kind) {
    case SeqRule::Kind::Constant: return {{"type", "constant"}, {"value", rule.param}};
    case SeqRule::Kind::Power: return {{"type", "power"}, {"beta", rule.param}};
    case SeqRule::Kind::Geometric: return {{"type", "geometric"}, {"eta", rule.param}};
    }
    return {};
}

} // namespace

WalkSpec WalkSpec::from_json(const json& j) {
    WalkSpec spec;
    const auto n = j.at("N").get<long long>();
    if (n < 2) throw ValidationError("walk spec: N must be an integer >= 2");
    spec.order = static_cast<std::uint32_t>(n);
    const json& law = j.at("law");
    const std::string type = law.at("type").get<std::string>();
    if (type == "explicit") {
        ExplicitLaw ex;
        ex.r = law.at("r").get<std::vector<double>>();
        if (ex.r.empty()) throw ValidationError("explicit law: r must be non-empty");
        spec.law = std::move(ex);
    } else if (type == "geometric") {
        GeometricLaw g;
        g.c = law.at("c").get<double>();
        if (!(g.c > 0.0 && g.c < spec.order))
            throw ValidationError("geometric law: need 0 < c < N");
        spec.law = g;
    } else if (type == "muC") {
        MuCLaw m;
        m.mu = law.at("mu").get<double>();
        if (m.mu <= 0.0) throw ValidationError("muC law: mu must be positive");
        m.cseq = rule_from_json(law.at("cseq"));
        spec.law = m;
    } else if (type == "muD") {
        MuDLaw m;
        m.mu = law.at("mu").get<double>();
        if (m.mu <= 0.0) throw ValidationError("muD law: mu must be positive");
        m.dseq = rule_from_json(law.at("dseq"));
        spec.law = m;
    } else {
        throw ValidationError("unknown law type: " + type);
    }
    return spec;
}

json WalkSpec::to_json() const {
    json law;
    if (const auto* ex = std::get_if<ExplicitLaw>(&this->law)) {
        law = {{"type", "explicit"}, {"r", ex->r}};
    } else if (const auto* g = std::get_if<GeometricLaw>(&this->law)) {
        law = {{"type", "geometric"}, {"c", g->c}};
    } else if (const auto* mc = std::get_if<MuCLaw>(&this->law)) {
        law = {{"type", "muC"}, {"mu", mc->mu}, {"cseq", rule_to_json(mc->cseq)}};
    } else if (const auto* md = std::get_if<MuDLaw>(&this->law)) {
        law = {{"type", "muD"}, {"mu", md->mu}, {"dseq", rule_to_json(md->dseq)}};
    }
    return {{"N", order}, {"law", law}};
}

std::string WalkSpec::describe() const {
    std::ostringstream os;
    os << "N=" << order << " ";
    if (const auto* ex = std::get_if<ExplicitLaw>(&law)) {
        os << "explicit(J=" << ex->r.size() << ")";
    } else if (const auto* g = std::get_if<GeometricLaw>(&law)) {
        os << "geometric(c=" << g->c << ")";
    } else if (const auto* mc = std::get_if<MuCLaw>(&law)) {
        os << "muC(mu=" << mc->mu << ", c_j=" << mc->cseq.describe() << ")";
    } else if (const auto* md = std::get_if<MuDLaw>(&law)) {
        os << "muD(mu=" << md->mu << ", d_j=" << md->dseq.describe() << ")";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// KernelTables accessors

double KernelTables::r_at(std::uint64_t j) const {
    if (j == 0) return 0.0;
    if (j <= r_.size()) return r_[j - 1];
    switch (tail_) {
    case Tail::FiniteSupport: return 0.0;
    case Tail::GeometricTail: return r_[0] * num::pow_int(geo_ratio_, j - 1);
    case Tail::RuleTail:
        if (const auto* mc = std::get_if<MuCLaw>(&spec_.law)) {
            return normalizer_ * mc->cseq.value(j - 1) *
                   std::pow(spec_.order, -static_cast<double>(j - 1) / mc->mu);
        }
        // d-specified law: invert the holding rates on demand.
        {
            const double n = spec_.order;
            num::KahanSum suffix;
            std::uint64_t k = j + 1;
            for (int it = 0; it < 100000; ++it, ++k) {
                const double term = h_at(k) * std::pow(n, -static_cast<double>(k));
                suffix.add(term);
                if (it > 4 && term < 1e-17 * suffix.value()) break;
            }
            return (n - 1.0) / n * h_at(j) -
                   (n - 1.0) * (n - 1.0) / n * std::pow(n, static_cast<double>(j)) *
                       suffix.value();
        }
    }
    return 0.0;
}

double KernelTables::h_at(std::uint64_t j) const {
    if (j == 0) return 0.0;
    if (j <= h_.size()) return h_[j - 1];
    switch (tail_) {
    case Tail::FiniteSupport: return 0.0;
    case Tail::GeometricTail: return geo_hcoef_ * num::pow_int(geo_ratio_, j - 1);
    case Tail::RuleTail:
        if (const auto* md = std::get_if<MuDLaw>(&spec_.law)) {
            return normalizer_ * md->dseq.value(j - 1) *
                   std::pow(spec_.order, -static_cast<double>(j - 1) / md->mu);
        }
        if (const auto* mc = std::get_if<MuCLaw>(&spec_.law)) {
            // h_j = r_j * s_j with s_j = N/(N-1) + sum_{m>=1} (c_{j+m-1}/c_{j-1}) N^{-m/mu}
            const double n = spec_.order;
            const double c0 = mc->cseq.value(j - 1);
            num::KahanSum s;
            for (std::uint64_t m = 1; m < 4000; ++m) {
                const double term = mc->cseq.value(j + m - 1) / c0 *
                                    std::pow(n, -static_cast<double>(m) / mc->mu);
                s.add(term);
                if (m > 4 && term < 1e-22) break;
            }
            return r_at(j) * (n / (n - 1.0) + s.value());
        }
        break;
    }
    return 0.0;
}

double KernelTables::log_h_at(std::uint64_t j) const {
    if (j == 0) return -std::numeric_limits<double>::infinity();
    const double n = spec_.order;
    switch (tail_) {
    case Tail::FiniteSupport:
        return j <= h_.size() ? std::log(h_[j - 1]) : -std::numeric_limits<double>::infinity();
    case Tail::GeometricTail:
        return std::log(geo_hcoef_) + static_cast<double>(j - 1) * std::log(geo_ratio_);
    case Tail::RuleTail:
        if (const auto* md = std::get_if<MuDLaw>(&spec_.law)) {
            return std::log(normalizer_) + md->dseq.log_value(j - 1) -
                   static_cast<double>(j - 1) / md->mu * std::log(n);
        }
        if (const auto* mc = std::get_if<MuCLaw>(&spec_.law)) {
            if (j <= h_.size()) return std::log(h_[j - 1]);
            // log r_j + log s_j; s_j stays O(1)
            const double log_r = std::log(normalizer_) + mc->cseq.log_value(j - 1) -
                                 static_cast<double>(j - 1) / mc->mu * std::log(n);
            num::KahanSum s;
            for (std::uint64_t m = 1; m < 4000; ++m) {
                const double term = std::exp(mc->cseq.log_value(j + m - 1) -
                                             mc->cseq.log_value(j - 1) -
                                             static_cast<double>(m) / mc->mu * std::log(n));
                s.add(term);
                if (m > 4 && term < 1e-22) break;
            }
            return log_r + std::log(n / (n - 1.0) + s.value());
        }
        break;
    }
    return -std::numeric_limits<double>::infinity();
}

double KernelTables::d_at(std::uint64_t j) const {
    if (j < d_.size()) return d_[j];
    if (const auto* md = std::get_if<MuDLaw>(&spec_.law)) return md->dseq.value(j);
    // d_j = h_{j+1} N^{j/mu} / D
    return h_at(j + 1) * std::pow(spec_.order, static_cast<double>(j) / mu_) / normalizer_;
}

double KernelTables::r_tail_from(std::uint64_t j) const {
    if (j == 0) j = 1;
    if (tail_ == Tail::GeometricTail) return num::pow_int(geo_ratio_, j - 1);
    if (j <= r_.size()) {
        // r_suffix_[k-1] = sum_{i=k..J} r_i (accumulated smallest-first);
        // the mass beyond J follows from normalization.
        double beyond = 0.0;
        if (tail_ == Tail::RuleTail) beyond = std::max(0.0, 1.0 - r_suffix_[0]);
        return r_suffix_[j - 1] + beyond;
    }
    if (tail_ == Tail::FiniteSupport) return 0.0;
    // rule tail beyond the table, summed on demand
    num::KahanSum acc;
    for (std::uint64_t k = j; k < j + 4000; ++k) {
        const double term = r_at(k);
        acc.add(term);
        if (k > j + 4 && term < 1e-22 * std::max(acc.value(), 1e-300)) break;
    }
    return acc.value();
}

double KernelTables::h_over_n_tail(std::uint64_t j) const {
    const double n = spec_.order;
    switch (tail_) {
    case Tail::FiniteSupport: {
        num::KahanSum acc;
        for (std::uint64_t k = h_.size(); k > j; --k)
            acc.add(h_[k - 1] * std::pow(n, -static_cast<double>(k)));
        return j >= h_.size() ? 0.0 : acc.value();
    }
    case Tail::GeometricTail: {
        const double ratio = geo_ratio_ / n;
        return geo_hcoef_ * num::pow_int(geo_ratio_, j) * std::pow(n, -static_cast<double>(j + 1)) /
               (1.0 - ratio);
    }
    case Tail::RuleTail: {
        num::KahanSum acc;
        for (std::uint64_t k = j + 1; k < j + 4000; ++k) {
            const double term = h_at(k) * std::pow(n, -static_cast<double>(k));
            acc.add(term);
            if (k > j + 4 && term < 1e-25 * std::max(acc.value(), 1e-300)) break;
        }
        return acc.value();
    }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// build_tables

KernelTables build_tables(const WalkSpec& spec, double eps) {
    if (!(eps > 0.0 && eps <= 1e-6))
        throw ValidationError("build_tables: eps must lie in (0, 1e-6]");
    const double n = spec.order;

    KernelTables t;
    t.spec_ = spec;

    if (const auto* ex = std::get_if<ExplicitLaw>(&spec.law)) {
        for (std::size_t k = 0; k < ex->r.size(); ++k)
            if (!(ex->r[k] > 0.0))
                throw InvalidKernelError("explicit law: r_" + std::to_string(k + 1) +
                                         " must be positive");
        num::KahanSum sum;
        for (double x : ex->r) sum.add(x);
        if (std::fabs(sum.value() - 1.0) > 10.0 * std::numeric_limits<double>::epsilon())
            throw InvalidKernelError("explicit law: jump probabilities must sum to 1");
        t.tail_ = KernelTables::Tail::FiniteSupport;
        t.mu_ = 1.0;
        t.normalizer_ = 1.0;
        t.tail_bound_ = 0.0;
        t.r_ = ex->r;
        t.finish_arrays();
        return t;
    }

    if (auto q_opt = spec.geometric_ratio()) {
        const double q = *q_opt;
        if (!(q < 1.0))
            throw DivergenceError("jump law not normalizable: geometric ratio " +
                                  std::to_string(q) + " >= 1");
        t.tail_ = KernelTables::Tail::GeometricTail;
        t.geo_ratio_ = q;
        t.geo_hcoef_ = (n - q) / (n - 1.0); // holding rate h_j = coef * q^{j-1}
        const auto J = static_cast<std::size_t>(
            std::max(8.0, std::ceil(std::log(eps) / std::log(q)) + 2.0));
        t.r_.resize(J);
        for (std::size_t j = 1; j <= J; ++j) t.r_[j - 1] = (1.0 - q) * num::pow_int(q, j - 1);
        t.tail_bound_ = num::pow_int(q, J);
        if (const auto* mc = std::get_if<MuCLaw>(&spec.law)) {
            t.mu_ = mc->mu;
            t.normalizer_ = t.r_[0] / mc->cseq.value(0);
        } else if (const auto* md = std::get_if<MuDLaw>(&spec.law)) {
            t.mu_ = md->mu;
            t.normalizer_ = t.geo_hcoef_ / md->dseq.value(0);
        } else {
            t.mu_ = 1.0;
            t.normalizer_ = 1.0 - q; // c_j = c^j convention
        }
        t.finish_arrays();
        return t;
    }

    if (const auto* mc = std::get_if<MuCLaw>(&spec.law)) {
        const double mu = mc->mu;
        const double decay = std::pow(n, -1.0 / mu);
        if (mc->cseq.ratio_limit() * decay >= 1.0)
            throw DivergenceError("muC law not normalizable: c-ratio limit >= N^(1/mu)");
        // unnormalized r~_j = c_{j-1} N^{-(j-1)/mu}
        auto rt_at = [&](std::size_t j) {
            return mc->cseq.value(j - 1) * std::pow(n, -static_cast<double>(j - 1) / mu);
        };
        std::vector<double> rt;
        double sum = 0.0;
        std::size_t trunc = 0;
        for (std::size_t j = 1;; ++j) {
            const double v = rt_at(j);
            rt.push_back(v);
            sum += v;
            const double rho = mc->cseq.ratio_sup_from(j - 1) * decay;
            if (rho < 1.0 && j >= 8 && v * rho / (1.0 - rho) < eps * sum) {
                trunc = j;
                break;
            }
            if (j > 200000) throw DivergenceError("muC law: truncation did not converge");
        }
        // sum the analytic tail to machine precision (geometric decay)
        num::KahanSum tail;
        for (std::size_t j = trunc + 1; j < trunc + 400000; ++j) {
            const double v = rt_at(j);
            tail.add(v);
            if (v < 1e-18 * (sum + tail.value())) break;
        }
        t.tail_ = KernelTables::Tail::RuleTail;
        t.mu_ = mu;
        t.normalizer_ = 1.0 / (sum + tail.value());
        t.tail_bound_ = t.normalizer_ * tail.value();
        t.r_.resize(rt.size());
        for (std::size_t i = 0; i < rt.size(); ++i) {
            t.r_[i] = t.normalizer_ * rt[i];
            if (!(t.r_[i] > 0.0))
                throw InvalidKernelError("muC law: r_" + std::to_string(i + 1) +
                                         " is not positive");
        }
        t.finish_arrays();
        return t;
    }

    const auto* md = std::get_if<MuDLaw>(&spec.law);
    const double mu = md->mu;
    const double decay = std::pow(n, -1.0 / mu);
    if (md->dseq.ratio_limit() * decay >= 1.0)
        throw DivergenceError("muD law: d-ratio limit >= N^(1/mu), holding rates not summable");
    // unnormalized h~_j = d_{j-1} N^{-(j-1)/mu}
    auto ht_at = [&](std::size_t j) {
        return md->dseq.value(j - 1) * std::pow(n, -static_cast<double>(j - 1) / mu);
    };
    std::vector<double> ht;
    double hn_sum = 0.0; // sum h~_j N^-j
    std::size_t trunc = 0;
    for (std::size_t j = 1;; ++j) {
        const double v = ht_at(j);
        ht.push_back(v);
        hn_sum += v * std::pow(n, -static_cast<double>(j));
        const double rho_h = md->dseq.ratio_sup_from(j - 1) * decay;
        if (rho_h < 1.0 && j >= 8 &&
            v * std::pow(n, -static_cast<double>(j)) * (rho_h / n) / (1.0 - rho_h / n) <
                eps * hn_sum) {
            trunc = j;
            break;
        }
        if (j > 200000) throw DivergenceError("muD law: truncation did not converge");
    }
    const std::size_t J = trunc;
    // analytic beyond-table tail of sum h~_j N^-j, to machine precision
    // relative to the tail itself (the inversion multiplies it by N^k)
    num::KahanSum hn_tail;
    for (std::size_t j = J + 1; j < J + 400000; ++j) {
        const double v = ht_at(j) * std::pow(n, -static_cast<double>(j));
        hn_tail.add(v);
        if (j > J + 4 && v < 1e-17 * hn_tail.value()) break;
    }
    // total jump mass of the unnormalized kernel: sum_k r~_k = (N-1) sum_j h~_j N^-j
    const double rt_total = (n - 1.0) * (hn_sum + hn_tail.value());
    t.tail_ = KernelTables::Tail::RuleTail;
    t.mu_ = mu;
    t.normalizer_ = 1.0 / rt_total;
    // suffix sums of h~_j N^-j including the beyond-table tail
    std::vector<double> hsuf(J + 2, 0.0);
    hsuf[J + 1] = hn_tail.value();
    for (std::size_t j = J; j >= 1; --j)
        hsuf[j] = hsuf[j + 1] + ht[j - 1] * std::pow(n, -static_cast<double>(j));
    t.r_.resize(J);
    double rt_head = 0.0;
    for (std::size_t k = 1; k <= J; ++k) {
        const double rt_k = (n - 1.0) / n * ht[k - 1] -
                            (n - 1.0) * (n - 1.0) / n * std::pow(n, static_cast<double>(k)) *
                                hsuf[k + 1];
        if (!(rt_k > 0.0))
            throw InvalidKernelError("muD law: recovered r_" + std::to_string(k) +
                                     " is not positive");
        t.r_[k - 1] = rt_k * t.normalizer_;
        rt_head += rt_k;
    }
    t.h_.resize(J);
    for (std::size_t j = 0; j < J; ++j) t.h_[j] = ht[j] * t.normalizer_;
    t.tail_bound_ = std::max(0.0, 1.0 - rt_head * t.normalizer_);
    t.finish_arrays();
    return t;
}

// Completes f, h, s, d and the suffix cache from whatever the law-specific
// branch filled in (always r; h too when analytic).
void KernelTables::finish_arrays() {
    const double n = spec_.order;
    const std::size_t J = r_.size();

    r_suffix_.assign(J + 1, 0.0);
    // r_suffix_[k-1] = sum_{i=k..J} r_i, accumulated smallest-first
    for (std::size_t k = J; k >= 1; --k)
        r_suffix_[k - 1] = (k == J ? 0.0 : r_suffix_[k]) + r_[k - 1];

    const double beyond = tail_ == Tail::GeometricTail
                              ? num::pow_int(geo_ratio_, J)
                              : (tail_ == Tail::RuleTail ? tail_bound_ : 0.0);

    if (h_.empty()) {
        h_.resize(J);
        if (tail_ == Tail::GeometricTail) {
            for (std::size_t j = 1; j <= J; ++j)
                h_[j - 1] = geo_hcoef_ * num::pow_int(geo_ratio_, j - 1);
        } else {
            for (std::size_t j = 1; j <= J; ++j) {
                const double tail_after = (j < J ? r_suffix_[j] : 0.0) + beyond;
                h_[j - 1] = r_[j - 1] * n / (n - 1.0) + tail_after;
            }
        }
    }
    f_.resize(J);
    for (std::size_t j = 0; j < J; ++j) f_[j] = 1.0 - h_[j];
    s_.resize(J);
    for (std::size_t j = 0; j < J; ++j) s_[j] = h_[j] / r_[j];
    d_.resize(J);
    if (const auto* md = std::get_if<MuDLaw>(&spec_.law)) {
        for (std::size_t j = 0; j < J; ++j) d_[j] = md->dseq.value(j);
    } else {
        for (std::size_t j = 0; j < J; ++j)
            d_[j] = h_[j] * std::pow(n, static_cast<double>(j) / mu_) / normalizer_;
    }
}

namespace {

// Number of retained modes so the flat remainder of a mode series is below
// double noise: N^-K < 2^-54.
std::uint64_t plateau_cutoff(double n) {
    return static_cast<std::uint64_t>(std::ceil(54.0 * std::log(2.0) / std::log(n))) + 2;
}

} // namespace

// ---------------------------------------------------------------------------
// transition probabilities

ProbValue pn(const KernelTables& tables, std::uint64_t n_steps, std::uint32_t rad) {
    if (n_steps == 0) throw std::invalid_argument("pn: n must be >= 1");
    const double n = tables.order();
    std::uint64_t j_eff = std::max<std::uint64_t>(tables.truncation_index(), rad);
    j_eff = std::max(j_eff, plateau_cutoff(n));
    if (tables.tail_kind() == KernelTables::Tail::FiniteSupport)
        j_eff = std::max<std::uint64_t>(tables.truncation_index(), rad);

    num::KahanSum acc;
    if (rad >= 1) acc.add(-num::pow_int(tables.f_at(rad), n_steps) *
                          std::pow(n, -static_cast<double>(rad)));
    for (std::uint64_t k = j_eff; k > rad; --k)
        acc.add((n - 1.0) * num::pow_int(tables.f_at(k), n_steps) *
                std::pow(n, -static_cast<double>(k)));
    // beyond j_eff the jump mass is exhausted: f = 1 up to the tail defect
    acc.add(std::pow(n, -static_cast<double>(j_eff)));
    const double err = static_cast<double>(n_steps) * (n - 1.0) * tables.h_over_n_tail(j_eff) +
                       1e-16 * static_cast<double>(j_eff);
    return {acc.value(), err};
}

ProbValue pt(const KernelTables& tables, double t, std::uint32_t rad) {
    if (t < 0.0) throw std::invalid_argument("pt: t must be >= 0");
    const double n = tables.order();
    std::uint64_t j_eff = std::max<std::uint64_t>(tables.truncation_index(), rad);
    j_eff = std::max(j_eff, plateau_cutoff(n));
    if (tables.tail_kind() == KernelTables::Tail::FiniteSupport)
        j_eff = std::max<std::uint64_t>(tables.truncation_index(), rad);

    num::KahanSum acc;
    if (rad >= 1)
        acc.add(-std::exp(-tables.h_at(rad) * t) * std::pow(n, -static_cast<double>(rad)));
    for (std::uint64_t k = j_eff; k > rad; --k)
        acc.add((n - 1.0) * std::exp(-tables.h_at(k) * t) * std::pow(n, -static_cast<double>(k)));
    acc.add(std::pow(n, -static_cast<double>(j_eff)));
    const double err = t * (n - 1.0) * tables.h_over_n_tail(j_eff) + 1e-16 * static_cast<double>(j_eff);
    return {acc.value(), err};
}

ProbValue pt_ball(const KernelTables& tables, double t, std::uint32_t radius) {
    if (t < 0.0) throw std::invalid_argument("pt_ball: t must be >= 0");
    const double n = tables.order();
    // Every mode with index <= R cancels exactly over the closed ball:
    // P_t(0, B_R) = (N-1) N^R sum_{j>R} e^{-h_j t} N^-j.
    std::uint64_t j_eff =
        std::max<std::uint64_t>(tables.truncation_index(), radius + plateau_cutoff(n));
    if (tables.tail_kind() == KernelTables::Tail::FiniteSupport)
        j_eff = std::max<std::uint64_t>(tables.truncation_index(), radius);

    num::KahanSum acc;
    for (std::uint64_t j = j_eff; j > radius; --j)
        acc.add((n - 1.0) * std::exp(-tables.h_at(j) * t) *
                std::pow(n, static_cast<double>(radius) - static_cast<double>(j)));
    acc.add(std::pow(n, static_cast<double>(radius) - static_cast<double>(j_eff)));
    double value = acc.value();
    const double err = t * (n - 1.0) * std::pow(n, static_cast<double>(radius)) *
                       tables.h_over_n_tail(j_eff);
    value = std::min(1.0, std::max(0.0, value));
    return {value, err};
}

// ---------------------------------------------------------------------------
// brute-force oracle

std::uint32_t BruteForceDistribution::state_distance(std::uint64_t index) const {
    std::uint32_t dist = 0;
    for (std::uint32_t pos = 1; index != 0; ++pos) {
        if (index % order != 0) dist = pos;
        index /= order;
    }
    return dist;
}

BruteForceDistribution brute_force_pn(const WalkSpec& spec, std::uint64_t n_steps) {
    const auto* ex = std::get_if<ExplicitLaw>(&spec.law);
    if (!ex) throw UnsupportedSpecError("brute_force_pn: requires an explicit finite law");
    const std::uint32_t n = spec.order;
    const auto levels = static_cast<std::uint32_t>(ex->r.size());
    const std::uint64_t cap = group::default_enumeration_cap();
    std::uint64_t states = 1;
    for (std::uint32_t i = 0; i < levels; ++i) {
        if (states > cap / n) throw CapExceededError("brute_force_pn: N^J exceeds cap");
        states *= n;
    }

    BruteForceDistribution out;
    out.order = n;
    out.levels = levels;

    // one-step law over the finite group
    std::vector<double> step(states, 0.0);
    for (std::uint64_t y = 1; y < states; ++y) {
        const std::uint32_t dist = out.state_distance(y);
        step[y] = ex->r[dist - 1] / static_cast<double>(group::sphere_size(n, dist));
    }

    std::vector<double> v(states, 0.0), w(states, 0.0);
    v[0] = 1.0;
    // index of componentwise difference a - b mod N
    auto diff_index = [&](std::uint64_t a, std::uint64_t b) {
        std::uint64_t out_idx = 0, mult = 1;
        for (std::uint32_t i = 0; i < levels; ++i) {
            const std::uint64_t da = a % n, db = b % n;
            out_idx += ((da + n - db) % n) * mult;
            a /= n;
            b /= n;
            mult *= n;
        }
        return out_idx;
    };
    for (std::uint64_t stepno = 0; stepno < n_steps; ++stepno) {
        std::fill(w.begin(), w.end(), 0.0);
        for (std::uint64_t x = 0; x < states; ++x) {
            if (v[x] == 0.0) continue;
            for (std::uint64_t y = 0; y < states; ++y) w[y] += v[x] * step[diff_index(y, x)];
        }
        std::swap(v, w);
    }
    out.prob = std::move(v);
    return out;
}

// ---------------------------------------------------------------------------
// r_from_h

RecoveredR r_from_h(std::uint32_t order, const std::vector<double>& h,
                    std::optional<double> tail_growth, bool normalize) {
    const double n = order;
    const std::size_t J = h.size();
    if (J == 0) throw std::invalid_argument("r_from_h: empty h sequence");
    for (std::size_t j = 0; j < J; ++j)
        if (!(h[j] > 0.0)) throw std::invalid_argument("r_from_h: h entries must be positive");
    double g = 0.0;
    if (tail_growth) {
        g = *tail_growth;
        if (!(g >= 0.0 && g < n))
            throw DivergenceError("r_from_h: tail growth must lie in [0, N) for summability");
    }

    // suffix sums of h_j N^-j, with the exact geometric tail when declared
    std::vector<double> suf(J + 2, 0.0);
    suf[J + 1] = tail_growth ? h[J - 1] * std::pow(n, -static_cast<double>(J)) * (g / n) /
                                   (1.0 - g / n)
                             : 0.0;
    for (std::size_t j = J; j >= 1; --j)
        suf[j] = suf[j + 1] + h[j - 1] * std::pow(n, -static_cast<double>(j));

    RecoveredR out;
    out.r.resize(J);
    for (std::size_t k = 1; k <= J; ++k) {
        const double rk = (n - 1.0) / n * h[k - 1] -
                          (n - 1.0) * (n - 1.0) / n * std::pow(n, static_cast<double>(k)) *
                              suf[k + 1];
        if (!(rk > 0.0))
            throw InvalidKernelError("r_from_h: recovered r_" + std::to_string(k) +
                                     " is not positive");
        out.r[k - 1] = rk;
    }
    if (normalize) {
        // total jump mass equals (N-1) sum_j h_j N^-j including the tail
        const double total = (n - 1.0) * suf[1];
        out.scale = 1.0 / total;
        for (double& x : out.r) x *= out.scale;
    }
    return out;
}

std::vector<double> c_from_d_mu1(std::uint32_t order, const std::vector<double>& d,
                                 std::optional<double> tail_growth) {
    const double n = order;
    const std::size_t m = d.size();
    if (m == 0) throw std::invalid_argument("c_from_d_mu1: empty d sequence");
    double g = 0.0;
    if (tail_growth) {
        g = *tail_growth;
        if (!(g >= 0.0 && g < n * n))
            throw DivergenceError("c_from_d_mu1: tail growth must lie in [0, N^2)");
    }
    // suffix sums of d_i N^{-2i}, with an exact geometric tail when declared
    std::vector<double> suf(m + 1, 0.0);
    suf[m] = tail_growth ? d[m - 1] * std::pow(n, -2.0 * static_cast<double>(m - 1)) *
                               (g / (n * n)) / (1.0 - g / (n * n))
                         : 0.0;
    for (std::size_t j = m; j >= 1; --j)
        suf[j - 1] = suf[j] + d[j - 1] * std::pow(n, -2.0 * static_cast<double>(j - 1));
    std::vector<double> c(m);
    for (std::size_t j = 0; j < m; ++j) {
        c[j] = (n - 1.0) / n * d[j] -
               (n - 1.0) * (n - 1.0) *
                   std::pow(n, 2.0 * static_cast<double>(j) - 1.0) * suf[j + 1];
        if (!(c[j] > 0.0))
            throw InvalidKernelError("c_from_d_mu1: implied c_" + std::to_string(j) +
                                     " is not positive");
    }
    return c;
}

} // namespace hrw::kernel
