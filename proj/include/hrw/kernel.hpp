#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace hrw::kernel {

// Closed-form positive sequence rule c_0, c_1, ... used by the mu-family
// laws. Each rule knows its consecutive-ratio behaviour and whether
// sum_j value(j)^-mu converges, so degree certificates never have to guess.
struct SeqRule {
    enum class Kind { Constant, Power, Geometric };

    Kind kind = Kind::Constant;
    double param = 1.0; // Constant: the value; Power: beta in (j+1)^beta; Geometric: eta in eta^j

    double value(std::uint64_t j) const;
    double log_value(std::uint64_t j) const;
    // sup of value(j+1)/value(j) over j >= from.
    double ratio_sup_from(std::uint64_t from) const;
    double ratio_limit() const;
    bool monotone_nondecreasing() const;
    // Does sum_j value(j)^-mu converge?
    bool power_sum_finite(double mu) const;
    // sum_{j=0}^{jmax} value(j)^-mu.
    double power_sum_prefix(double mu, std::uint64_t jmax) const;
    // Upper bound on sum_{j>=from} value(j)^-mu; infinity when divergent.
    double power_sum_tail_bound(double mu, std::uint64_t from) const;

    std::string describe() const;
};

struct ExplicitLaw {
    std::vector<double> r; // r[0] = r_1, strictly positive, sums to 1
};

struct GeometricLaw {
    double c = 1.0; // jump-distance ratio c/N, 0 < c < N
};

struct MuCLaw {
    double mu = 1.0;
    SeqRule cseq;
};

struct MuDLaw {
    double mu = 1.0;
    SeqRule dseq;
};

// Declarative description of a jump law on the order-N hierarchical group.
struct WalkSpec {
    std::uint32_t order = 2;
    std::variant<ExplicitLaw, GeometricLaw, MuCLaw, MuDLaw> law;

    bool is_explicit() const { return std::holds_alternative<ExplicitLaw>(law); }
    bool is_geometric() const { return std::holds_alternative<GeometricLaw>(law); }
    bool is_mu_c() const { return std::holds_alternative<MuCLaw>(law); }
    bool is_mu_d() const { return std::holds_alternative<MuDLaw>(law); }

    // When the law is geometric in disguise (explicit geometric law, or a
    // mu-family with constant/geometric rule), the equivalent single ratio
    // q = r_{j+1}/r_j; empty otherwise.
    std::optional<double> geometric_ratio() const;

    static WalkSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    std::string describe() const;
};

// Scalar with an attached truncation-error bound.
struct ProbValue {
    double value = 0.0;
    double error = 0.0;
};

// Derived numeric tables of a jump law, truncated at index J with a bound on
// the neglected mass. All entries are 1-based in j except d, which starts at
// d_0 (d[k] = d_k).
class KernelTables {
public:
    enum class Tail {
        FiniteSupport, // r_j = 0, h_j = 0 exactly beyond J
        GeometricTail, // r_j, h_j exactly geometric for all j
        RuleTail       // mu-family decay governed by the sequence rule
    };

    const WalkSpec& spec() const { return spec_; }
    std::uint32_t order() const { return spec_.order; }
    std::size_t truncation_index() const { return r_.size(); }
    double normalizer() const { return normalizer_; }
    double tail_bound() const { return tail_bound_; }
    double mu() const { return mu_; }
    Tail tail_kind() const { return tail_; }

    const std::vector<double>& r() const { return r_; }
    const std::vector<double>& f() const { return f_; }
    const std::vector<double>& h() const { return h_; }
    const std::vector<double>& s() const { return s_; }
    const std::vector<double>& d() const { return d_; }

    // Entry accessors valid for every j >= 1 (analytic continuation past J).
    double r_at(std::uint64_t j) const;
    double h_at(std::uint64_t j) const;
    // ln h_j, finite even where h_j underflows (FiniteSupport: -inf beyond J)
    double log_h_at(std::uint64_t j) const;
    double f_at(std::uint64_t j) const { return 1.0 - h_at(j); }
    double d_at(std::uint64_t j) const; // d_j, j >= 0

    // sum_{i >= j} r_i.
    double r_tail_from(std::uint64_t j) const;
    // Upper bound on sum_{k > j} h_k / N^k.
    double h_over_n_tail(std::uint64_t j) const;

    friend KernelTables build_tables(const WalkSpec& spec, double eps);

private:
    void finish_arrays();

    WalkSpec spec_;
    Tail tail_ = Tail::FiniteSupport;
    double mu_ = 1.0;
    double normalizer_ = 1.0;
    double tail_bound_ = 0.0;
    double geo_ratio_ = 0.0;  // r_{j+1}/r_j for GeometricTail
    double geo_hcoef_ = 0.0;  // h_j = geo_hcoef_ * geo_ratio_^{j-1}
    std::vector<double> r_, f_, h_, s_, d_;
    std::vector<double> r_suffix_; // r_suffix_[k] = sum_{i=k+1..J} r_{i+1}.. see impl
};

// Builds tables with neglected jump mass below eps (eps in (0, 1e-6]).
KernelTables build_tables(const WalkSpec& spec, double eps = 1e-12);

// Recovers the jump probabilities from a holding-rate sequence h_1..h_J.
// tail_growth, when given, asserts h_{J+m} = h_J * tail_growth^m exactly
// (must be < N); otherwise h vanishes beyond J. With normalize set, the
// output is rescaled so the jump probabilities sum to 1 (the inversion is
// linear in h, so the input scale is immaterial).
struct RecoveredR {
    std::vector<double> r;
    double scale = 1.0; // factor applied during normalization
};
RecoveredR r_from_h(std::uint32_t order, const std::vector<double>& h,
                    std::optional<double> tail_growth = std::nullopt, bool normalize = false);

// mu = 1 cross-check: the c-sequence implied by a d-sequence,
// c_j = (N-1)/N d_j - (N-1)^2 N^{2j-1} sum_{i>j} d_i / N^{2i}
// (the inversion of the suffix relation between jump weights and holding
// rates). The general-mu case has no such closed inversion; tables work
// with the holding rates directly instead.
std::vector<double> c_from_d_mu1(std::uint32_t order, const std::vector<double>& d,
                                 std::optional<double> tail_growth = std::nullopt);

// n-step transition probability to any point at the given distance from the
// start (rad = 0 is the return probability). p^(1) to the origin is 0.
ProbValue pn(const KernelTables& tables, std::uint64_t n, std::uint32_t rad);

// Continuous-time transition probability with unit-rate holding times.
ProbValue pt(const KernelTables& tables, double t, std::uint32_t rad);

// Probability that the continuous-time walk started at the center lies in
// the closed ball of radius R at time t.
ProbValue pt_ball(const KernelTables& tables, double t, std::uint32_t radius);

// Exact n-step distribution of an explicit finitely-supported law over the
// finite group (Z_N)^J, by dense one-step convolution. Oracle-grade.
struct BruteForceDistribution {
    std::uint32_t order = 2;
    std::uint32_t levels = 0;            // J
    std::vector<double> prob;            // indexed by mixed-radix state
    std::uint64_t state_count() const { return prob.size(); }
    // Distance of state index from the origin state.
    std::uint32_t state_distance(std::uint64_t index) const;
};
BruteForceDistribution brute_force_pn(const WalkSpec& spec, std::uint64_t n);

} // namespace hrw::kernel
